//! Mean penalty as more of the team replans, for RECON and its generalised
//! variant on a 10x10 salp instance with eight agents.

use nse_planner::harness::{sweep_fraction, ExperimentConfig, InstanceSource, Method};

fn main() -> nse_planner::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2);
    let config = ExperimentConfig {
        source: InstanceSource::Generated {
            width: 10,
            height: 10,
            count: 1,
            first_seed: seed,
        },
        num_agents: 8,
        methods: vec![Method::Recon, Method::GenReconCf],
        ..Default::default()
    };
    let fractions = [0.0, 0.25, 0.5, 0.75, 1.0];
    let rows = sweep_fraction(&config, &fractions)?;
    println!(
        "{:>8} {:>16} {:>10} {:>8}",
        "fraction", "method", "penalty", "updated"
    );
    for r in rows {
        println!(
            "{:>8} {:>16} {:>10.4} {:>8}",
            r.update_fraction, r.method, r.avg_penalty, r.updated_agents
        );
    }
    Ok(())
}

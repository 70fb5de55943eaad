//! Every method on a few generated salp instances, as CSV on stdout.

use nse_planner::harness::{run_pipeline, write_csv, ExperimentConfig, InstanceSource, Method};

fn main() -> nse_planner::Result<()> {
    let config = ExperimentConfig {
        source: InstanceSource::Generated {
            width: 8,
            height: 8,
            count: 3,
            first_seed: 0,
        },
        num_agents: 5,
        methods: Method::ALL.to_vec(),
        ..Default::default()
    };
    let rows = run_pipeline(&config)?;
    write_csv(&rows, false, std::io::stdout().lock())
}

//! Blame for a team whose naive plans carry samples over coral together,
//! and the local penalties compiled from it.

use nse_planner::domains::{build_models, generate_instance, BuildOptions, DomainKind};
use nse_planner::mdp::{greedy_policy, value_iteration};
use nse_planner::recon::{run_recon, select_agents_for_update};
use nse_planner::world::RolloutConfig;

fn main() -> nse_planner::Result<()> {
    let inst = generate_instance(DomainKind::Salp, 8, 8, 4, 2)?;
    let world = build_models(&inst, &BuildOptions::default())?;
    let policies = world
        .agents
        .iter()
        .map(|a| {
            greedy_policy(
                &a.model,
                &value_iteration(&a.model, a.model.task_reward(), 1e-6)?,
            )
        })
        .collect::<nse_planner::Result<Vec<_>>>()?;

    let outcome = run_recon(
        &world,
        &policies,
        &RolloutConfig::new(4 * inst.diameter(), 20, 0),
        0.0,
        1e-4,
    )?;
    println!(
        "mean penalty per episode: {:.4}, triggered: {}",
        outcome.report.mean_penalty(),
        outcome.triggered
    );

    for (key, entry) in outcome
        .ledger
        .states
        .iter()
        .filter(|(_, e)| e.penalty > 0.0)
        .take(5)
    {
        let shares: Vec<String> = entry
            .agents
            .iter()
            .map(|a| format!("{:.3}", a.blame))
            .collect();
        println!(
            "{key:?}: R = {:.3}, blame [{}]",
            entry.penalty,
            shares.join(", ")
        );
    }
    let totals = outcome.ledger.total_blame();
    println!("total blame per agent: {totals:.3?}");
    println!(
        "half the team replans: {:?}",
        select_agents_for_update(&totals, 0.5)?
    );
    for (a, local) in outcome.local_penalties().iter().enumerate() {
        let blamed = local.iter().filter(|&&p| p > 0.0).count();
        println!("agent {a}: {blamed} local states carry a penalty");
    }
    Ok(())
}

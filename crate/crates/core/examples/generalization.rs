//! Regressing compiled penalties onto (sample, coral) so that coral cells the
//! rollouts never crossed are penalised too.

use nse_planner::counterfactual::AlternativeCache;
use nse_planner::domains::{build_models, generate_instance, BuildOptions, DomainKind};
use nse_planner::generalize::{
    augment_with_counterfactuals, generalized_penalty, observed_samples, train,
};
use nse_planner::mdp::{greedy_policy, value_iteration};
use nse_planner::recon::run_recon;
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

    let features = DomainKind::Salp.generalization_features();
    let observed = observed_samples(&world, &outcome.ledger, &features)?;
    let mut cache = AlternativeCache::new();
    let augmented = augment_with_counterfactuals(
        &world,
        &outcome.ledger,
        &features,
        observed.clone(),
        &mut cache,
    )?;

    for agent in 0..world.num_agents() {
        let plain = train(&features, &observed[agent])?;
        let rich = train(&features, &augmented[agent])?;
        let covered = |p: &[f64]| p.iter().filter(|&&x| x > 0.0).count();
        println!(
            "agent {agent}: {} samples -> {} penalised states; with counterfactuals {} samples -> {}",
            observed[agent].len(),
            covered(&generalized_penalty(&plain, &world, agent)?),
            augmented[agent].len(),
            covered(&generalized_penalty(&rich, &world, agent)?),
        );
        if agent == 0 {
            print!("{}", rich.to_text());
        }
    }
    Ok(())
}

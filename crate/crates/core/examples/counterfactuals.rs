//! Counterfactual neighbours of a joint state in a generated salp world,
//! before and after dropping the unreachable ones.

use nse_planner::counterfactual::{agent_cf_neighbors, counterfactual_neighbors, valid_filter};
use nse_planner::domains::{build_models, generate_instance, BuildOptions, DomainKind};

fn main() -> nse_planner::Result<()> {
    let inst = generate_instance(DomainKind::Salp, 6, 5, 2, 3)?;
    let world = build_models(&inst, &BuildOptions::default())?;
    let key = world.start_key();
    let state = world.joint_state(&key);
    println!("start dynamic values: {:?}", state.dynamic);

    let full = counterfactual_neighbors(&state, &world.schema);
    let valid = valid_filter(&full, &world);
    println!("{} neighbours, {} reachable", full.len(), valid.len());
    for a in 0..world.num_agents() {
        let own = valid_filter(&agent_cf_neighbors(&state, a, &world.schema), &world);
        println!("agent {a}:");
        for n in &own.neighbors {
            println!(
                "  {:?} -> penalty {:.4}",
                n.dynamic[a],
                nse_planner::world::joint_penalty(n, &world.penalty)?
            );
        }
    }
    Ok(())
}

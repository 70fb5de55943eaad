//! Generate one instance per domain, print it and the size of its models.

use nse_planner::domains::{
    build_models, generate_instance, serialize_instance, BuildOptions, DomainKind,
};

fn main() -> nse_planner::Result<()> {
    for domain in DomainKind::ALL {
        let inst = generate_instance(domain, 9, 6, 3, 1)?;
        print!("{}", serialize_instance(&inst));
        let world = build_models(&inst, &BuildOptions::default())?;
        let states: Vec<usize> = world.agents.iter().map(|a| a.space.len()).collect();
        let reachable: Vec<usize> = world
            .agents
            .iter()
            .map(|a| (0..a.space.len()).filter(|&s| a.is_reachable(s)).count())
            .collect();
        println!(
            "# states per agent {states:?}, reachable {reachable:?}, max penalty {:.4}\n",
            world.max_penalty()
        );
    }
    Ok(())
}

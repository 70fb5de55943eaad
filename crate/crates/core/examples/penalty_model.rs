//! The logarithmic joint penalty: how it grows with the number of agents
//! sharing a penalised value, and its largest possible value.

use nse_planner::world::{max_penalty, PenaltyModel, PenaltyTerm};

fn main() -> nse_planner::Result<()> {
    // feature 0: sample {none, A, B}; feature 1: coral {no, yes}
    let model = PenaltyModel::with_domains(
        vec![3, 2],
        vec![1.0, 1.0],
        vec![
            PenaltyTerm::new(0, 1, 5.0).when(1, 1),
            PenaltyTerm::new(0, 2, 3.0).when(1, 1),
        ],
    )?;
    let a_on_coral = [Some(1), Some(1)];
    let b_on_coral = [Some(2), Some(1)];
    let a_elsewhere = [Some(1), Some(0)];

    for n in 0..=4 {
        let agents = vec![&a_on_coral[..]; n];
        println!(
            "{n} agents carrying A over coral: {:.4}",
            model.penalty_from_counts(&model.counts(agents))
        );
    }
    let mixed = [&a_on_coral[..], &b_on_coral[..], &a_elsewhere[..]];
    println!(
        "A and B over coral, one A elsewhere: {:.4}",
        model.penalty_from_counts(&model.counts(mixed))
    );
    for m in [1, 2, 5, 10] {
        println!("max penalty with {m} agents: {:.4}", max_penalty(&model, m));
    }
    Ok(())
}

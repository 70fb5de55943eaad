//! Value iteration on a hand-built four-state corridor with a slippery step.

use nse_planner::mdp::{
    greedy_policy, policy_evaluation, value_iteration, AgentTaskModel, Outcome, RewardMap,
};

fn main() -> nse_planner::Result<()> {
    // 0 -> 1 -> 2 -> 3 (goal). Action 0 moves right, action 1 stays.
    // Moving out of state 1 slips back half the time.
    let right = |s: usize| vec![Outcome::certain(s + 1)];
    let transitions = vec![
        vec![right(0), vec![Outcome::certain(0)]],
        vec![
            vec![
                Outcome {
                    target: 2,
                    probability: 0.5,
                },
                Outcome {
                    target: 1,
                    probability: 0.5,
                },
            ],
            vec![Outcome::certain(1)],
        ],
        vec![right(2), vec![Outcome::certain(2)]],
        vec![vec![Outcome::certain(3)], vec![Outcome::certain(3)]],
    ];
    let reward = RewardMap::new(vec![
        vec![-0.1, -0.1],
        vec![-0.1, -0.1],
        vec![1.0, -0.1],
        vec![0.0, 0.0],
    ]);
    let model = AgentTaskModel::new(
        transitions,
        reward,
        0,
        0.95,
        vec![false, false, false, true],
    )?;

    let table = value_iteration(&model, model.task_reward(), 1e-9)?;
    let policy = greedy_policy(&model, &table)?;
    for s in 0..model.num_states() {
        println!(
            "state {s}: V = {:+.4}, action {}",
            table.value(s),
            policy.actions()[s]
        );
    }
    let exact = policy_evaluation(&model, &policy, model.task_reward(), 1e-12)?;
    println!("start value by policy evaluation: {:+.6}", exact.value(0));
    Ok(())
}

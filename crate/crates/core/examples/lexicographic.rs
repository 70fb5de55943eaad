//! Two equally fast routes, one over a penalised cell: lexicographic value
//! iteration keeps the task value and picks the clean route.

use nse_planner::lexi::{solve_lexicographic, LexicographicProblem};
use nse_planner::mdp::{
    greedy_policy, policy_evaluation, value_iteration, AgentTaskModel, Outcome, RewardMap,
};

fn main() -> nse_planner::Result<()> {
    // 0 --a0--> 1 (dirty) --> 3 (goal)
    // 0 --a1--> 2 (clean) --> 3
    let go = |t: usize| vec![Outcome::certain(t)];
    let transitions = vec![
        vec![go(1), go(2)],
        vec![go(3), go(3)],
        vec![go(3), go(3)],
        vec![go(3), go(3)],
    ];
    let reward = RewardMap::new(vec![
        vec![-0.01, -0.01],
        vec![1.0, 1.0],
        vec![1.0, 1.0],
        vec![0.0, 0.0],
    ]);
    let model = AgentTaskModel::new(
        transitions,
        reward,
        0,
        0.95,
        vec![false, false, false, true],
    )?;
    let penalty = [0.0, 2.0, 0.0, 0.0];

    let naive = greedy_policy(&model, &value_iteration(&model, model.task_reward(), 1e-9)?)?;
    println!("task-only policy at start: action {}", naive.actions()[0]);

    for slack in [0.0, 0.5] {
        let problem = LexicographicProblem::new(&model, &penalty, slack)?;
        let sol = solve_lexicographic(&problem, 1e-9)?;
        let task = policy_evaluation(&model, &sol.policy, model.task_reward(), 1e-12)?.value(0);
        println!(
            "slack {slack}: action {} allowed {:?}, task value {task:+.4}, penalty value {:+.4}",
            sol.policy.actions()[0],
            sol.allowed.allowed(0),
            sol.penalty_values.value(0)
        );
    }
    Ok(())
}

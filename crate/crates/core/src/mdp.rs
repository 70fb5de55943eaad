//! Tabular single-agent MDPs and the exact dynamic-programming solvers each
//! agent uses to plan for its own task.
//!
//! States and actions are dense indices. Every state owns its own action list
//! (`transitions[state][action]`), so action counts may differ between states.

use crate::error::{Error, Result};
use crate::lexi::RestrictedActionSets;

/// Probability mass tolerance for transition rows.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;
/// Tolerance under which two Q-values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Default convergence threshold for value iteration.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

const MAX_SWEEPS: usize = 1_000_000;

/// One outcome of taking an action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub target: usize,
    pub probability: f64,
}

impl Outcome {
    pub fn certain(target: usize) -> Self {
        Outcome {
            target,
            probability: 1.0,
        }
    }
}

/// A reward for every (state, action) pair, stored per state.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMap(Vec<Vec<f64>>);

impl RewardMap {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        RewardMap(rows)
    }

    pub fn zeros(model: &AgentTaskModel) -> Self {
        RewardMap(
            model
                .transitions
                .iter()
                .map(|row| vec![0.0; row.len()])
                .collect(),
        )
    }

    /// Penalties are stored as negated rewards so the max-form Bellman
    /// backup minimises them: `reward(s, a) = -penalty[s]` for every action.
    pub fn from_state_penalty(model: &AgentTaskModel, penalty: &[f64]) -> Self {
        RewardMap(
            model
                .transitions
                .iter()
                .zip(penalty)
                .map(|(row, &p)| vec![-p; row.len()])
                .collect(),
        )
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.0[state][action]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    fn check_against(&self, model: &AgentTaskModel) -> Result<()> {
        if self.0.len() != model.num_states() {
            return Err(Error::Input(format!(
                "reward covers {} states, model has {}",
                self.0.len(),
                model.num_states()
            )));
        }
        for (s, (row, actions)) in self.0.iter().zip(&model.transitions).enumerate() {
            if row.len() != actions.len() {
                return Err(Error::Input(format!(
                    "reward row for state {s} has {} entries, state has {} actions",
                    row.len(),
                    actions.len()
                )));
            }
            if let Some(a) = row.iter().position(|r| !r.is_finite()) {
                return Err(Error::Input(format!(
                    "non-finite reward at state {s}, action {a}"
                )));
            }
        }
        Ok(())
    }
}

/// One agent's task MDP: transitions, task reward `R_1`, start state and
/// discount. Absorbing task-complete states are flagged as terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTaskModel {
    transitions: Vec<Vec<Vec<Outcome>>>,
    task_reward: RewardMap,
    start_state: usize,
    discount: f64,
    terminal: Vec<bool>,
}

impl AgentTaskModel {
    pub fn new(
        transitions: Vec<Vec<Vec<Outcome>>>,
        task_reward: RewardMap,
        start_state: usize,
        discount: f64,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        let n = transitions.len();
        if n == 0 {
            return Err(Error::Model("empty state space".into()));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::Model(format!("discount {discount} outside [0, 1)")));
        }
        if start_state >= n {
            return Err(Error::Model(format!(
                "start state {start_state} out of range"
            )));
        }
        if terminal.len() != n {
            return Err(Error::Model(
                "terminal flags do not cover every state".into(),
            ));
        }
        for (s, actions) in transitions.iter().enumerate() {
            if actions.is_empty() {
                return Err(Error::Model(format!("state {s} has no actions")));
            }
            for (a, row) in actions.iter().enumerate() {
                let mut total = 0.0;
                for o in row {
                    if o.target >= n {
                        return Err(Error::Model(format!(
                            "transition ({s}, {a}) targets unknown state {}",
                            o.target
                        )));
                    }
                    if !(o.probability >= 0.0) {
                        return Err(Error::Model(format!(
                            "negative probability in transition ({s}, {a})"
                        )));
                    }
                    total += o.probability;
                }
                if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::Model(format!(
                        "transition row ({s}, {a}) sums to {total}"
                    )));
                }
            }
        }
        let model = AgentTaskModel {
            transitions,
            task_reward,
            start_state,
            discount,
            terminal,
        };
        model.task_reward.check_against(&model)?;
        Ok(model)
    }

    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn num_actions(&self, state: usize) -> usize {
        self.transitions[state].len()
    }

    pub fn outcomes(&self, state: usize, action: usize) -> &[Outcome] {
        &self.transitions[state][action]
    }

    pub fn task_reward(&self) -> &RewardMap {
        &self.task_reward
    }

    pub fn start_state(&self) -> usize {
        self.start_state
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    /// States reachable from the start state under any action sequence.
    pub fn reachable_from_start(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack = vec![self.start_state];
        seen[self.start_state] = true;
        while let Some(s) = stack.pop() {
            for row in &self.transitions[s] {
                for o in row {
                    if o.probability > 0.0 && !seen[o.target] {
                        seen[o.target] = true;
                        stack.push(o.target);
                    }
                }
            }
        }
        seen
    }

    /// Same model with states renamed by `perm` (old index -> new index).
    pub fn relabeled(&self, perm: &[usize]) -> Result<AgentTaskModel> {
        let n = self.num_states();
        if perm.len() != n {
            return Err(Error::Input("permutation length mismatch".into()));
        }
        let mut transitions = vec![Vec::new(); n];
        let mut reward = vec![Vec::new(); n];
        let mut terminal = vec![false; n];
        for old in 0..n {
            let new = perm[old];
            transitions[new] = self.transitions[old]
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|o| Outcome {
                            target: perm[o.target],
                            probability: o.probability,
                        })
                        .collect()
                })
                .collect();
            reward[new] = self.task_reward.0[old].clone();
            terminal[new] = self.terminal[old];
        }
        AgentTaskModel::new(
            transitions,
            RewardMap(reward),
            perm[self.start_state],
            self.discount,
            terminal,
        )
    }

    fn q_value(&self, reward: &RewardMap, values: &[f64], state: usize, action: usize) -> f64 {
        let future: f64 = self.transitions[state][action]
            .iter()
            .map(|o| o.probability * values[o.target])
            .sum();
        reward.0[state][action] + self.discount * future
    }
}

/// State values together with the Q-values they were backed up from.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub values: Vec<f64>,
    pub q_values: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn value(&self, state: usize) -> f64 {
        self.values[state]
    }

    pub fn q(&self, state: usize, action: usize) -> f64 {
        self.q_values[state][action]
    }
}

/// Deterministic policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(actions: Vec<usize>) -> Self {
        Policy { actions }
    }

    pub fn action(&self, state: usize) -> Option<usize> {
        self.actions.get(state).copied()
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    fn check_against(&self, model: &AgentTaskModel) -> Result<()> {
        if self.actions.len() != model.num_states() {
            return Err(Error::Contract(format!(
                "policy covers {} states, model has {}",
                self.actions.len(),
                model.num_states()
            )));
        }
        for (s, &a) in self.actions.iter().enumerate() {
            if a >= model.num_actions(s) {
                return Err(Error::Contract(format!(
                    "policy picks action {a} at state {s}, which has {} actions",
                    model.num_actions(s)
                )));
            }
        }
        Ok(())
    }
}

fn check_tolerance(tolerance: f64) -> Result<()> {
    if tolerance > 0.0 && tolerance.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "tolerance must be positive, got {tolerance}"
        )))
    }
}

/// Optimal values for `reward` by synchronous Bellman backups. Stops once the
/// max-norm change between sweeps falls to `tolerance` or below.
pub fn value_iteration(
    model: &AgentTaskModel,
    reward: &RewardMap,
    tolerance: f64,
) -> Result<ValueTable> {
    value_iteration_restricted(model, reward, None, tolerance)
}

/// Value iteration where the max at each state ranges only over `allowed`.
pub fn value_iteration_restricted(
    model: &AgentTaskModel,
    reward: &RewardMap,
    allowed: Option<&RestrictedActionSets>,
    tolerance: f64,
) -> Result<ValueTable> {
    check_tolerance(tolerance)?;
    reward.check_against(model)?;
    if let Some(sets) = allowed {
        sets.check_against(model)?;
    }
    let n = model.num_states();
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let best = match allowed {
                Some(sets) => sets
                    .allowed(s)
                    .iter()
                    .map(|&a| model.q_value(reward, &values, s, a))
                    .fold(f64::NEG_INFINITY, f64::max),
                None => (0..model.num_actions(s))
                    .map(|a| model.q_value(reward, &values, s, a))
                    .fold(f64::NEG_INFINITY, f64::max),
            };
            delta = delta.max((best - values[s]).abs());
            next[s] = best;
        }
        std::mem::swap(&mut values, &mut next);
        if delta <= tolerance {
            let q_values = (0..n)
                .map(|s| {
                    (0..model.num_actions(s))
                        .map(|a| model.q_value(reward, &values, s, a))
                        .collect()
                })
                .collect();
            return Ok(ValueTable { values, q_values });
        }
    }
    Err(Error::Invariant(format!(
        "value iteration did not reach tolerance {tolerance} in {MAX_SWEEPS} sweeps"
    )))
}

/// Lowest-index action whose Q-value is within [`TIE_TOLERANCE`] of the max.
pub fn argmax_lowest(q: &[f64], candidates: impl Iterator<Item = usize> + Clone) -> Option<usize> {
    let best = candidates
        .clone()
        .map(|a| q[a])
        .fold(f64::NEG_INFINITY, f64::max);
    candidates
        .into_iter()
        .find(|&a| best - q[a] <= TIE_TOLERANCE)
}

/// Greedy policy with respect to `table`, ties broken by lowest action index.
pub fn greedy_policy(model: &AgentTaskModel, table: &ValueTable) -> Result<Policy> {
    greedy_policy_restricted(model, table, None)
}

pub fn greedy_policy_restricted(
    model: &AgentTaskModel,
    table: &ValueTable,
    allowed: Option<&RestrictedActionSets>,
) -> Result<Policy> {
    if table.q_values.len() != model.num_states() {
        return Err(Error::Input("value table does not match model".into()));
    }
    let mut actions = Vec::with_capacity(model.num_states());
    for s in 0..model.num_states() {
        let q = &table.q_values[s];
        let choice = match allowed {
            Some(sets) => argmax_lowest(q, sets.allowed(s).iter().copied()),
            None => argmax_lowest(q, 0..q.len()),
        };
        actions.push(choice.ok_or_else(|| Error::Model(format!("state {s} has no actions")))?);
    }
    Ok(Policy { actions })
}

/// Value of following `policy` under `reward`, iterated to a max-norm change
/// of at most `tolerance`.
pub fn policy_evaluation(
    model: &AgentTaskModel,
    policy: &Policy,
    reward: &RewardMap,
    tolerance: f64,
) -> Result<ValueTable> {
    check_tolerance(tolerance)?;
    reward.check_against(model)?;
    policy.check_against(model)?;
    let n = model.num_states();
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let v = model.q_value(reward, &values, s, policy.actions[s]);
            delta = delta.max((v - values[s]).abs());
            next[s] = v;
        }
        std::mem::swap(&mut values, &mut next);
        if delta <= tolerance {
            let q_values = (0..n)
                .map(|s| {
                    (0..model.num_actions(s))
                        .map(|a| model.q_value(reward, &values, s, a))
                        .collect()
                })
                .collect();
            return Ok(ValueTable { values, q_values });
        }
    }
    Err(Error::Invariant(format!(
        "policy evaluation did not reach tolerance {tolerance}"
    )))
}

/// Max-norm Bellman optimality residual of `table` under `reward`.
pub fn bellman_residual(model: &AgentTaskModel, reward: &RewardMap, table: &ValueTable) -> f64 {
    (0..model.num_states())
        .map(|s| {
            let best = (0..model.num_actions(s))
                .map(|a| model.q_value(reward, &table.values, s, a))
                .fold(f64::NEG_INFINITY, f64::max);
            (best - table.values[s]).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// One state with a single self-loop action paying `reward`.
    pub fn self_loop(reward: f64, discount: f64) -> AgentTaskModel {
        AgentTaskModel::new(
            vec![vec![vec![Outcome::certain(0)]]],
            RewardMap::new(vec![vec![reward]]),
            0,
            discount,
            vec![false],
        )
        .unwrap()
    }

    /// States 0 -> 1 -> 2 with action 0 = left, action 1 = right. Entering
    /// the absorbing state 2 pays 1.
    pub fn chain(discount: f64) -> AgentTaskModel {
        let left = |s: usize| Outcome::certain(s.saturating_sub(1));
        let right = |s: usize| Outcome::certain((s + 1).min(2));
        let transitions = vec![
            vec![vec![left(0)], vec![right(0)]],
            vec![vec![left(1)], vec![right(1)]],
            vec![vec![Outcome::certain(2)], vec![Outcome::certain(2)]],
        ];
        let reward = RewardMap::new(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]);
        AgentTaskModel::new(transitions, reward, 0, discount, vec![false, false, true]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn zero_reward_is_a_fixed_point() {
        let m = self_loop(0.0, 0.9);
        let t = value_iteration(&m, &RewardMap::zeros(&m), 1e-6).unwrap();
        assert_eq!(t.values, vec![0.0]);
    }

    #[test]
    fn self_loop_matches_geometric_series() {
        let m = self_loop(1.0, 0.9);
        let t = value_iteration(&m, m.task_reward(), 1e-8).unwrap();
        assert!((t.value(0) - 10.0).abs() < 1e-6, "{}", t.value(0));
    }

    /// 0 -(a1)-> 1 -> 2 (goal, pays 1 once) -> 3 (sink). Action 0 at
    /// state 0 detours through state 4 first.
    fn goal_line() -> AgentTaskModel {
        let c = Outcome::certain;
        let transitions = vec![
            vec![vec![c(4)], vec![c(1)]],
            vec![vec![c(2)], vec![c(2)]],
            vec![vec![c(3)], vec![c(3)]],
            vec![vec![c(3)], vec![c(3)]],
            vec![vec![c(1)], vec![c(1)]],
        ];
        let mut reward = vec![vec![0.0, 0.0]; 5];
        reward[2] = vec![1.0, 1.0];
        AgentTaskModel::new(
            transitions,
            RewardMap::new(reward),
            0,
            0.95,
            vec![false, false, false, true, false],
        )
        .unwrap()
    }

    #[test]
    fn chain_start_value_is_two_discounted_steps() {
        let m = goal_line();
        let t = value_iteration(&m, m.task_reward(), 1e-9).unwrap();
        assert!((t.value(0) - 0.9025).abs() < 1e-9, "{}", t.value(0));
    }

    #[test]
    fn detour_costs_one_discount_factor() {
        let m = goal_line();
        let detour = Policy::new(vec![0, 0, 0, 0, 0]);
        let v = policy_evaluation(&m, &detour, m.task_reward(), 1e-12).unwrap();
        assert!((v.value(0) - 0.95f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn residual_is_within_tolerance() {
        let m = chain(0.9);
        let t = value_iteration(&m, m.task_reward(), 1e-6).unwrap();
        assert!(bellman_residual(&m, m.task_reward(), &t) <= 1e-6);
        for s in 0..3 {
            let best = t.q_values[s]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((best - t.values[s]).abs() < 1e-6);
        }
    }

    #[test]
    fn greedy_breaks_ties_by_lowest_index() {
        assert_eq!(argmax_lowest(&[1.0, 1.0], 0..2), Some(0));
        assert_eq!(argmax_lowest(&[0.2, 0.7], 0..2), Some(1));
    }

    #[test]
    fn greedy_chain_policy_moves_right_and_matches_enumeration() {
        let m = chain(0.95);
        let t = value_iteration(&m, m.task_reward(), 1e-9).unwrap();
        let pi = greedy_policy(&m, &t).unwrap();
        assert_eq!(pi.action(0), Some(1));
        assert_eq!(pi.action(1), Some(1));
        // brute force every deterministic policy
        let mut best = f64::NEG_INFINITY;
        for code in 0..8usize {
            let p = Policy::new((0..3).map(|s| (code >> s) & 1).collect());
            let v = policy_evaluation(&m, &p, m.task_reward(), 1e-12).unwrap();
            best = best.max(v.value(0));
        }
        let v = policy_evaluation(&m, &pi, m.task_reward(), 1e-12).unwrap();
        assert!((v.value(0) - best).abs() < 1e-12);
    }

    #[test]
    fn policy_evaluation_examples() {
        let m = self_loop(1.0, 0.9);
        let pi = Policy::new(vec![0]);
        let zero = policy_evaluation(&m, &pi, &RewardMap::zeros(&m), 1e-6).unwrap();
        assert_eq!(zero.values, vec![0.0]);
        let v = policy_evaluation(&m, &pi, m.task_reward(), 1e-9).unwrap();
        assert!((v.value(0) - 10.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_rows_and_rewards() {
        let err = AgentTaskModel::new(
            vec![vec![vec![Outcome {
                target: 0,
                probability: 0.5,
            }]]],
            RewardMap::new(vec![vec![0.0]]),
            0,
            0.9,
            vec![false],
        );
        assert!(matches!(err, Err(Error::Model(_))));
        let m = self_loop(0.0, 0.9);
        let bad = RewardMap::new(vec![vec![f64::NAN]]);
        assert!(matches!(
            value_iteration(&m, &bad, 1e-6),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            value_iteration(&m, m.task_reward(), 0.0),
            Err(Error::Input(_))
        ));
        let empty = AgentTaskModel::new(
            vec![vec![]],
            RewardMap::new(vec![vec![]]),
            0,
            0.9,
            vec![false],
        );
        assert!(matches!(empty, Err(Error::Model(_))));
    }

    #[test]
    fn evaluation_of_greedy_matches_vi() {
        let m = chain(0.9);
        let t = value_iteration(&m, m.task_reward(), 1e-6).unwrap();
        let pi = greedy_policy(&m, &t).unwrap();
        let v = policy_evaluation(&m, &pi, m.task_reward(), 1e-6).unwrap();
        for s in 0..3 {
            assert!((v.value(s) - t.value(s)).abs() <= 1e-5);
        }
    }
}

//! Two-objective lexicographic value iteration: the task reward first, the
//! (negated) side-effect penalty second.
//!
//! Sign convention: the second objective is a penalty `p(s) >= 0` stored as
//! the reward `-p(s)`, so both stages maximise.

use crate::error::{Error, Result};
use crate::mdp::{
    greedy_policy_restricted, value_iteration, value_iteration_restricted, AgentTaskModel, Policy,
    RewardMap, ValueTable, TIE_TOLERANCE,
};

/// Actions that survive the slack filter at every state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedActionSets {
    allowed: Vec<Vec<usize>>,
}

impl RestrictedActionSets {
    pub fn new(allowed: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(s) = allowed.iter().position(Vec::is_empty) {
            return Err(Error::Invariant(format!(
                "empty restricted action set at state {s}"
            )));
        }
        Ok(RestrictedActionSets { allowed })
    }

    /// Every action at every state.
    pub fn unrestricted(model: &AgentTaskModel) -> Self {
        RestrictedActionSets {
            allowed: (0..model.num_states())
                .map(|s| (0..model.num_actions(s)).collect())
                .collect(),
        }
    }

    pub fn allowed(&self, state: usize) -> &[usize] {
        &self.allowed[state]
    }

    pub fn num_states(&self) -> usize {
        self.allowed.len()
    }

    pub(crate) fn check_against(&self, model: &AgentTaskModel) -> Result<()> {
        if self.allowed.len() != model.num_states() {
            return Err(Error::Input(
                "restricted action sets do not match model".into(),
            ));
        }
        for (s, set) in self.allowed.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::Invariant(format!(
                    "empty restricted action set at state {s}"
                )));
            }
            if set.iter().any(|&a| a >= model.num_actions(s)) {
                return Err(Error::Input(format!(
                    "restricted set at state {s} names an unknown action"
                )));
            }
        }
        Ok(())
    }
}

/// Keep every action whose Q-value is within `(1 - discount) * slack` of the
/// best at that state. A [`TIE_TOLERANCE`] margin keeps exactly optimal
/// actions at zero slack.
pub fn restrict_actions(
    table: &ValueTable,
    slack: f64,
    discount: f64,
) -> Result<RestrictedActionSets> {
    if !(slack >= 0.0) || !slack.is_finite() {
        return Err(Error::Input(format!(
            "slack must be nonnegative, got {slack}"
        )));
    }
    let eta = (1.0 - discount) * slack;
    let allowed = table
        .q_values
        .iter()
        .map(|q| {
            let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (0..q.len())
                .filter(|&a| best - q[a] <= eta + TIE_TOLERANCE)
                .collect()
        })
        .collect();
    RestrictedActionSets::new(allowed)
}

/// Task reward first, penalty second.
#[derive(Debug, Clone)]
pub struct LexicographicProblem<'a> {
    pub base: &'a AgentTaskModel,
    /// Per-state penalty, nonnegative. Stored internally as `-penalty`.
    penalty_reward: RewardMap,
    pub slack: f64,
}

impl<'a> LexicographicProblem<'a> {
    pub fn new(base: &'a AgentTaskModel, state_penalty: &[f64], slack: f64) -> Result<Self> {
        if state_penalty.len() != base.num_states() {
            return Err(Error::Input(format!(
                "penalty covers {} states, model has {}",
                state_penalty.len(),
                base.num_states()
            )));
        }
        Self::with_penalty_reward(
            base,
            RewardMap::from_state_penalty(base, state_penalty),
            slack,
        )
    }

    /// Second objective given directly as a reward (already negated).
    pub fn with_penalty_reward(
        base: &'a AgentTaskModel,
        penalty_reward: RewardMap,
        slack: f64,
    ) -> Result<Self> {
        if !(slack >= 0.0) {
            return Err(Error::Input(format!(
                "slack must be nonnegative, got {slack}"
            )));
        }
        Ok(LexicographicProblem {
            base,
            penalty_reward,
            slack,
        })
    }

    pub fn penalty_reward(&self) -> &RewardMap {
        &self.penalty_reward
    }
}

/// Intermediate results of a lexicographic solve.
#[derive(Debug, Clone)]
pub struct LexicographicSolution {
    pub policy: Policy,
    pub task_values: ValueTable,
    pub allowed: RestrictedActionSets,
    pub penalty_values: ValueTable,
}

pub fn lexicographic_value_iteration(
    problem: &LexicographicProblem<'_>,
    tolerance: f64,
) -> Result<Policy> {
    Ok(solve_lexicographic(problem, tolerance)?.policy)
}

pub fn solve_lexicographic(
    problem: &LexicographicProblem<'_>,
    tolerance: f64,
) -> Result<LexicographicSolution> {
    let model = problem.base;
    let task_values = value_iteration(model, model.task_reward(), tolerance)?;
    let allowed = restrict_actions(&task_values, problem.slack, model.discount())?;
    let penalty_values =
        value_iteration_restricted(model, &problem.penalty_reward, Some(&allowed), tolerance)?;
    let policy = greedy_policy_restricted(model, &penalty_values, Some(&allowed))?;
    Ok(LexicographicSolution {
        policy,
        task_values,
        allowed,
        penalty_values,
    })
}

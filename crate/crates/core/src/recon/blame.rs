//! Counterfactual blame and local penalty compilation.
//!
//! For agent `i` in joint state `s`:
//!
//! ```text
//! b_i(s) = 1/2 * (R* + eps + (R(s) - min_{s' in valid cf of i} R(s')))
//! B_i(s) = b_i(s) / sum_j b_j(s) * R(s)
//! ```
//!
//! `R*` is the largest joint penalty possible. An agent with no valid
//! counterfactual has improvement margin zero.

use std::collections::BTreeMap;
use std::io::Write;

use crate::counterfactual::{AlternativeCache, CounterfactualSet};
use crate::error::{Error, Result};
use crate::world::{joint_penalty, FactoredJointState, JointKey, PenaltyModel, World};

pub const DEFAULT_EPSILON: f64 = 1e-4;

/// How a ledger's per-agent blame was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlameRule {
    /// Rescaled counterfactual blame.
    Counterfactual,
    /// `R(s) - max_{s'} R(s')` over the agent's valid counterfactuals.
    Difference,
}

/// `b_i(s)` given the current penalty and the best counterfactual penalty
/// (`None` when the agent has no valid counterfactual).
pub fn intermediate_blame(
    current: f64,
    best_counterfactual: Option<f64>,
    max_penalty: f64,
    epsilon: f64,
) -> f64 {
    let margin = best_counterfactual.map_or(0.0, |best| current - best);
    0.5 * (max_penalty + epsilon + margin)
}

/// Intermediate blame `b_i(s)` for `agent` from its validity-filtered
/// agent-specific counterfactual set.
pub fn blame(
    state: &FactoredJointState,
    agent: usize,
    penalty: &PenaltyModel,
    cf: &CounterfactualSet,
    max_penalty: f64,
    epsilon: f64,
) -> Result<f64> {
    if cf.agent_scope.is_some_and(|a| a != agent) {
        return Err(Error::Input(format!(
            "counterfactual set belongs to agent {:?}, not {agent}",
            cf.agent_scope
        )));
    }
    let current = joint_penalty(state, penalty)?;
    let mut best: Option<f64> = None;
    for n in &cf.neighbors {
        let p = joint_penalty(n, penalty)?;
        best = Some(best.map_or(p, |b: f64| b.min(p)));
    }
    Ok(intermediate_blame(current, best, max_penalty, epsilon))
}

/// `B_i = b_i / sum_j b_j * R(s)`; all zero when the penalty or the sum is
/// zero.
pub fn normalize_blame(current: f64, intermediate: &[f64]) -> Vec<f64> {
    let total: f64 = intermediate.iter().sum();
    if current == 0.0 || total <= 0.0 {
        return vec![0.0; intermediate.len()];
    }
    intermediate.iter().map(|b| b / total * current).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentBlame {
    /// `b_i(s)`; equals `blame` under the difference rule.
    pub intermediate: f64,
    pub blame: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateBlame {
    pub penalty: f64,
    pub agents: Vec<AgentBlame>,
}

/// Per-state, per-agent blame over a set of joint states, and the local
/// penalty functions compiled from it.
#[derive(Debug, Clone, PartialEq)]
pub struct BlameLedger {
    pub rule: BlameRule,
    pub epsilon: f64,
    pub max_penalty: f64,
    pub states: BTreeMap<JointKey, StateBlame>,
    /// `local_penalty[agent][local state]`
    pub local_penalty: Vec<Vec<f64>>,
}

/// Penalty of the joint state after agent `agent` swaps to local state
/// `alternative`, from the term counts of the original state.
pub(crate) fn swapped_penalty(
    world: &World,
    counts: &[usize],
    key: &[usize],
    agent: usize,
    alternative: usize,
) -> f64 {
    let mut counts = counts.to_vec();
    let old = &world.agents[agent].space.projection(key[agent]).dynamic;
    let new = &world.agents[agent].space.projection(alternative).dynamic;
    world.penalty.add_agent(&mut counts, old, -1);
    world.penalty.add_agent(&mut counts, new, 1);
    world.penalty.penalty_from_counts(&counts)
}

pub(crate) fn term_counts(world: &World, key: &[usize]) -> Vec<usize> {
    world.penalty.counts(
        key.iter()
            .zip(&world.agents)
            .map(|(&s, a)| a.space.projection(s).dynamic.as_slice()),
    )
}

impl BlameLedger {
    pub fn empty(world: &World, rule: BlameRule, epsilon: f64) -> Self {
        BlameLedger {
            rule,
            epsilon,
            max_penalty: world.max_penalty(),
            states: BTreeMap::new(),
            local_penalty: world
                .agents
                .iter()
                .map(|a| vec![0.0; a.space.len()])
                .collect(),
        }
    }

    /// Blame every joint state in `keys` and compile local penalties.
    pub fn build<'a>(
        world: &World,
        keys: impl IntoIterator<Item = &'a JointKey>,
        rule: BlameRule,
        epsilon: f64,
        cache: &mut AlternativeCache,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Input(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let mut ledger = Self::empty(world, rule, epsilon);
        for key in keys {
            let entry = ledger.blame_state(world, key, cache);
            ledger.states.insert(key.clone(), entry);
        }
        ledger.local_penalty = compile_local_penalties(world, &ledger.states);
        Ok(ledger)
    }

    /// Blame for a single joint state.
    pub fn blame_state(
        &self,
        world: &World,
        key: &[usize],
        cache: &mut AlternativeCache,
    ) -> StateBlame {
        let counts = term_counts(world, key);
        let current = world.penalty.penalty_from_counts(&counts);
        let m = world.num_agents();
        let mut extremes = Vec::with_capacity(m);
        for agent in 0..m {
            let alts = cache.get(world, agent, key[agent]);
            let values = alts
                .iter()
                .map(|&alt| swapped_penalty(world, &counts, key, agent, alt));
            let pick = match self.rule {
                BlameRule::Counterfactual => values.fold(None, |acc: Option<f64>, p| {
                    Some(acc.map_or(p, |a| a.min(p)))
                }),
                BlameRule::Difference => values.fold(None, |acc: Option<f64>, p| {
                    Some(acc.map_or(p, |a| a.max(p)))
                }),
            };
            extremes.push(pick);
        }
        let agents = match self.rule {
            BlameRule::Counterfactual => {
                let b: Vec<f64> = extremes
                    .iter()
                    .map(|&best| intermediate_blame(current, best, self.max_penalty, self.epsilon))
                    .collect();
                let big_b = normalize_blame(current, &b);
                b.into_iter()
                    .zip(big_b)
                    .map(|(intermediate, blame)| AgentBlame {
                        intermediate,
                        blame,
                    })
                    .collect()
            }
            BlameRule::Difference => extremes
                .iter()
                .map(|&worst| {
                    let d = worst.map_or(0.0, |w| current - w);
                    AgentBlame {
                        intermediate: d,
                        blame: d,
                    }
                })
                .collect(),
        };
        StateBlame {
            penalty: current,
            agents,
        }
    }

    /// Sum of `B_i` over the ledger's joint states, per agent.
    pub fn total_blame(&self) -> Vec<f64> {
        let m = self.local_penalty.len();
        let mut totals = vec![0.0; m];
        for entry in self.states.values() {
            for (t, a) in totals.iter_mut().zip(&entry.agents) {
                *t += a.blame;
            }
        }
        totals
    }

    /// Rows `state,agent,b,B` where `state` joins local state ids with `;`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state", "agent", "b", "B"])?;
        for (key, entry) in &self.states {
            let id = key
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(";");
            for (agent, a) in entry.agents.iter().enumerate() {
                w.write_record([
                    id.clone(),
                    agent.to_string(),
                    format!("{:.12}", a.intermediate),
                    format!("{:.12}", a.blame),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `R_i(s_i) = max B_i(s)` over blamed joint states whose projection for
/// agent `i` is `s_i`; local states never seen stay at zero.
pub fn compile_local_penalties(
    world: &World,
    states: &BTreeMap<JointKey, StateBlame>,
) -> Vec<Vec<f64>> {
    let mut compiled: Vec<Vec<Option<f64>>> = world
        .agents
        .iter()
        .map(|a| vec![None; a.space.len()])
        .collect();
    for (key, entry) in states {
        for (agent, (&local, a)) in key.iter().zip(&entry.agents).enumerate() {
            let slot = &mut compiled[agent][local];
            *slot = Some(slot.map_or(a.blame, |v: f64| v.max(a.blame)));
        }
    }
    compiled
        .into_iter()
        .map(|row| row.into_iter().map(|v| v.unwrap_or(0.0)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_two_agents() {
        let (r, star, eps) = (10.0, 10.0, 1e-4);
        let b1 = intermediate_blame(r, Some(0.0), star, eps);
        let b2 = intermediate_blame(r, Some(10.0), star, eps);
        assert!((b1 - 10.00005).abs() < 1e-12);
        assert!((b2 - 5.00005).abs() < 1e-12);
        // independent recomputation of the normalised shares
        let total = 10.00005 + 5.00005;
        let expected = [10.00005 / total * 10.0, 5.00005 / total * 10.0];
        let big = normalize_blame(r, &[b1, b2]);
        assert!((big[0] - expected[0]).abs() < 1e-12);
        assert!((big[1] - expected[1]).abs() < 1e-12);
        assert!((big[0] - 6.6667).abs() < 1e-4);
        assert!((big[1] - 3.3333).abs() < 1e-4);
        assert!((big[0] + big[1] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn zero_penalty_gives_zero_blame() {
        let b = intermediate_blame(0.0, Some(0.0), 10.0, 1e-4);
        assert_eq!(normalize_blame(0.0, &[b, b]), vec![0.0, 0.0]);
    }

    #[test]
    fn symmetric_agents_share_equally() {
        let b = intermediate_blame(6.0, Some(2.0), 10.0, 1e-4);
        let big = normalize_blame(6.0, &[b, b, b]);
        for v in big {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_counterfactual_floors_the_margin() {
        assert_eq!(
            intermediate_blame(7.0, None, 10.0, 1e-4),
            0.5 * (10.0 + 1e-4)
        );
    }
}

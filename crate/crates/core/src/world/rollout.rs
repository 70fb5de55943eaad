//! Seeded Monte Carlo scoring of a joint policy.
//!
//! All agents step synchronously but sample their own transitions from
//! independent streams, so an agent's trajectory never depends on what the
//! others do.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{AgentTaskModel, Outcome, Policy};
use crate::world::{JointKey, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RolloutConfig {
    pub horizon: usize,
    pub episodes: usize,
    pub seed: u64,
    /// Keep a per-step trace for CSV export.
    pub record_trace: bool,
}

impl RolloutConfig {
    pub fn new(horizon: usize, episodes: usize, seed: u64) -> Self {
        RolloutConfig {
            horizon,
            episodes,
            seed,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub episode: usize,
    pub step: usize,
    pub penalty: f64,
    pub states: JointKey,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutReport {
    /// Scored joint states and how often each was occupied.
    pub visits: BTreeMap<JointKey, u64>,
    pub episode_penalties: Vec<f64>,
    pub episode_lengths: Vec<usize>,
    /// Discounted task return, `[episode][agent]`.
    pub task_returns: Vec<Vec<f64>>,
    pub trace: Vec<TraceStep>,
}

impl RolloutReport {
    pub fn total_penalty(&self) -> f64 {
        self.episode_penalties.iter().sum()
    }

    /// Mean accumulated penalty per episode.
    pub fn mean_penalty(&self) -> f64 {
        if self.episode_penalties.is_empty() {
            return 0.0;
        }
        self.total_penalty() / self.episode_penalties.len() as f64
    }

    /// Population standard deviation of the per-episode penalty.
    pub fn std_penalty(&self) -> f64 {
        let n = self.episode_penalties.len();
        if n == 0 {
            return 0.0;
        }
        let mean = self.mean_penalty();
        let var = self
            .episode_penalties
            .iter()
            .map(|p| (p - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        var.sqrt()
    }

    /// Mean penalty per scored step across all episodes.
    pub fn mean_step_penalty(&self) -> f64 {
        let steps: usize = self.episode_lengths.iter().sum();
        if steps == 0 {
            0.0
        } else {
            self.total_penalty() / steps as f64
        }
    }

    pub fn mean_task_return(&self, agent: usize) -> f64 {
        if self.task_returns.is_empty() {
            return 0.0;
        }
        self.task_returns.iter().map(|r| r[agent]).sum::<f64>() / self.task_returns.len() as f64
    }

    /// Rows `episode,step,penalty,states` with agent state ids joined by `;`.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["episode", "step", "penalty", "states"])?;
        for t in &self.trace {
            let states = t
                .states
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                t.episode.to_string(),
                t.step.to_string(),
                format!("{:.12}", t.penalty),
                states,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sample(outcomes: &[Outcome], rng: &mut ChaCha8Rng) -> usize {
    if outcomes.len() == 1 {
        return outcomes[0].target;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for o in outcomes {
        acc += o.probability;
        if u < acc {
            return o.target;
        }
    }
    outcomes
        .iter()
        .rev()
        .find(|o| o.probability > 0.0)
        .map_or(outcomes[0].target, |o| o.target)
}

fn agent_stream(seed: u64, episode: usize, agent: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((episode as u64) << 32) | agent as u64);
    rng
}

/// Simulate `policies` in `world`. Each episode scores the joint state at
/// every tick before the agents act, and ends at the horizon or once every
/// agent sits in a terminal state.
pub fn rollout_joint(
    world: &World,
    policies: &[Policy],
    config: &RolloutConfig,
) -> Result<RolloutReport> {
    let m = world.num_agents();
    if policies.len() != m {
        return Err(Error::Input(format!(
            "{} policies for {m} agents",
            policies.len()
        )));
    }
    if config.horizon == 0 || config.episodes == 0 {
        return Err(Error::Input(
            "horizon and episodes must be at least 1".into(),
        ));
    }
    let models: Vec<&AgentTaskModel> = world.models();
    let mut report = RolloutReport::default();
    for episode in 0..config.episodes {
        let mut rngs: Vec<ChaCha8Rng> = (0..m)
            .map(|a| agent_stream(config.seed, episode, a))
            .collect();
        let mut key: JointKey = world.start_key();
        let mut returns = vec![0.0; m];
        let mut discounts = vec![1.0; m];
        let mut accumulated = 0.0;
        let mut steps = 0;
        for step in 0..config.horizon {
            if key.iter().zip(&models).all(|(&s, mdl)| mdl.is_terminal(s)) {
                break;
            }
            let penalty = world.penalty_of(&key);
            accumulated += penalty;
            steps += 1;
            *report.visits.entry(key.clone()).or_insert(0) += 1;
            if config.record_trace {
                report.trace.push(TraceStep {
                    episode,
                    step,
                    penalty,
                    states: key.clone(),
                });
            }
            for a in 0..m {
                let s = key[a];
                let action = policies[a]
                    .action(s)
                    .filter(|&act| act < models[a].num_actions(s));
                let action = action.ok_or_else(|| {
                    Error::Contract(format!("policy of agent {a} undefined at state {s}"))
                })?;
                returns[a] += discounts[a] * models[a].task_reward().get(s, action);
                key[a] = sample(models[a].outcomes(s, action), &mut rngs[a]);
                discounts[a] *= models[a].discount();
            }
        }
        report.episode_penalties.push(accumulated);
        report.episode_lengths.push(steps);
        report.task_returns.push(returns);
    }
    Ok(report)
}

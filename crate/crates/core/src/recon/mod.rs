//! Joint penalty decomposition by counterfactual blame, plus the
//! credit-assignment baselines it is compared against.

pub mod baselines;
pub mod blame;

pub use baselines::{considerate_reward, difference_reward_blame, ConsiderateWeights};
pub use blame::{
    blame, compile_local_penalties, intermediate_blame, normalize_blame, AgentBlame, BlameLedger,
    BlameRule, StateBlame, DEFAULT_EPSILON,
};

use crate::counterfactual::AlternativeCache;
use crate::error::{Error, Result};
use crate::mdp::Policy;
use crate::world::{rollout_joint, RolloutConfig, RolloutReport, World};

/// What a RECON pass produced: the monitor's report, whether the tolerance
/// was exceeded, and the ledger (empty when it was not).
#[derive(Debug, Clone)]
pub struct ReconOutcome {
    pub report: RolloutReport,
    pub triggered: bool,
    pub ledger: BlameLedger,
}

impl ReconOutcome {
    /// Compiled per-agent local penalties, indexed by local state.
    pub fn local_penalties(&self) -> &[Vec<f64>] {
        &self.ledger.local_penalty
    }
}

/// One pass of penalty decomposition: score the joint policy, and if its
/// mean per-episode penalty exceeds `tolerance`, blame every joint state the
/// rollouts visited and compile each agent's local penalty function.
pub fn run_recon(
    world: &World,
    joint_policy: &[Policy],
    rollout: &RolloutConfig,
    tolerance: f64,
    epsilon: f64,
) -> Result<ReconOutcome> {
    if !(tolerance >= 0.0) {
        return Err(Error::Input(format!(
            "NSE tolerance must be nonnegative, got {tolerance}"
        )));
    }
    let report = rollout_joint(world, joint_policy, rollout)?;
    let triggered = report.mean_penalty() > tolerance;
    let ledger = if triggered {
        let mut cache = AlternativeCache::new();
        BlameLedger::build(
            world,
            report.visits.keys(),
            BlameRule::Counterfactual,
            epsilon,
            &mut cache,
        )?
    } else {
        BlameLedger::empty(world, BlameRule::Counterfactual, epsilon)
    };
    Ok(ReconOutcome {
        report,
        triggered,
        ledger,
    })
}

/// Agents ranked by total blame, highest first; the top
/// `ceil(fraction * m)` are returned in rank order. Ties go to the lower
/// index.
pub fn select_agents_for_update(totals: &[f64], fraction: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Input(format!(
            "update fraction {fraction} outside [0, 1]"
        )));
    }
    let m = totals.len();
    // guard against 0.3 * 10 = 3.0000000000000004 rounding up to 4
    let k = ((fraction * m as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| totals[b].total_cmp(&totals[a]).then(a.cmp(&b)));
    order.truncate(k.min(m));
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_examples() {
        let totals = [5.0, 9.0, 1.0];
        assert_eq!(
            select_agents_for_update(&totals, 1.0).unwrap(),
            vec![1, 0, 2]
        );
        assert!(select_agents_for_update(&totals, 0.0).unwrap().is_empty());
        assert_eq!(select_agents_for_update(&totals, 0.34).unwrap(), vec![1, 0]);
        assert!(select_agents_for_update(&totals, 1.5).is_err());
    }

    #[test]
    fn selection_ties_prefer_lower_index_and_exact_products_do_not_round_up() {
        let totals = [2.0; 10];
        assert_eq!(
            select_agents_for_update(&totals, 0.3).unwrap(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn selection_is_nested() {
        let totals = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let mut prev: Vec<usize> = Vec::new();
        for i in 0..=20 {
            let f = i as f64 / 20.0;
            let cur = select_agents_for_update(&totals, f).unwrap();
            assert!(prev.iter().all(|a| cur.contains(a)));
            prev = cur;
        }
    }
}

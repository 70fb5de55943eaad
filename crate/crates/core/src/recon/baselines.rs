//! Credit-assignment baselines restricted to dynamic global features.

use crate::counterfactual::CounterfactualSet;
use crate::error::{Error, Result};
use crate::world::{joint_penalty, FactoredJointState, PenaltyModel};

/// Difference-reward blame: `R(s) - max R(s')` over the agent's valid
/// counterfactuals, zero when there are none. Negative values pass through.
pub fn difference_reward_blame(
    state: &FactoredJointState,
    agent: usize,
    penalty: &PenaltyModel,
    cf: &CounterfactualSet,
) -> Result<f64> {
    if cf.agent_scope.is_some_and(|a| a != agent) {
        return Err(Error::Input(format!(
            "counterfactual set belongs to agent {:?}, not {agent}",
            cf.agent_scope
        )));
    }
    let current = joint_penalty(state, penalty)?;
    let mut worst: Option<f64> = None;
    for n in &cf.neighbors {
        let p = joint_penalty(n, penalty)?;
        worst = Some(worst.map_or(p, |w: f64| w.max(p)));
    }
    Ok(worst.map_or(0.0, |w| current - w))
}

/// Selfish and care coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsiderateWeights {
    pub selfish: f64,
    pub care: f64,
}

impl Default for ConsiderateWeights {
    fn default() -> Self {
        ConsiderateWeights {
            selfish: 0.5,
            care: 0.5,
        }
    }
}

/// `selfish * R1 / R1* + care * (R(s) - B_i(s)) / R*`.
///
/// Callers that treat the penalty as a cost pass `joint_penalty` and `blame`
/// negated, which turns the care term into a cost on the share of the
/// penalty caused by the other agents.
pub fn considerate_reward(
    task_reward: f64,
    task_max: f64,
    joint_penalty: f64,
    blame: f64,
    penalty_max: f64,
    weights: ConsiderateWeights,
) -> Result<f64> {
    if task_max == 0.0 || penalty_max == 0.0 {
        return Err(Error::Input(
            "considerate reward needs nonzero normalisers".into(),
        ));
    }
    Ok(weights.selfish * task_reward / task_max
        + weights.care * (joint_penalty - blame) / penalty_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::PenaltyTerm;

    #[test]
    fn considerate_examples() {
        let w = |s, c| ConsiderateWeights {
            selfish: s,
            care: c,
        };
        assert!(
            (considerate_reward(0.5, 2.0, 7.0, 1.0, 9.0, w(1.0, 0.0)).unwrap() - 0.25).abs()
                < 1e-15
        );
        assert_eq!(
            considerate_reward(0.5, 2.0, 7.0, 7.0, 9.0, w(0.0, 1.0)).unwrap(),
            0.0
        );
        assert!(
            (considerate_reward(2.0, 2.0, 9.0, 0.0, 9.0, w(0.5, 0.5)).unwrap() - 1.0).abs() < 1e-15
        );
        assert!(considerate_reward(1.0, 0.0, 1.0, 0.0, 1.0, w(0.5, 0.5)).is_err());
    }

    fn model() -> PenaltyModel {
        PenaltyModel::with_domains(vec![2], vec![1.0], vec![PenaltyTerm::new(0, 1, 5.0)]).unwrap()
    }

    fn state(v: [u16; 2]) -> FactoredJointState {
        FactoredJointState {
            local: vec![vec![]; 2],
            static_values: vec![],
            dynamic: v.iter().map(|&x| vec![Some(x)]).collect(),
        }
    }

    fn cf(origin: FactoredJointState, neighbors: Vec<FactoredJointState>) -> CounterfactualSet {
        CounterfactualSet {
            origin,
            neighbors,
            agent_scope: Some(0),
            validity_filtered: true,
        }
    }

    #[test]
    fn difference_blame_examples() {
        let m = model();
        let s = state([1, 1]);
        // dropping the carried value leaves one agent: 5 ln 2
        let d = difference_reward_blame(&s, 0, &m, &cf(s.clone(), vec![state([0, 1])])).unwrap();
        assert!((d - 5.0 * (3f64.ln() - 2f64.ln())).abs() < 1e-12);
        // worsening counterfactual gives negative blame
        let s = state([0, 1]);
        let d = difference_reward_blame(&s, 0, &m, &cf(s.clone(), vec![state([1, 1])])).unwrap();
        assert!(d < 0.0);
        // same penalty -> 0; empty -> 0
        let d = difference_reward_blame(&s, 0, &m, &cf(s.clone(), vec![s.clone()])).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(
            difference_reward_blame(&s, 0, &m, &cf(s.clone(), vec![])).unwrap(),
            0.0
        );
    }
}

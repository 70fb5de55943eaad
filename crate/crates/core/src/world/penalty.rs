//! Logarithmic joint side-effect penalty over dynamic global features:
//!
//! ```text
//! R_N(s) = sum_d sum_k beta_k * ln(alpha_d * N_k + 1)
//! ```
//!
//! where `N_k` counts agents whose value of feature `d` equals `k`. A term may
//! carry extra context conditions on other dynamic features of the same agent
//! (for example "carrying sample A *and* on a coral cell"); an agent is then
//! counted only when all of them hold. Terms without context reduce to the
//! plain formula.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::world::schema::{FactoredJointState, FeatureSchema};

/// A single `(feature, value)` condition on an agent's dynamic assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Condition {
    pub feature: usize,
    pub value: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTerm {
    pub feature: usize,
    pub value: u16,
    pub beta: f64,
    pub context: Vec<Condition>,
}

impl PenaltyTerm {
    pub fn new(feature: usize, value: u16, beta: f64) -> Self {
        PenaltyTerm {
            feature,
            value,
            beta,
            context: Vec::new(),
        }
    }

    pub fn when(mut self, feature: usize, value: u16) -> Self {
        self.context.push(Condition { feature, value });
        self
    }

    /// Whether an agent with this dynamic assignment is counted by the term.
    pub fn matches(&self, dynamic: &[Option<u16>]) -> bool {
        dynamic.get(self.feature).copied().flatten() == Some(self.value)
            && self
                .context
                .iter()
                .all(|c| dynamic.get(c.feature).copied().flatten() == Some(c.value))
    }

    fn features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = std::iter::once(self.feature)
            .chain(self.context.iter().map(|c| c.feature))
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyModel {
    terms: Vec<PenaltyTerm>,
    /// Sensitivity per dynamic feature, indexed like the schema.
    alpha: Vec<f64>,
    domain_sizes: Vec<usize>,
}

impl PenaltyModel {
    pub fn new(schema: &FeatureSchema, alpha: Vec<f64>, terms: Vec<PenaltyTerm>) -> Result<Self> {
        let domain_sizes: Vec<usize> = schema
            .dynamic_features()
            .iter()
            .map(|f| f.domain.size())
            .collect();
        Self::with_domains(domain_sizes, alpha, terms)
    }

    pub fn with_domains(
        domain_sizes: Vec<usize>,
        alpha: Vec<f64>,
        terms: Vec<PenaltyTerm>,
    ) -> Result<Self> {
        if alpha.len() != domain_sizes.len() {
            return Err(Error::Schema(format!(
                "{} alpha values for {} dynamic features",
                alpha.len(),
                domain_sizes.len()
            )));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::Input(format!("alpha must be positive, got {a}")));
        }
        for t in &terms {
            if !(t.beta >= 0.0) || !t.beta.is_finite() {
                return Err(Error::Input(format!(
                    "beta must be nonnegative, got {}",
                    t.beta
                )));
            }
            let conds = std::iter::once(Condition {
                feature: t.feature,
                value: t.value,
            })
            .chain(t.context.iter().copied());
            for c in conds {
                match domain_sizes.get(c.feature) {
                    Some(&n) if (c.value as usize) < n => {}
                    _ => {
                        return Err(Error::Schema(format!(
                            "penalty condition ({}, {}) outside the dynamic domains",
                            c.feature, c.value
                        )))
                    }
                }
            }
        }
        Ok(PenaltyModel {
            terms,
            alpha,
            domain_sizes,
        })
    }

    pub fn terms(&self) -> &[PenaltyTerm] {
        &self.terms
    }

    pub fn alpha(&self, feature: usize) -> f64 {
        self.alpha[feature]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn num_features(&self) -> usize {
        self.domain_sizes.len()
    }

    /// Contribution of one term given its count.
    pub fn term_value(&self, term: usize, count: usize) -> f64 {
        let t = &self.terms[term];
        t.beta * (self.alpha[t.feature] * count as f64 + 1.0).ln()
    }

    /// Per-term agent counts for a collection of dynamic assignments.
    pub fn counts<'a>(&self, agents: impl IntoIterator<Item = &'a [Option<u16>]>) -> Vec<usize> {
        let mut counts = vec![0; self.terms.len()];
        for dynamic in agents {
            self.add_agent(&mut counts, dynamic, 1);
        }
        counts
    }

    pub(crate) fn add_agent(&self, counts: &mut [usize], dynamic: &[Option<u16>], sign: isize) {
        for (c, t) in counts.iter_mut().zip(&self.terms) {
            if t.matches(dynamic) {
                *c = (*c as isize + sign) as usize;
            }
        }
    }

    pub fn penalty_from_counts(&self, counts: &[usize]) -> f64 {
        counts
            .iter()
            .enumerate()
            .map(|(t, &n)| self.term_value(t, n))
            .sum()
    }

    fn check_state(&self, state: &FactoredJointState) -> Result<()> {
        for (a, dynamic) in state.dynamic.iter().enumerate() {
            if dynamic.len() != self.domain_sizes.len() {
                return Err(Error::Schema(format!(
                    "agent {a} has {} dynamic values, penalty model expects {}",
                    dynamic.len(),
                    self.domain_sizes.len()
                )));
            }
            for (d, v) in dynamic.iter().enumerate() {
                if let Some(v) = v {
                    if *v as usize >= self.domain_sizes[d] {
                        return Err(Error::Schema(format!(
                            "agent {a} value {v} outside domain of dynamic feature {d}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Joint penalty of a factored state. Reads only the dynamic assignment.
pub fn joint_penalty(state: &FactoredJointState, model: &PenaltyModel) -> Result<f64> {
    model.check_state(state)?;
    let counts = model.counts(state.dynamic.iter().map(Vec::as_slice));
    Ok(model.penalty_from_counts(&counts))
}

/// Largest joint penalty reachable with `num_agents` agents, each free to
/// take any dynamic assignment.
///
/// Terms are grouped by the set of features they condition on, and within a
/// group by their exact conditions. An agent fills at most one slot per
/// group (distinct values of the same features); a slot's value is a sum of
/// `beta * ln(alpha * N + 1)`, concave in its count, so adding agents one at
/// a time to the slot with the largest marginal gain is optimal. When the
/// groups condition on pairwise disjoint feature sets they are independent
/// and the result is the exact maximum; otherwise it is an upper bound.
pub fn max_penalty(model: &PenaltyModel, num_agents: usize) -> f64 {
    let mut groups: BTreeMap<Vec<usize>, BTreeMap<Vec<Condition>, Vec<usize>>> = BTreeMap::new();
    for (i, t) in model.terms.iter().enumerate() {
        let mut conds: Vec<Condition> = std::iter::once(Condition {
            feature: t.feature,
            value: t.value,
        })
        .chain(t.context.iter().copied())
        .collect();
        conds.sort_unstable();
        conds.dedup();
        if conds.windows(2).any(|w| w[0].feature == w[1].feature) {
            continue; // contradictory, never matched
        }
        groups
            .entry(t.features())
            .or_default()
            .entry(conds)
            .or_default()
            .push(i);
    }
    let slot_value =
        |slot: &[usize], n: usize| slot.iter().map(|&t| model.term_value(t, n)).sum::<f64>();
    let mut total = 0.0;
    for slots in groups.values() {
        let slots: Vec<&Vec<usize>> = slots.values().collect();
        let mut counts = vec![0usize; slots.len()];
        for _ in 0..num_agents {
            let mut best: Option<(usize, f64)> = None;
            for (j, slot) in slots.iter().enumerate() {
                let gain = slot_value(slot, counts[j] + 1) - slot_value(slot, counts[j]);
                if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
                    best = Some((j, gain));
                }
            }
            match best {
                Some((j, _)) => counts[j] += 1,
                None => break,
            }
        }
        total += slots
            .iter()
            .zip(&counts)
            .map(|(slot, &n)| slot_value(slot, n))
            .sum::<f64>();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_feature(beta: f64, alpha: f64) -> PenaltyModel {
        // feature 0 with values {X, A}; A penalised
        PenaltyModel::with_domains(vec![2], vec![alpha], vec![PenaltyTerm::new(0, 1, beta)])
            .unwrap()
    }

    fn state(dynamic: Vec<Vec<Option<u16>>>) -> FactoredJointState {
        FactoredJointState {
            local: vec![vec![]; dynamic.len()],
            static_values: vec![],
            dynamic,
        }
    }

    #[test]
    fn zero_counts_give_zero() {
        let m = one_feature(5.0, 1.0);
        let s = state(vec![vec![Some(0)], vec![Some(0)]]);
        assert_eq!(joint_penalty(&s, &m).unwrap(), 0.0);
    }

    #[test]
    fn two_agents_on_penalised_value() {
        let m = one_feature(5.0, 1.0);
        let s = state(vec![vec![Some(1)], vec![Some(1)]]);
        let p = joint_penalty(&s, &m).unwrap();
        assert!((p - 5.0 * 3f64.ln()).abs() < 1e-12);
        assert!((p - 5.4931).abs() < 1e-4);
    }

    #[test]
    fn repeated_conditions_share_a_slot() {
        // the same condition written twice: one agent matches both terms
        let m = PenaltyModel::with_domains(
            vec![3, 2],
            vec![1.0, 1.0],
            vec![
                PenaltyTerm::new(0, 1, 2.0).when(1, 1),
                PenaltyTerm::new(1, 1, 3.0).when(0, 1),
                PenaltyTerm::new(0, 2, 4.0).when(1, 1),
            ],
        )
        .unwrap();
        // one agent: slot {0=1,1=1} gives 5 ln 2, slot {0=2,1=1} gives 4 ln 2
        assert!((max_penalty(&m, 1) - 5.0 * 2f64.ln()).abs() < 1e-12);
        let best_two = (5.0 * 2f64.ln() + 4.0 * 2f64.ln()).max(5.0 * 3f64.ln());
        assert!((max_penalty(&m, 2) - best_two).abs() < 1e-12);
    }

    #[test]
    fn independent_features_add() {
        let m = PenaltyModel::with_domains(
            vec![2, 2],
            vec![1.0, 2.0],
            vec![PenaltyTerm::new(0, 1, 5.0), PenaltyTerm::new(1, 1, 3.0)],
        )
        .unwrap();
        let s = state(vec![vec![Some(1), Some(1)], vec![Some(1), Some(0)]]);
        let expected = 5.0 * 3f64.ln() + 3.0 * 3f64.ln();
        assert!((joint_penalty(&s, &m).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn context_conditions_gate_the_count() {
        // feature 0 = sample {X, A}, feature 1 = coral {no, yes}
        let m = PenaltyModel::with_domains(
            vec![2, 2],
            vec![1.0, 1.0],
            vec![PenaltyTerm::new(0, 1, 5.0).when(1, 1)],
        )
        .unwrap();
        let off_coral = state(vec![vec![Some(1), Some(0)], vec![Some(1), Some(0)]]);
        assert_eq!(joint_penalty(&off_coral, &m).unwrap(), 0.0);
        let one_on = state(vec![vec![Some(1), Some(1)], vec![Some(1), Some(0)]]);
        assert!((joint_penalty(&one_on, &m).unwrap() - 5.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn out_of_domain_rejected() {
        let m = one_feature(5.0, 1.0);
        let s = state(vec![vec![Some(2)]]);
        assert!(matches!(joint_penalty(&s, &m), Err(Error::Schema(_))));
        assert!(PenaltyModel::with_domains(vec![2], vec![0.0], vec![]).is_err());
        assert!(
            PenaltyModel::with_domains(vec![2], vec![1.0], vec![PenaltyTerm::new(0, 1, -1.0)])
                .is_err()
        );
    }

    #[test]
    fn max_penalty_examples() {
        let m = one_feature(5.0, 1.0);
        assert!((max_penalty(&m, 3) - 5.0 * 4f64.ln()).abs() < 1e-12);
        assert_eq!(max_penalty(&one_feature(0.0, 1.0), 3), 0.0);
    }

    #[test]
    fn max_penalty_splits_agents_when_that_pays_more() {
        // two equally weighted values: 1 + 1 beats 2 + 0 under the log
        let m = PenaltyModel::with_domains(
            vec![3],
            vec![1.0],
            vec![PenaltyTerm::new(0, 1, 5.0), PenaltyTerm::new(0, 2, 5.0)],
        )
        .unwrap();
        assert!((max_penalty(&m, 2) - 10.0 * 2f64.ln()).abs() < 1e-12);
    }
}

//! Counterfactual neighbours: joint states that differ from a given one only
//! in dynamic global feature values.

use std::collections::HashMap;

use crate::world::{AgentWorld, FactoredJointState, FeatureSchema, Projection, World};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterfactualSet {
    pub origin: FactoredJointState,
    pub neighbors: Vec<FactoredJointState>,
    /// `Some(i)` when only agent `i`'s dynamic values were varied.
    pub agent_scope: Option<usize>,
    pub validity_filtered: bool,
}

impl CounterfactualSet {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn contains(&self, state: &FactoredJointState) -> bool {
        self.neighbors.contains(state)
    }
}

/// Every assignment of the `(agent, feature)` slots, in odometer order.
fn enumerate_slots(
    origin: &FactoredJointState,
    schema: &FeatureSchema,
    slots: &[(usize, usize)],
) -> Vec<FactoredJointState> {
    let sizes: Vec<usize> = slots
        .iter()
        .map(|&(_, d)| schema.dynamic_features()[d].domain.size())
        .collect();
    let mut out = Vec::new();
    let mut digits = vec![0usize; slots.len()];
    loop {
        let mut candidate = origin.clone();
        for (&(a, d), &v) in slots.iter().zip(&digits) {
            candidate.dynamic[a][d] = Some(v as u16);
        }
        if candidate != *origin {
            out.push(candidate);
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return out;
            }
            digits[i] += 1;
            if digits[i] < sizes[i] {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// All joint states that differ from `state` in at least one dynamic global
/// value, with local and static features held fixed. Exponential in the
/// number of controlled slots.
pub fn counterfactual_neighbors(
    state: &FactoredJointState,
    schema: &FeatureSchema,
) -> CounterfactualSet {
    let slots: Vec<(usize, usize)> = (0..schema.num_agents())
        .flat_map(|a| {
            (0..schema.dynamic_features().len())
                .filter(move |&d| schema.controls(a, d))
                .map(move |d| (a, d))
        })
        .collect();
    CounterfactualSet {
        origin: state.clone(),
        neighbors: enumerate_slots(state, schema, &slots),
        agent_scope: None,
        validity_filtered: false,
    }
}

/// Neighbours that change only the dynamic values `agent` controls.
pub fn agent_cf_neighbors(
    state: &FactoredJointState,
    agent: usize,
    schema: &FeatureSchema,
) -> CounterfactualSet {
    let slots: Vec<(usize, usize)> = (0..schema.dynamic_features().len())
        .filter(|&d| schema.controls(agent, d))
        .map(|d| (agent, d))
        .collect();
    CounterfactualSet {
        origin: state.clone(),
        neighbors: enumerate_slots(state, schema, &slots),
        agent_scope: Some(agent),
        validity_filtered: false,
    }
}

/// Keep a neighbour only if, for every agent whose dynamic values changed,
/// the changed projection is a state that agent can reach from its start.
pub fn valid_filter(set: &CounterfactualSet, world: &World) -> CounterfactualSet {
    let origin = &set.origin;
    let neighbors = set
        .neighbors
        .iter()
        .filter(|n| {
            (0..world.num_agents()).all(|a| {
                n.dynamic[a] == origin.dynamic[a]
                    || world.agents[a].reachable_state(&n.projection(a)).is_some()
            })
        })
        .cloned()
        .collect();
    CounterfactualSet {
        origin: origin.clone(),
        neighbors,
        agent_scope: set.agent_scope,
        validity_filtered: true,
    }
}

/// Reachable states of one agent that share `state`'s local and static
/// features but differ in its dynamic values. This is the per-agent view of
/// the validity-filtered agent-specific neighbour set.
pub fn valid_alternatives(
    agent: &AgentWorld,
    schema: &FeatureSchema,
    agent_index: usize,
    state: usize,
) -> Vec<usize> {
    let base = agent.space.projection(state);
    let controlled: Vec<usize> = (0..schema.dynamic_features().len())
        .filter(|&d| schema.controls(agent_index, d))
        .collect();
    let sizes: Vec<usize> = controlled
        .iter()
        .map(|&d| schema.dynamic_features()[d].domain.size())
        .collect();
    let mut out = Vec::new();
    let mut digits = vec![0usize; controlled.len()];
    loop {
        let mut p: Projection = base.clone();
        for (&d, &v) in controlled.iter().zip(&digits) {
            p.dynamic[d] = Some(v as u16);
        }
        if p != *base {
            if let Some(s) = agent.reachable_state(&p) {
                out.push(s);
            }
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return out;
            }
            digits[i] += 1;
            if digits[i] < sizes[i] {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Memoised [`valid_alternatives`] keyed by `(agent, state)`.
#[derive(Debug, Default)]
pub struct AlternativeCache {
    cache: HashMap<(usize, usize), Vec<usize>>,
}

impl AlternativeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, world: &World, agent: usize, state: usize) -> &[usize] {
        self.cache.entry((agent, state)).or_insert_with(|| {
            valid_alternatives(&world.agents[agent], &world.schema, agent, state)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{DynamicFeature, FeatureDomain};

    fn sample_schema(agents: usize, controllers: Vec<usize>) -> FeatureSchema {
        FeatureSchema::new(
            vec![vec![FeatureDomain::range("x", 3)]; agents],
            vec![],
            vec![DynamicFeature {
                domain: FeatureDomain::new("sample", ["X", "A", "B"]),
                controllers,
            }],
        )
        .unwrap()
    }

    fn state(values: &[Option<u16>]) -> FactoredJointState {
        FactoredJointState {
            local: vec![vec![1]; values.len()],
            static_values: vec![],
            dynamic: values.iter().map(|v| vec![*v]).collect(),
        }
    }

    #[test]
    fn binary_feature_two_agents_has_three_neighbours() {
        let schema = FeatureSchema::new(
            vec![vec![]; 2],
            vec![],
            vec![DynamicFeature {
                domain: FeatureDomain::new("flag", ["off", "on"]),
                controllers: vec![0, 1],
            }],
        )
        .unwrap();
        let s = FactoredJointState {
            local: vec![vec![]; 2],
            static_values: vec![],
            dynamic: vec![vec![Some(0)], vec![Some(1)]],
        };
        assert_eq!(counterfactual_neighbors(&s, &schema).len(), 3);
    }

    #[test]
    fn three_valued_sample_two_agents_has_eight_neighbours() {
        let schema = sample_schema(2, vec![0, 1]);
        let s = state(&[Some(1), Some(0)]);
        let cf = counterfactual_neighbors(&s, &schema);
        assert_eq!(cf.len(), 8);
        assert!(!cf.contains(&s));
        // brute force: every pair of values except the origin
        let mut expected = Vec::new();
        for a in 0..3u16 {
            for b in 0..3u16 {
                let n = state(&[Some(a), Some(b)]);
                if n != s {
                    expected.push(n);
                }
            }
        }
        let mut got = cf.neighbors.clone();
        got.sort();
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn no_dynamic_features_means_no_neighbours() {
        let schema =
            FeatureSchema::new(vec![vec![FeatureDomain::range("x", 2)]], vec![], vec![]).unwrap();
        let s = FactoredJointState {
            local: vec![vec![0]],
            static_values: vec![],
            dynamic: vec![vec![]],
        };
        assert!(counterfactual_neighbors(&s, &schema).is_empty());
    }

    #[test]
    fn agent_scope_varies_only_that_agent() {
        let schema = sample_schema(2, vec![0, 1]);
        let s = state(&[Some(1), Some(0)]);
        let cf = agent_cf_neighbors(&s, 0, &schema);
        assert_eq!(cf.len(), 2);
        assert!(cf.neighbors.iter().all(|n| n.dynamic[1] == s.dynamic[1]));
        let full = counterfactual_neighbors(&s, &schema);
        assert!(cf.neighbors.iter().all(|n| full.contains(n)));
    }

    #[test]
    fn agent_without_controlled_features_has_no_neighbours() {
        let schema = sample_schema(2, vec![0]);
        let s = state(&[Some(1), None]);
        assert!(agent_cf_neighbors(&s, 1, &schema).is_empty());
        assert_eq!(agent_cf_neighbors(&s, 0, &schema).len(), 2);
    }

    #[test]
    fn shelf_size_variants() {
        let schema = FeatureSchema::new(
            vec![vec![FeatureDomain::range("x", 2)]],
            vec![],
            vec![DynamicFeature {
                domain: FeatureDomain::new("shelf_size", ["X", "small", "big"]),
                controllers: vec![0],
            }],
        )
        .unwrap();
        let s = FactoredJointState {
            local: vec![vec![0]],
            static_values: vec![],
            dynamic: vec![vec![Some(2)]],
        };
        let cf = agent_cf_neighbors(&s, 0, &schema);
        let values: Vec<_> = cf.neighbors.iter().map(|n| n.dynamic[0][0]).collect();
        assert_eq!(values, vec![Some(0), Some(1)]);
    }
}

//! Generalising compiled local penalties to local states the rollouts never
//! visited, by regressing penalty on a small set of designated features.
//!
//! The default learner is an exact-match table: the prediction for a feature
//! assignment is the mean target of the samples with that assignment, and
//! zero for assignments never seen.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::counterfactual::AlternativeCache;
use crate::error::{Error, Result};
use crate::recon::BlameLedger;
use crate::world::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SampleSource {
    Observed,
    Counterfactual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySample {
    /// `(feature name, value index)` pairs.
    pub features: Vec<(String, u16)>,
    pub target: f64,
    pub source: SampleSource,
}

/// Anything that maps a feature assignment to a penalty.
pub trait PenaltyRegressor {
    fn feature_names(&self) -> &[String];
    fn predict(&self, assignment: &[u16]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyPredictor {
    features: Vec<String>,
    lookup: BTreeMap<Vec<u16>, f64>,
    default: f64,
}

impl PenaltyRegressor for PenaltyPredictor {
    fn feature_names(&self) -> &[String] {
        &self.features
    }

    fn predict(&self, assignment: &[u16]) -> f64 {
        self.lookup.get(assignment).copied().unwrap_or(self.default)
    }
}

impl PenaltyPredictor {
    pub fn table(&self) -> &BTreeMap<Vec<u16>, f64> {
        &self.lookup
    }

    /// Plain-text table: a header naming the features, then one
    /// `v1,v2,...<TAB>prediction` line per learned assignment.
    pub fn to_text(&self) -> String {
        let mut out = format!("# features: {}\n", self.features.join(","));
        for (key, value) in &self.lookup {
            let k = key
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(out, "{k}\t{value:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).unwrap_or_default();
        let names = header
            .strip_prefix("# features: ")
            .ok_or_else(|| Error::Parse {
                line: 1,
                column: 1,
                message: "missing '# features:' header".into(),
            })?;
        let features: Vec<String> = names
            .split(',')
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        let mut lookup = BTreeMap::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |column: usize, message: &str| Error::Parse {
                line: i + 1,
                column,
                message: message.into(),
            };
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| err(1, "expected a tab"))?;
            let key = if k.is_empty() {
                Vec::new()
            } else {
                k.split(',')
                    .map(|x| x.parse::<u16>().map_err(|_| err(1, "bad feature value")))
                    .collect::<Result<Vec<_>>>()?
            };
            if key.len() != features.len() {
                return Err(err(1, "wrong number of feature values"));
            }
            let value: f64 = v.parse().map_err(|_| err(k.len() + 2, "bad prediction"))?;
            lookup.insert(key, value);
        }
        Ok(PenaltyPredictor {
            features,
            lookup,
            default: 0.0,
        })
    }
}

/// Fit the exact-match mean regressor over `features`.
pub fn train(features: &[String], samples: &[PenaltySample]) -> Result<PenaltyPredictor> {
    if samples.is_empty() {
        return Err(Error::Input("no training samples".into()));
    }
    let mut groups: BTreeMap<Vec<u16>, Vec<f64>> = BTreeMap::new();
    for s in samples {
        let mut key = vec![None; features.len()];
        for (name, value) in &s.features {
            let pos = features.iter().position(|f| f == name).ok_or_else(|| {
                Error::Input(format!("feature '{name}' is not a generalisation feature"))
            })?;
            key[pos] = Some(*value);
        }
        let key: Vec<u16> = key
            .into_iter()
            .zip(features)
            .map(|(v, f)| v.ok_or_else(|| Error::Input(format!("sample missing feature '{f}'"))))
            .collect::<Result<_>>()?;
        groups.entry(key).or_default().push(s.target);
    }
    let lookup = groups
        .into_iter()
        .map(|(k, mut targets)| {
            // summation order fixed so sample order cannot change the result
            targets.sort_by(f64::total_cmp);
            let mean = targets.iter().sum::<f64>() / targets.len() as f64;
            (k, mean)
        })
        .collect();
    Ok(PenaltyPredictor {
        features: features.to_vec(),
        lookup,
        default: 0.0,
    })
}

/// Where each generalisation feature lives in an agent's projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FeatureSlot {
    Local(usize),
    Dynamic(usize),
    Static(usize),
}

/// Resolves generalisation feature names against one agent's projections.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    names: Vec<String>,
    slots: Vec<FeatureSlot>,
}

impl FeatureExtractor {
    pub fn new(world: &World, agent: usize, names: &[String]) -> Result<Self> {
        let schema = &world.schema;
        let slots = names
            .iter()
            .map(|n| {
                if let Some(i) = schema.local_index(agent, n) {
                    Ok(FeatureSlot::Local(i))
                } else if let Some(i) = schema.dynamic_index(n) {
                    Ok(FeatureSlot::Dynamic(i))
                } else if let Some(i) = schema.static_features().iter().position(|f| &f.name == n) {
                    Ok(FeatureSlot::Static(i))
                } else {
                    Err(Error::Input(format!(
                        "unknown generalisation feature '{n}'"
                    )))
                }
            })
            .collect::<Result<_>>()?;
        Ok(FeatureExtractor {
            names: names.to_vec(),
            slots,
        })
    }

    /// Feature values of local state `state`. Dynamic features the agent
    /// does not control read as value 0.
    pub fn values(&self, world: &World, agent: usize, state: usize) -> Vec<u16> {
        let p = world.agents[agent].space.projection(state);
        self.slots
            .iter()
            .map(|slot| match *slot {
                FeatureSlot::Local(i) => p.local[i],
                FeatureSlot::Dynamic(i) => p.dynamic[i].unwrap_or(0),
                FeatureSlot::Static(i) => p.static_values[i],
            })
            .collect()
    }

    pub fn sample(
        &self,
        world: &World,
        agent: usize,
        state: usize,
        target: f64,
        source: SampleSource,
    ) -> PenaltySample {
        PenaltySample {
            features: self
                .names
                .iter()
                .cloned()
                .zip(self.values(world, agent, state))
                .collect(),
            target,
            source,
        }
    }
}

/// One observed sample per agent per visited local state, with the compiled
/// local penalty as target.
pub fn observed_samples(
    world: &World,
    ledger: &BlameLedger,
    features: &[String],
) -> Result<Vec<Vec<PenaltySample>>> {
    let m = world.num_agents();
    let mut seen: Vec<BTreeMap<usize, ()>> = vec![BTreeMap::new(); m];
    for key in ledger.states.keys() {
        for (agent, &s) in key.iter().enumerate() {
            seen[agent].insert(s, ());
        }
    }
    (0..m)
        .map(|agent| {
            let ex = FeatureExtractor::new(world, agent, features)?;
            Ok(seen[agent]
                .keys()
                .map(|&s| {
                    ex.sample(
                        world,
                        agent,
                        s,
                        ledger.local_penalty[agent][s],
                        SampleSource::Observed,
                    )
                })
                .collect())
        })
        .collect()
}

/// Append, for every blamed joint state and every agent, the blame that
/// agent would carry at each of its valid counterfactual neighbours.
pub fn augment_with_counterfactuals(
    world: &World,
    ledger: &BlameLedger,
    features: &[String],
    samples: Vec<Vec<PenaltySample>>,
    cache: &mut AlternativeCache,
) -> Result<Vec<Vec<PenaltySample>>> {
    let m = world.num_agents();
    if samples.len() != m {
        return Err(Error::Input(format!(
            "{} sample lists for {m} agents",
            samples.len()
        )));
    }
    let extractors = (0..m)
        .map(|a| FeatureExtractor::new(world, a, features))
        .collect::<Result<Vec<_>>>()?;
    let mut out = samples;
    for key in ledger.states.keys() {
        for agent in 0..m {
            let alternatives = cache.get(world, agent, key[agent]).to_vec();
            for alt in alternatives {
                let mut cf_key = key.clone();
                cf_key[agent] = alt;
                let entry = ledger.blame_state(world, &cf_key, cache);
                out[agent].push(extractors[agent].sample(
                    world,
                    agent,
                    alt,
                    entry.agents[agent].blame,
                    SampleSource::Counterfactual,
                ));
            }
        }
    }
    Ok(out)
}

/// Predicted penalty for every local state of `agent`.
pub fn generalized_penalty(
    predictor: &dyn PenaltyRegressor,
    world: &World,
    agent: usize,
) -> Result<Vec<f64>> {
    let ex = FeatureExtractor::new(world, agent, predictor.feature_names())?;
    Ok((0..world.agents[agent].space.len())
        .map(|s| predictor.predict(&ex.values(world, agent, s)))
        .collect())
}

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// A named finite feature domain. Values are referred to by index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureDomain {
    pub name: String,
    pub values: Vec<String>,
}

impl FeatureDomain {
    pub fn new(
        name: impl Into<String>,
        values: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        FeatureDomain {
            name: name.into(),
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    /// Domain `0..n` with values spelled as integers.
    pub fn range(name: impl Into<String>, n: usize) -> Self {
        FeatureDomain {
            name: name.into(),
            values: (0..n).map(|v| v.to_string()).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, value: &str) -> Option<u16> {
        self.values
            .iter()
            .position(|v| v == value)
            .map(|i| i as u16)
    }
}

/// A dynamic global feature. Each controlling agent carries its own value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicFeature {
    pub domain: FeatureDomain,
    pub controllers: Vec<usize>,
}

/// Partition of the world's features into per-agent local features, shared
/// static globals and agent-controlled dynamic globals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    local: Vec<Vec<FeatureDomain>>,
    static_global: Vec<FeatureDomain>,
    dynamic: Vec<DynamicFeature>,
    /// `controls[agent][feature]`
    controls: Vec<Vec<bool>>,
}

const MAX_DOMAIN: usize = u16::MAX as usize;

impl FeatureSchema {
    pub fn new(
        local: Vec<Vec<FeatureDomain>>,
        static_global: Vec<FeatureDomain>,
        dynamic: Vec<DynamicFeature>,
    ) -> Result<Self> {
        let num_agents = local.len();
        if num_agents == 0 {
            return Err(Error::Schema("schema needs at least one agent".into()));
        }
        let mut seen: HashSet<&str> = HashSet::new();
        let mut category_of: HashMap<&str, &str> = HashMap::new();
        let check_domain = |d: &FeatureDomain| -> Result<()> {
            if d.values.is_empty() || d.values.len() > MAX_DOMAIN {
                return Err(Error::Schema(format!(
                    "feature '{}' needs a finite nonempty domain",
                    d.name
                )));
            }
            let distinct: HashSet<&String> = d.values.iter().collect();
            if distinct.len() != d.values.len() {
                return Err(Error::Schema(format!(
                    "feature '{}' repeats a value",
                    d.name
                )));
            }
            Ok(())
        };
        for agent in &local {
            let mut mine = HashSet::new();
            for d in agent {
                check_domain(d)?;
                if !mine.insert(d.name.as_str()) {
                    return Err(Error::Schema(format!(
                        "duplicate local feature '{}'",
                        d.name
                    )));
                }
                category_of.insert(d.name.as_str(), "local");
            }
        }
        for d in &static_global {
            check_domain(d)?;
            if category_of.contains_key(d.name.as_str()) || !seen.insert(d.name.as_str()) {
                return Err(Error::Schema(format!("feature name '{}' reused", d.name)));
            }
        }
        for f in &dynamic {
            check_domain(&f.domain)?;
            let name = f.domain.name.as_str();
            if category_of.contains_key(name) || !seen.insert(name) {
                return Err(Error::Schema(format!("feature name '{name}' reused")));
            }
            if f.controllers.is_empty() {
                return Err(Error::Schema(format!(
                    "dynamic feature '{name}' has no controller"
                )));
            }
            if let Some(a) = f.controllers.iter().find(|&&a| a >= num_agents) {
                return Err(Error::Schema(format!(
                    "dynamic feature '{name}' controlled by unknown agent {a}"
                )));
            }
        }
        let controls = (0..num_agents)
            .map(|a| dynamic.iter().map(|f| f.controllers.contains(&a)).collect())
            .collect();
        Ok(FeatureSchema {
            local,
            static_global,
            dynamic,
            controls,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.local.len()
    }

    pub fn local_features(&self, agent: usize) -> &[FeatureDomain] {
        &self.local[agent]
    }

    pub fn static_features(&self) -> &[FeatureDomain] {
        &self.static_global
    }

    pub fn dynamic_features(&self) -> &[DynamicFeature] {
        &self.dynamic
    }

    pub fn controls(&self, agent: usize, feature: usize) -> bool {
        self.controls[agent][feature]
    }

    pub fn dynamic_index(&self, name: &str) -> Option<usize> {
        self.dynamic.iter().position(|f| f.domain.name == name)
    }

    pub fn local_index(&self, agent: usize, name: &str) -> Option<usize> {
        self.local[agent].iter().position(|f| f.name == name)
    }
}

/// Joint state in factored form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactoredJointState {
    /// Per agent, one value per local feature.
    pub local: Vec<Vec<u16>>,
    pub static_values: Vec<u16>,
    /// Per agent, one entry per dynamic feature: `Some` exactly when the
    /// agent controls that feature.
    pub dynamic: Vec<Vec<Option<u16>>>,
}

/// What a single agent observes of the joint state: its local features, its
/// own dynamic values and the static globals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Projection {
    pub local: Vec<u16>,
    pub dynamic: Vec<Option<u16>>,
    pub static_values: Vec<u16>,
}

impl FactoredJointState {
    pub fn num_agents(&self) -> usize {
        self.local.len()
    }

    pub fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        let m = schema.num_agents();
        if self.local.len() != m || self.dynamic.len() != m {
            return Err(Error::Schema(format!(
                "joint state has {} agents, schema has {m}",
                self.local.len()
            )));
        }
        let in_domain = |v: u16, d: &FeatureDomain| (v as usize) < d.size();
        if self.static_values.len() != schema.static_global.len()
            || !self
                .static_values
                .iter()
                .zip(&schema.static_global)
                .all(|(&v, d)| in_domain(v, d))
        {
            return Err(Error::Schema(
                "static assignment outside its domains".into(),
            ));
        }
        for a in 0..m {
            let loc = &schema.local[a];
            if self.local[a].len() != loc.len()
                || !self.local[a].iter().zip(loc).all(|(&v, d)| in_domain(v, d))
            {
                return Err(Error::Schema(format!(
                    "local assignment of agent {a} outside its domains"
                )));
            }
            if self.dynamic[a].len() != schema.dynamic.len() {
                return Err(Error::Schema(format!(
                    "agent {a} dynamic assignment has wrong length"
                )));
            }
            for (d, (v, f)) in self.dynamic[a].iter().zip(&schema.dynamic).enumerate() {
                match (v, schema.controls(a, d)) {
                    (Some(v), true) if in_domain(*v, &f.domain) => {}
                    (None, false) => {}
                    (Some(v), true) => {
                        return Err(Error::Schema(format!(
                            "agent {a} value {v} outside domain of '{}'",
                            f.domain.name
                        )))
                    }
                    (Some(_), false) => {
                        return Err(Error::Schema(format!(
                            "agent {a} assigns '{}' which it does not control",
                            f.domain.name
                        )))
                    }
                    (None, true) => {
                        return Err(Error::Schema(format!(
                            "agent {a} missing value for '{}'",
                            f.domain.name
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn projection(&self, agent: usize) -> Projection {
        Projection {
            local: self.local[agent].clone(),
            dynamic: self.dynamic[agent].clone(),
            static_values: self.static_values.clone(),
        }
    }

    /// Build a joint state from per-agent projections that share the same
    /// static assignment.
    pub fn from_projections<'a>(parts: impl IntoIterator<Item = &'a Projection>) -> Self {
        let mut local = Vec::new();
        let mut dynamic = Vec::new();
        let mut static_values = Vec::new();
        for p in parts {
            local.push(p.local.clone());
            dynamic.push(p.dynamic.clone());
            static_values = p.static_values.clone();
        }
        FactoredJointState {
            local,
            static_values,
            dynamic,
        }
    }
}

/// Index of an agent's MDP states by their factored projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalStateSpace {
    projections: Vec<Projection>,
    index: HashMap<Projection, usize>,
}

impl LocalStateSpace {
    pub fn new(projections: Vec<Projection>) -> Result<Self> {
        let mut index = HashMap::with_capacity(projections.len());
        for (i, p) in projections.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::Schema(format!("state {i} repeats a projection")));
            }
        }
        Ok(LocalStateSpace { projections, index })
    }

    pub fn len(&self) -> usize {
        self.projections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projections.is_empty()
    }

    pub fn projection(&self, state: usize) -> &Projection {
        &self.projections[state]
    }

    pub fn state_of(&self, projection: &Projection) -> Option<usize> {
        self.index.get(projection).copied()
    }
}

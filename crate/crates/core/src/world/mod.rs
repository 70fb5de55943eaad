//! Factored joint states, the joint side-effect penalty and the monitor that
//! scores a joint policy by simulation.

pub mod penalty;
pub mod rollout;
pub mod schema;

pub use penalty::{joint_penalty, max_penalty, Condition, PenaltyModel, PenaltyTerm};
pub use rollout::{rollout_joint, RolloutConfig, RolloutReport, TraceStep};
pub use schema::{
    DynamicFeature, FactoredJointState, FeatureDomain, FeatureSchema, LocalStateSpace, Projection,
};

use crate::error::{Error, Result};
use crate::mdp::AgentTaskModel;

/// Joint state keyed by each agent's local MDP state index.
pub type JointKey = Vec<usize>;

/// One agent's task model together with the projection of each of its
/// states and the states it can reach from its start.
#[derive(Debug, Clone)]
pub struct AgentWorld {
    pub model: AgentTaskModel,
    pub space: LocalStateSpace,
    reachable: Vec<bool>,
}

impl AgentWorld {
    pub fn new(model: AgentTaskModel, space: LocalStateSpace) -> Result<Self> {
        if model.num_states() != space.len() {
            return Err(Error::Model(format!(
                "model has {} states but {} projections",
                model.num_states(),
                space.len()
            )));
        }
        let reachable = model.reachable_from_start();
        Ok(AgentWorld {
            model,
            space,
            reachable,
        })
    }

    pub fn is_reachable(&self, state: usize) -> bool {
        self.reachable[state]
    }

    /// State index of `projection` if it is a state reachable from the
    /// agent's start.
    pub fn reachable_state(&self, projection: &Projection) -> Option<usize> {
        self.space
            .state_of(projection)
            .filter(|&s| self.reachable[s])
    }
}

/// Everything the metareasoner knows: the schema, the penalty model and each
/// agent's model.
#[derive(Debug, Clone)]
pub struct World {
    pub schema: FeatureSchema,
    pub penalty: PenaltyModel,
    pub agents: Vec<AgentWorld>,
}

impl World {
    pub fn new(
        schema: FeatureSchema,
        penalty: PenaltyModel,
        agents: Vec<AgentWorld>,
    ) -> Result<Self> {
        if agents.len() != schema.num_agents() {
            return Err(Error::Schema(format!(
                "{} agent models for a {}-agent schema",
                agents.len(),
                schema.num_agents()
            )));
        }
        for (i, a) in agents.iter().enumerate() {
            for s in 0..a.space.len() {
                let p = a.space.projection(s);
                if p.local.len() != schema.local_features(i).len()
                    || p.dynamic.len() != schema.dynamic_features().len()
                {
                    return Err(Error::Schema(format!(
                        "agent {i} state {s} does not match the schema"
                    )));
                }
            }
        }
        Ok(World {
            schema,
            penalty,
            agents,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn models(&self) -> Vec<&AgentTaskModel> {
        self.agents.iter().map(|a| &a.model).collect()
    }

    pub fn start_key(&self) -> JointKey {
        self.agents.iter().map(|a| a.model.start_state()).collect()
    }

    pub fn joint_state(&self, key: &[usize]) -> FactoredJointState {
        FactoredJointState::from_projections(
            key.iter()
                .zip(&self.agents)
                .map(|(&s, a)| a.space.projection(s)),
        )
    }

    /// Joint penalty of the joint state named by `key`.
    pub fn penalty_of(&self, key: &[usize]) -> f64 {
        let counts = self.penalty.counts(
            key.iter()
                .zip(&self.agents)
                .map(|(&s, a)| a.space.projection(s).dynamic.as_slice()),
        );
        self.penalty.penalty_from_counts(&counts)
    }

    pub fn max_penalty(&self) -> f64 {
        max_penalty(&self.penalty, self.num_agents())
    }
}

//! Decentralized planning for teams of agents whose joint behaviour causes
//! negative side effects none of them would cause alone.
//!
//! Each agent solves its own task MDP. A central monitor simulates the joint
//! policy, scores the side effects, splits the blame between agents by
//! counterfactual reasoning and hands each a local penalty. Selected agents
//! then replan lexicographically: task first, penalty second.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterfactual;
pub mod domains;
pub mod error;
pub mod generalize;
pub mod harness;
pub mod lexi;
pub mod mdp;
pub mod recon;
pub mod world;

pub use error::{Error, Result, Stage};

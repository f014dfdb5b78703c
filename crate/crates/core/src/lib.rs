//! Goal-adaptive agents on top of a frozen multi-horizon measurement
//! predictor.
//!
//! The crate is organised bottom-up:
//!
//! - [`env`]: seeded gridworld battle simulator with ammo/health/kills
//!   measurements and three scenario presets.
//! - [`predictor`]: a multilayer perceptron that predicts measurement changes
//!   at several future offsets for every action, trained self-supervised
//!   under randomized goals.
//! - [`policy`]: goal-weighted action selection and goal providers.
//! - [`goal_ann`]: the feedforward phenotype of an evolved goal network.
//! - [`neat`]: NEAT evolution of goal networks against episode fitness.
//! - [`stats`]: Mann-Whitney U test and sample summaries.
//! - [`experiment`]: the end-to-end pipeline behind the command-line tool.

pub mod env;
pub mod error;
pub mod kv;
pub mod seed;

pub use error::{Error, Result};
pub mod agent;
pub mod experiment;
pub mod goal_ann;
pub mod neat;
pub mod policy;
pub mod predictor;
pub mod stats;

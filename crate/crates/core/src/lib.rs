//! Agent-based city epidemic simulator with individual-level intervention
//! policies: infection-risk estimation, a contact graph network trained with
//! PPO, rule-based baselines, and cost/score reporting.

pub mod config;
pub mod error;
pub mod gnn;
pub mod metrics;
pub mod policy;
pub mod ppo;
pub mod risk;
pub mod rng;
pub mod sim;

pub use config::{RunConfig, Scenario, WorldConfig};
pub use error::{Error, Result};

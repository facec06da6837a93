//! Simulator and multi-agent learner for UAV relay networks under jamming.
//!
//! A team of UAVs relays traffic for mobile ground source/destination pairs
//! while static jammers raise the interference floor. Agents are trained with
//! centralized training and decentralized execution: a shared state-value
//! critic sees the global state, and each UAV runs its own Double-DQN actor
//! on a local observation.

pub mod baselines;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod replay;
pub mod rewards;
pub mod trainer;

pub use config::{load_config, RunConfig};
pub use error::{Error, Result};

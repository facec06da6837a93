//! Centralized-critic, decentralized-actor learner.

mod agents;
mod run;
mod targets;
mod update;

pub use agents::CtdeAgents;
pub use run::{beta_at, epsilon_at, stream_rng, train, TrainEvent, TrainOutcome};
pub use targets::{actor_target_value, argmax, bootstrap, masked_argmax, select_action};
pub use update::{
    actor_loss_grad, actor_update, compute_targets, critic_loss_grad, critic_update,
    td_error_for_priority, update, Batch, Targets, UpdateStats,
};

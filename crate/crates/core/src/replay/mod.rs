//! Prioritized experience replay.

mod buffer;
mod sum_tree;

pub use buffer::{PriorityBuffer, Sample, Transition, TransitionRef};
pub use sum_tree::SumTree;

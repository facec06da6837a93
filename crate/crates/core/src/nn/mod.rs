//! Small dense-network toolkit: MLP forward/backward, Adam, Huber loss and
//! running input normalization.

mod adam;
pub mod codec;
mod loss;
mod mlp;
mod normalizer;

pub use adam::{adam_update, Adam, AdamHyper};
pub use loss::huber;
pub use mlp::{ForwardCache, Gradients, Layer, MlpNet};
pub use normalizer::Normalizer;

//! Network building blocks and the optimizer.

mod adam;
mod checkpoint;
mod fourier;
mod init;
mod mlp;
mod modified;
mod network;

pub use adam::{adam_step, learning_rate, AdamState};
pub use checkpoint::Archive;
pub use fourier::{fourier_embed, FourierFeatureMap};
pub use init::glorot_normal;
pub use mlp::{mlp_forward, Activation, Dense, MlpParams};
pub use modified::{modified_mlp_forward, ModifiedMlpParams};
pub use network::{Backbone, BackboneKind, NetSpec, Network};

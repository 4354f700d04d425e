//! Dense networks with hand-written gradients, Adam, and EMA targets.

mod adam;
mod checkpoint;
mod matrix;
mod mlp;
mod target;

pub use adam::AdamState;
pub use checkpoint::{load_mlp, read_mlp, save_mlp, write_mlp, EXNN_MAGIC, EXNN_VERSION};
pub use matrix::Matrix;
pub use mlp::{orthogonal, ForwardCache, Mlp, OutputHead};
pub use target::TargetCopy;

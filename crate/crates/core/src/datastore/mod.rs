//! Episodic transition datasets, their on-disk format, and the transforms
//! applied between collection and learning.

mod codec;
mod dataset;
mod manifest;
mod transform;

pub use codec::{content_hash, decode, encode, load, save, write_atomic, EXD_MAGIC, EXD_VERSION};
pub use dataset::{Batch, Episode, TransitionDataset};
pub use manifest::{load_manifest, manifest_path, save_with_manifest, Manifest, SourceRef};
pub use transform::{mix, relabel, suffix_slice, EpisodeOrigin, Mixed};

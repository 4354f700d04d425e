//! Exploratory data collection and offline reinforcement learning on
//! reward-free datasets.

pub mod bench;
pub mod collector;
pub mod datastore;
pub mod envs;
mod error;
pub mod nn;
pub mod offline;
mod preset;
mod rng;

pub use error::{Error, Result};
pub use preset::Preset;
pub use rng::Rng;

//! Offline learners over a labeled dataset, and online evaluation.
//!
//! All five learners share [`ActorCritic`]: a deterministic tanh actor and
//! twin critics with EMA targets. They differ only in how a batch turns into
//! critic and actor gradients, and are selected by name via [`make_learner`].

mod actor_critic;
mod config;
mod evaluate;
mod learners;
mod train;

pub use actor_critic::{bc_gradient, cql_penalty, smoothing_noise, ActorCritic, CqlTerm};
pub use config::{CrrTransform, OfflineConfig};
pub use evaluate::{evaluate, mean_and_stderr, EvalResult, Policy};
pub use learners::{
    learner_ids, make_learner, Bc, Cql, Crr, OfflineLearner, StepLosses, StepRngs, Td3, Td3Bc,
};
pub use train::{load_agent, save_agent, train, train_with_hook, OfflineAgent};

use std::path::Path;

use crate::datastore::{Batch, TransitionDataset};
use crate::error::{Error, Result};
use crate::nn::{load_mlp, save_mlp, Matrix};
use crate::offline::{make_learner, smoothing_noise, ActorCritic, OfflineConfig, StepLosses, StepRngs};
use crate::rng::Rng;

/// Networks plus the configuration and update counter of one learner.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineAgent {
    pub config: OfflineConfig,
    pub ac: ActorCritic,
    /// Completed calls to a learner's `train_step`.
    pub updates: u64,
}

impl OfflineAgent {
    pub fn new(obs_dim: usize, act_dim: usize, config: OfflineConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let ac = ActorCritic::new(obs_dim, act_dim, config.hidden_dim, config.n_hidden, config.tau_q, rng)?;
        Ok(Self {
            config,
            ac,
            updates: 0,
        })
    }

    /// Counts one update; true when this is an actor (and target) turn.
    pub(crate) fn begin_update(&mut self) -> bool {
        self.updates += 1;
        self.updates.is_multiple_of(self.config.update_every as u64)
    }

    pub fn td3_targets(&self, batch: &Batch, rng: &mut Rng) -> Result<Vec<f64>> {
        let rewards = batch.rewards()?;
        let noise = smoothing_noise(
            batch.len(),
            self.ac.act_dim(),
            self.config.target_noise,
            self.config.stddev_clip,
            rng,
        );
        self.ac
            .td3_targets_with_noise(rewards, &batch.next_obs, &noise, self.config.discount)
    }

    pub fn act(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let m = Matrix::from_vec(1, obs.len(), obs.to_vec())?;
        Ok(self.ac.act(&m)?.into_vec())
    }
}

/// Runs `config.training_steps` updates of the configured learner.
pub fn train(dataset: &TransitionDataset, config: &OfflineConfig, rng: &Rng) -> Result<OfflineAgent> {
    train_with_hook(dataset, config, rng, |_, _, _| Ok(()))
}

/// As [`train`], calling `hook(step, agent, losses)` every 10% of training
/// and after the final step.
pub fn train_with_hook(
    dataset: &TransitionDataset,
    config: &OfflineConfig,
    rng: &Rng,
    mut hook: impl FnMut(usize, &OfflineAgent, StepLosses) -> Result<()>,
) -> Result<OfflineAgent> {
    if !dataset.is_labeled() {
        return Err(Error::Unlabeled);
    }
    let learner = make_learner(config)?;
    let mut agent = OfflineAgent::new(dataset.obs_dim(), dataset.act_dim(), config.clone(), &mut rng.split("init"))?;
    let mut batch_rng = rng.split("batch");
    let mut rngs = StepRngs::from_root(rng);
    let cadence = (config.training_steps / 10).max(1);
    for step in 1..=config.training_steps {
        let batch = dataset.sample_batch(config.batch, &mut batch_rng)?;
        let losses = learner.train_step(&mut agent, &batch, &mut rngs)?;
        if step % cadence == 0 || step == config.training_steps {
            hook(step, &agent, losses)?;
        }
    }
    Ok(agent)
}

/// Writes `actor.exnn`-style files: the actor to `path`, critics alongside.
pub fn save_agent(agent: &OfflineAgent, path: &Path) -> Result<()> {
    save_mlp(&agent.ac.actor, path)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    for (i, critic) in [&agent.ac.critic1, &agent.ac.critic2].into_iter().enumerate() {
        save_mlp(critic, &path.with_file_name(format!("{stem}.q{}.exnn", i + 1)))?;
    }
    Ok(())
}

/// Loads the actor written by [`save_agent`].
pub fn load_agent(path: &Path) -> Result<crate::nn::Mlp> {
    load_mlp(path)
}

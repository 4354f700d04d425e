//! Online data collection: an exploration agent interacts with an
//! environment and every transition it sees is stored, reward-free.

pub mod intrinsic;
mod replay;

pub use intrinsic::{
    intrinsic_ids, knn_particle_reward, make_intrinsic, ensemble_disagreement, IntrinsicBatch, IntrinsicModel,
    ModelContext,
};
pub use replay::Replay;

use serde::{Deserialize, Serialize};

use crate::datastore::{Batch, Episode, TransitionDataset};
use crate::envs::{reward_for, Environment};
use crate::error::{Error, Result};
use crate::offline::{make_learner, OfflineAgent, OfflineConfig, OfflineLearner, StepRngs};
use crate::preset::Preset;
use crate::rng::Rng;

/// Collection algorithms: uniform random actions, the intrinsic models, and
/// the two reward-supervised baselines.
pub const COLLECTOR_IDS: &[&str] = &[
    "random",
    "icm",
    "disagreement",
    "rnd",
    "apt",
    "diayn",
    "aps",
    "supervised",
    "semi_supervised",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RewardMode {
    Random,
    Intrinsic,
    Extrinsic,
    Mixed,
}

fn reward_mode(algo: &str) -> Result<RewardMode> {
    match algo {
        "random" => Ok(RewardMode::Random),
        "supervised" => Ok(RewardMode::Extrinsic),
        "semi_supervised" => Ok(RewardMode::Mixed),
        id if intrinsic_ids().contains(&id) => Ok(RewardMode::Intrinsic),
        id => Err(Error::Unknown {
            kind: "collection algorithm",
            id: id.to_string(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectConfig {
    pub algo_id: String,
    pub budget_episodes: usize,
    /// Steps of uniform random actions before the agent acts or learns.
    pub seed_frames: usize,
    pub exploration_stddev: f64,
    pub stddev_clip: f64,
    pub replay_capacity: usize,
    pub batch: usize,
    pub discount: f64,
    pub lr: f64,
    pub update_every: usize,
    pub tau: f64,
    pub hidden_dim: usize,
    pub n_hidden: usize,
    pub knn_k: usize,
    /// Extrinsic reward for the supervised and semi-supervised collectors.
    pub data_task: Option<String>,
    /// Weight of the intrinsic term in semi-supervised collection.
    pub intrinsic_weight: f64,
    pub aux_nets: bool,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            algo_id: "random".into(),
            budget_episodes: 1000,
            seed_frames: 4000,
            exploration_stddev: 0.2,
            stddev_clip: 0.3,
            replay_capacity: 1_000_000,
            batch: 1024,
            discount: 0.99,
            lr: 1e-4,
            update_every: 2,
            tau: 0.01,
            hidden_dim: 1024,
            n_hidden: 2,
            knn_k: 12,
            data_task: None,
            intrinsic_weight: 1.0,
            aux_nets: false,
        }
    }
}

impl CollectConfig {
    pub fn for_preset(algo_id: &str, preset: Preset) -> Self {
        Self {
            algo_id: algo_id.to_string(),
            budget_episodes: preset.budget_episodes(),
            batch: preset.batch_size(),
            hidden_dim: preset.hidden_dim(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        reward_mode(&self.algo_id)?;
        if self.batch == 0 || self.update_every == 0 || self.replay_capacity == 0 {
            return bad("batch, update_every and replay_capacity must be positive");
        }
        if !(self.exploration_stddev >= 0.0 && self.stddev_clip >= 0.0) {
            return bad("exploration noise parameters must be non-negative");
        }
        if !self.intrinsic_weight.is_finite() {
            return bad("intrinsic_weight must be finite");
        }
        let needs_task = matches!(self.algo_id.as_str(), "supervised" | "semi_supervised");
        if needs_task && self.data_task.is_none() {
            return bad("supervised collection needs a data task");
        }
        Ok(())
    }

    fn backbone_config(&self) -> OfflineConfig {
        OfflineConfig {
            algo_id: "td3".into(),
            batch: self.batch,
            lr: self.lr,
            discount: self.discount,
            update_every: self.update_every,
            tau_q: self.tau,
            hidden_dim: self.hidden_dim,
            n_hidden: self.n_hidden,
            target_noise: self.exploration_stddev,
            stddev_clip: self.stddev_clip,
            ..OfflineConfig::default()
        }
    }
}

/// Whether the skill/task vector is redrawn before step `t` of an episode.
pub fn meta_resample_due(t: usize, period: Option<usize>) -> bool {
    t == 0 || period.is_some_and(|p| p > 0 && t.is_multiple_of(p))
}

/// Output of a collection run.
#[derive(Debug, Clone)]
pub struct Collected {
    pub dataset: TransitionDataset,
    /// Per-episode return under the data task, when one was given.
    pub task_returns: Option<Vec<f64>>,
    /// Agent updates performed.
    pub updates: u64,
}

struct Learning {
    agent: OfflineAgent,
    td3: Box<dyn OfflineLearner>,
    step_rngs: StepRngs,
    model: Option<Box<dyn IntrinsicModel>>,
    model_rng: Rng,
    replay: Replay,
    replay_rng: Rng,
}

/// Runs `budget_episodes` episodes and returns every transition.
pub fn collect(env: &dyn Environment, config: &CollectConfig, rng: &Rng) -> Result<Collected> {
    config.validate()?;
    let spec = env.spec().clone();
    let mode = reward_mode(&config.algo_id)?;
    let task = config
        .data_task
        .as_deref()
        .map(|id| reward_for(&spec.env_id, id))
        .transpose()?;

    let mut learning = if mode == RewardMode::Random {
        None
    } else {
        let ctx = ModelContext {
            obs_dim: spec.obs_dim,
            act_dim: spec.act_dim,
            hidden_dim: config.hidden_dim,
            lr: config.lr,
            knn_k: config.knn_k,
            aux_nets: config.aux_nets,
        };
        let mut model_init = rng.split("intrinsic_init");
        let model = match mode {
            RewardMode::Intrinsic => Some(make_intrinsic(&config.algo_id, &ctx, &mut model_init)?),
            RewardMode::Mixed => Some(make_intrinsic("apt", &ctx, &mut model_init)?),
            _ => None,
        };
        let meta_dim = model.as_ref().map_or(0, |m| m.meta_dim());
        let backbone = config.backbone_config();
        let td3 = make_learner(&backbone)?;
        let agent = OfflineAgent::new(spec.obs_dim + meta_dim, spec.act_dim, backbone, &mut rng.split("init"))?;
        Some(Learning {
            agent,
            td3,
            step_rngs: StepRngs::from_root(rng),
            model,
            model_rng: rng.split("intrinsic"),
            replay: Replay::new(config.replay_capacity, spec.obs_dim, spec.act_dim, meta_dim),
            replay_rng: rng.split("replay"),
        })
    };

    let mut explore = rng.split("explore");
    let mut meta_rng = rng.split("meta");
    let mut dataset = TransitionDataset::new(spec.env_id.clone(), spec.obs_dim, spec.act_dim, false);
    let mut task_returns = task.as_ref().map(|_| Vec::with_capacity(config.budget_episodes));
    let mut global_step = 0usize;

    for ep in 0..config.budget_episodes {
        let mut state = env.reset(&mut rng.split_indexed("reset", ep as u64));
        let mut obs_buf = state.observation().to_vec();
        let mut act_buf = Vec::with_capacity(spec.episode_length * spec.act_dim);
        let mut ret = 0.0;
        let mut meta: Vec<f64> = Vec::new();

        for t in 0..spec.episode_length {
            if let Some(model) = learning.as_ref().and_then(|l| l.model.as_ref()) {
                if model.meta_dim() > 0 && meta_resample_due(t, model.meta_period()) {
                    meta = model.sample_meta(&mut meta_rng);
                }
            }
            let obs = state.observation().to_vec();
            let action = match learning.as_ref() {
                Some(l) if global_step >= config.seed_frames => {
                    let mut input = obs.clone();
                    input.extend_from_slice(&meta);
                    let mut a = l.agent.act(&input)?;
                    for (i, v) in a.iter_mut().enumerate() {
                        let noise = (config.exploration_stddev * explore.normal()).clamp(-config.stddev_clip, config.stddev_clip);
                        *v = (*v + noise).clamp(spec.action_low[i], spec.action_high[i]);
                    }
                    a
                }
                _ => (0..spec.act_dim)
                    .map(|i| explore.uniform(spec.action_low[i], spec.action_high[i]))
                    .collect(),
            };
            let next = env.step(&state, &action)?;
            let ext = match &task {
                Some(r) => r.eval(&obs, &action, next.observation()),
                None => 0.0,
            };
            ret += ext;
            obs_buf.extend_from_slice(next.observation());
            act_buf.extend_from_slice(&action);

            if let Some(l) = learning.as_mut() {
                l.replay.push(&obs, &action, next.observation(), &meta, ext);
                if global_step >= config.seed_frames && global_step.is_multiple_of(config.update_every) {
                    update(l, mode, config)?;
                }
            }
            state = next;
            global_step += 1;
        }
        dataset.push_episode(Episode::new(spec.obs_dim, spec.act_dim, obs_buf, act_buf, None)?)?;
        if let Some(r) = task_returns.as_mut() {
            r.push(ret);
        }
    }
    Ok(Collected {
        dataset,
        task_returns,
        updates: learning.map_or(0, |l| l.agent.updates),
    })
}

/// Reward-supervised collection (`supervised` or `semi_supervised`).
pub fn collect_supervised(env: &dyn Environment, config: &CollectConfig, rng: &Rng) -> Result<Collected> {
    if !matches!(config.algo_id.as_str(), "supervised" | "semi_supervised") {
        return Err(Error::Config(format!(
            "{} is not a supervised collector",
            config.algo_id
        )));
    }
    collect(env, config, rng)
}

fn update(l: &mut Learning, mode: RewardMode, config: &CollectConfig) -> Result<()> {
    if l.replay.is_empty() {
        return Ok(());
    }
    let s = l.replay.sample(config.batch, &mut l.replay_rng);
    let ib = IntrinsicBatch {
        obs: s.obs,
        actions: s.actions,
        next_obs: s.next_obs,
        meta: s.meta,
    };
    let rewards = match mode {
        RewardMode::Extrinsic => s.extrinsic,
        RewardMode::Intrinsic | RewardMode::Mixed => {
            let model = l.model.as_mut().ok_or_else(|| Error::Config("missing intrinsic model".into()))?;
            model.update(&ib, &mut l.model_rng)?;
            let intr = model.reward(&ib)?;
            if mode == RewardMode::Mixed {
                s.extrinsic
                    .iter()
                    .zip(&intr)
                    .map(|(e, i)| e + config.intrinsic_weight * i)
                    .collect()
            } else {
                intr
            }
        }
        RewardMode::Random => return Ok(()),
    };
    if let Some(bad) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(Error::NonFinite {
            context: "collection reward",
            detail: format!("{bad} at update {}", l.agent.updates),
        });
    }
    let (obs, next_obs) = match &ib.meta {
        Some(m) => (ib.obs.hcat(m)?, ib.next_obs.hcat(m)?),
        None => (ib.obs, ib.next_obs),
    };
    let batch = Batch {
        obs,
        actions: ib.actions,
        rewards: Some(rewards),
        next_obs,
    };
    l.td3.train_step(&mut l.agent, &batch, &mut l.step_rngs)?;
    Ok(())
}


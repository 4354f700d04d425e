use crate::datastore::Batch;
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::offline::actor_critic::{bc_gradient, bc_loss, smoothing_noise, CqlTerm};
use crate::offline::{CrrTransform, OfflineAgent, OfflineConfig};
use crate::rng::Rng;

/// Random streams consumed by a training step. Target smoothing noise and
/// learner-specific sampling draw from separate streams so learners that
/// differ only in extra sampling stay comparable at a fixed seed.
#[derive(Debug, Clone)]
pub struct StepRngs {
    pub target_noise: Rng,
    pub aux: Rng,
}

impl StepRngs {
    pub fn from_root(rng: &Rng) -> Self {
        Self {
            target_noise: rng.split("target_noise"),
            aux: rng.split("learner_aux"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepLosses {
    pub critic: Option<f64>,
    pub actor: Option<f64>,
}

pub trait OfflineLearner: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    fn train_step(&self, agent: &mut OfflineAgent, batch: &Batch, rngs: &mut StepRngs) -> Result<StepLosses>;
}

type LearnerCtor = fn(&OfflineConfig) -> Box<dyn OfflineLearner>;

const LEARNERS: &[(&str, LearnerCtor)] = &[
    ("bc", |_| Box::new(Bc)),
    ("td3", |_| Box::new(Td3)),
    ("td3bc", |c| Box::new(Td3Bc { alpha: c.td3bc_alpha })),
    (
        "crr",
        |c| {
            Box::new(Crr {
                value_samples: c.crr_value_samples,
                transform: c.crr_transform,
            })
        },
    ),
    (
        "cql",
        |c| {
            Box::new(Cql {
                alpha: c.cql_alpha,
                n_actions: c.cql_n_actions,
            })
        },
    ),
];

pub fn learner_ids() -> Vec<&'static str> {
    LEARNERS.iter().map(|(id, _)| *id).collect()
}

pub fn make_learner(config: &OfflineConfig) -> Result<Box<dyn OfflineLearner>> {
    LEARNERS
        .iter()
        .find(|(id, _)| *id == config.algo_id)
        .map(|(_, ctor)| ctor(config))
        .ok_or_else(|| Error::Unknown {
            kind: "offline algorithm",
            id: config.algo_id.clone(),
        })
}

fn check_finite(context: &'static str, v: f64, step: u64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            context,
            detail: format!("value {v} at update {step}"),
        })
    }
}

/// Critic regression onto smoothed TD3 targets, optionally with a
/// conservative penalty.
fn critic_step(agent: &mut OfflineAgent, batch: &Batch, rngs: &mut StepRngs, cql: Option<&CqlTerm>) -> Result<f64> {
    let targets = agent.td3_targets(batch, &mut rngs.target_noise)?;
    let lr = agent.config.lr;
    let loss = agent
        .ac
        .update_critics(&batch.obs, &batch.actions, &targets, lr, cql)?;
    check_finite("critic loss", loss, agent.updates)
}

/// TD3 actor step: ascend Q1(s, π(s)).
fn td3_actor_step(agent: &mut OfflineAgent, batch: &Batch) -> Result<f64> {
    let (_, cache, q, dq_da) = agent.ac.policy_q_gradient(&batch.obs)?;
    let n = batch.len() as f64;
    let mut g = dq_da;
    g.map_inplace(|v| -v / n);
    agent.ac.apply_actor_gradient(&cache, &g, agent.config.lr)?;
    check_finite("actor loss", -q.iter().sum::<f64>() / n, agent.updates)
}

/// Weighted behaviour-cloning actor step.
fn bc_actor_step(agent: &mut OfflineAgent, batch: &Batch, weights: Option<&[f64]>) -> Result<f64> {
    let (pi, cache) = agent.ac.actor.forward(&batch.obs)?;
    let g = bc_gradient(&pi, &batch.actions, weights);
    let loss = bc_loss(&pi, &batch.actions, weights);
    agent.ac.apply_actor_gradient(&cache, &g, agent.config.lr)?;
    check_finite("actor loss", loss, agent.updates)
}

/// Mean squared error to dataset actions.
#[derive(Debug, Clone, Copy)]
pub struct Bc;

impl OfflineLearner for Bc {
    fn name(&self) -> &'static str {
        "bc"
    }

    fn train_step(&self, agent: &mut OfflineAgent, batch: &Batch, _rngs: &mut StepRngs) -> Result<StepLosses> {
        let actor_turn = agent.begin_update();
        let actor = if actor_turn {
            Some(bc_actor_step(agent, batch, None)?)
        } else {
            None
        };
        Ok(StepLosses { critic: None, actor })
    }
}

/// Twin critics, delayed deterministic actor, target smoothing.
#[derive(Debug, Clone, Copy)]
pub struct Td3;

impl OfflineLearner for Td3 {
    fn name(&self) -> &'static str {
        "td3"
    }

    fn train_step(&self, agent: &mut OfflineAgent, batch: &Batch, rngs: &mut StepRngs) -> Result<StepLosses> {
        let actor_turn = agent.begin_update();
        let critic = critic_step(agent, batch, rngs, None)?;
        let actor = if actor_turn {
            let l = td3_actor_step(agent, batch)?;
            agent.ac.update_targets()?;
            Some(l)
        } else {
            None
        };
        Ok(StepLosses {
            critic: Some(critic),
            actor,
        })
    }
}

/// TD3 with a behaviour-cloning term; the Q term is scaled by
/// `α / mean|Q1(s, π(s))|`.
#[derive(Debug, Clone, Copy)]
pub struct Td3Bc {
    pub alpha: f64,
}

impl Td3Bc {
    pub fn lambda(&self, q: &[f64]) -> f64 {
        let mean_abs = q.iter().map(|v| v.abs()).sum::<f64>() / q.len().max(1) as f64;
        self.alpha / mean_abs.max(1e-6)
    }
}

impl OfflineLearner for Td3Bc {
    fn name(&self) -> &'static str {
        "td3bc"
    }

    fn train_step(&self, agent: &mut OfflineAgent, batch: &Batch, rngs: &mut StepRngs) -> Result<StepLosses> {
        let actor_turn = agent.begin_update();
        let critic = critic_step(agent, batch, rngs, None)?;
        let actor = if actor_turn {
            let (pi, cache, q, dq_da) = agent.ac.policy_q_gradient(&batch.obs)?;
            let n = batch.len() as f64;
            let lambda = self.lambda(&q);
            let mut g = bc_gradient(&pi, &batch.actions, None);
            for (gv, dq) in g.as_mut_slice().iter_mut().zip(dq_da.as_slice()) {
                *gv += -lambda / n * dq;
            }
            let loss = -lambda * q.iter().sum::<f64>() / n + bc_loss(&pi, &batch.actions, None);
            agent.ac.apply_actor_gradient(&cache, &g, agent.config.lr)?;
            agent.ac.update_targets()?;
            Some(check_finite("actor loss", loss, agent.updates)?)
        } else {
            None
        };
        Ok(StepLosses {
            critic: Some(critic),
            actor,
        })
    }
}

/// Critic-regularised regression: behaviour cloning filtered by the sign of
/// a sampled advantage estimate.
#[derive(Debug, Clone, Copy)]
pub struct Crr {
    pub value_samples: usize,
    pub transform: CrrTransform,
}

impl Crr {
    /// `Q1(s, a) − mean_j Q1(s, clip(π(s) + ε_j))` per batch row.
    pub fn advantages(&self, agent: &OfflineAgent, obs: &Matrix, actions: &Matrix, rng: &mut Rng) -> Result<Vec<f64>> {
        let cfg = &agent.config;
        let k = self.value_samples;
        let pi = agent.ac.act(obs)?;
        let mut sampled = pi.repeat_rows(k);
        let noise = smoothing_noise(sampled.rows(), sampled.cols(), cfg.target_noise, cfg.stddev_clip, rng);
        for (a, e) in sampled.as_mut_slice().iter_mut().zip(noise.as_slice()) {
            *a = (*a + e).clamp(-1.0, 1.0);
        }
        let q_data = crate::offline::ActorCritic::q(&agent.ac.critic1, obs, actions)?;
        let q_pi = crate::offline::ActorCritic::q(&agent.ac.critic1, &obs.repeat_rows(k), &sampled)?;
        Ok(q_data
            .iter()
            .enumerate()
            .map(|(b, qd)| qd - q_pi[b * k..(b + 1) * k].iter().sum::<f64>() / k as f64)
            .collect())
    }

    pub fn weights(&self, advantages: &[f64]) -> Vec<f64> {
        advantages
            .iter()
            .map(|&a| match self.transform {
                CrrTransform::Indicator => {
                    if a > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                CrrTransform::Uniform => 1.0,
            })
            .collect()
    }
}

impl OfflineLearner for Crr {
    fn name(&self) -> &'static str {
        "crr"
    }

    fn train_step(&self, agent: &mut OfflineAgent, batch: &Batch, rngs: &mut StepRngs) -> Result<StepLosses> {
        let actor_turn = agent.begin_update();
        let critic = critic_step(agent, batch, rngs, None)?;
        let actor = if actor_turn {
            let adv = self.advantages(agent, &batch.obs, &batch.actions, &mut rngs.aux)?;
            let w = self.weights(&adv);
            let l = bc_actor_step(agent, batch, Some(&w))?;
            agent.ac.update_targets()?;
            Some(l)
        } else {
            None
        };
        Ok(StepLosses {
            critic: Some(critic),
            actor,
        })
    }
}

/// TD3 whose critics also minimise `α · (log-mean-exp Q over uniform
/// actions − Q at the data action)`.
#[derive(Debug, Clone, Copy)]
pub struct Cql {
    pub alpha: f64,
    pub n_actions: usize,
}

impl OfflineLearner for Cql {
    fn name(&self) -> &'static str {
        "cql"
    }

    fn train_step(&self, agent: &mut OfflineAgent, batch: &Batch, rngs: &mut StepRngs) -> Result<StepLosses> {
        let actor_turn = agent.begin_update();
        let act_dim = agent.ac.act_dim();
        let mut sampled = Matrix::zeros(batch.len() * self.n_actions, act_dim);
        for v in sampled.as_mut_slice() {
            *v = rngs.aux.uniform(-1.0, 1.0);
        }
        let term = CqlTerm {
            alpha: self.alpha,
            sampled_actions: sampled,
            n_samples: self.n_actions,
        };
        let critic = critic_step(agent, batch, rngs, Some(&term))?;
        let actor = if actor_turn {
            let l = td3_actor_step(agent, batch)?;
            agent.ac.update_targets()?;
            Some(l)
        } else {
            None
        };
        Ok(StepLosses {
            critic: Some(critic),
            actor,
        })
    }
}

use crate::envs::{Environment, RewardFn};
use crate::error::{Error, Result};
use crate::nn::{Matrix, Mlp};
use crate::offline::OfflineAgent;
use crate::rng::Rng;

/// Anything that maps an observation to an action.
pub trait Policy {
    fn obs_dim(&self) -> usize;

    fn act_dim(&self) -> usize;

    fn act(&self, obs: &[f64]) -> Result<Vec<f64>>;
}

impl Policy for Mlp {
    fn obs_dim(&self) -> usize {
        self.input_dim()
    }

    fn act_dim(&self) -> usize {
        self.output_dim()
    }

    fn act(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let m = Matrix::from_vec(1, obs.len(), obs.to_vec())?;
        Ok(self.predict(&m)?.into_vec())
    }
}

impl Policy for OfflineAgent {
    fn obs_dim(&self) -> usize {
        self.ac.obs_dim()
    }

    fn act_dim(&self) -> usize {
        self.ac.act_dim()
    }

    fn act(&self, obs: &[f64]) -> Result<Vec<f64>> {
        OfflineAgent::act(self, obs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub mean_return: f64,
    /// Sample standard deviation over √n; 0 for a single episode.
    pub stderr: f64,
    pub returns: Vec<f64>,
}

pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Noise-free rollouts of `policy`, scored by `reward_fn`. Episode `i`
/// resets from its own substream of `rng`.
pub fn evaluate(
    policy: &dyn Policy,
    env: &dyn Environment,
    reward_fn: &dyn RewardFn,
    n_episodes: usize,
    rng: &Rng,
) -> Result<EvalResult> {
    let spec = env.spec();
    if policy.obs_dim() != spec.obs_dim || policy.act_dim() != spec.act_dim {
        return Err(Error::shape(
            "evaluate policy dims",
            format!("obs {} act {}", spec.obs_dim, spec.act_dim),
            format!("obs {} act {}", policy.obs_dim(), policy.act_dim()),
        ));
    }
    if reward_fn.env_id() != spec.env_id {
        return Err(Error::EnvMismatch {
            reward: reward_fn.reward_id().to_string(),
            reward_env: reward_fn.env_id().to_string(),
            env: spec.env_id.clone(),
        });
    }
    let mut returns = Vec::with_capacity(n_episodes);
    for i in 0..n_episodes {
        let mut state = env.reset(&mut rng.split_indexed("eval_episode", i as u64));
        let mut ret = 0.0;
        for _ in 0..spec.episode_length {
            let mut action = policy.act(state.observation())?;
            spec.clip_action(&mut action);
            let next = env.step(&state, &action)?;
            ret += reward_fn.eval(state.observation(), &action, next.observation());
            state = next;
        }
        returns.push(ret);
    }
    let (mean_return, stderr) = mean_and_stderr(&returns);
    Ok(EvalResult {
        mean_return,
        stderr,
        returns,
    })
}

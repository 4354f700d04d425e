use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::Rng;

/// Values are held as `f64` but always representable in `f32`, matching
/// what the file format stores.
pub(crate) fn quantize(v: f64) -> f64 {
    v as f32 as f64
}

/// One trajectory: `L + 1` observations, `L` actions, optional `L` rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    obs_dim: usize,
    act_dim: usize,
    observations: Vec<f64>,
    actions: Vec<f64>,
    rewards: Option<Vec<f64>>,
}

impl Episode {
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        mut observations: Vec<f64>,
        mut actions: Vec<f64>,
        mut rewards: Option<Vec<f64>>,
    ) -> Result<Self> {
        if obs_dim == 0 || act_dim == 0 {
            return Err(Error::Config("episode dims must be positive".into()));
        }
        if !observations.len().is_multiple_of(obs_dim) || observations.len() < obs_dim {
            return Err(Error::shape(
                "Episode observations",
                format!("(L+1) x {obs_dim}"),
                observations.len(),
            ));
        }
        let len = observations.len() / obs_dim - 1;
        if actions.len() != len * act_dim {
            return Err(Error::shape("Episode actions", len * act_dim, actions.len()));
        }
        if let Some(r) = &rewards {
            if r.len() != len {
                return Err(Error::shape("Episode rewards", len, r.len()));
            }
        }
        let all = observations
            .iter()
            .chain(&actions)
            .chain(rewards.iter().flatten());
        if let Some(v) = all.clone().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "episode",
                detail: v.to_string(),
            });
        }
        observations.iter_mut().for_each(|v| *v = quantize(*v));
        actions.iter_mut().for_each(|v| *v = quantize(*v));
        if let Some(r) = rewards.as_mut() {
            r.iter_mut().for_each(|v| *v = quantize(*v));
        }
        Ok(Self {
            obs_dim,
            act_dim,
            observations,
            actions,
            rewards,
        })
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.actions.len() / self.act_dim
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn observation(&self, t: usize) -> &[f64] {
        &self.observations[t * self.obs_dim..(t + 1) * self.obs_dim]
    }

    pub fn next_observation(&self, t: usize) -> &[f64] {
        self.observation(t + 1)
    }

    pub fn action(&self, t: usize) -> &[f64] {
        &self.actions[t * self.act_dim..(t + 1) * self.act_dim]
    }

    pub fn reward(&self, t: usize) -> Option<f64> {
        self.rewards.as_ref().map(|r| r[t])
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn rewards(&self) -> Option<&[f64]> {
        self.rewards.as_deref()
    }

    pub fn is_labeled(&self) -> bool {
        self.rewards.is_some()
    }

    pub(crate) fn with_rewards(&self, rewards: Option<Vec<f64>>) -> Result<Self> {
        Episode::new(
            self.obs_dim,
            self.act_dim,
            self.observations.clone(),
            self.actions.clone(),
            rewards,
        )
    }
}

/// A set of episodes from one environment, labeled or reward-free.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDataset {
    env_id: String,
    obs_dim: usize,
    act_dim: usize,
    labeled: bool,
    episodes: Vec<Episode>,
}

/// Uniformly sampled transitions, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: Matrix,
    pub actions: Matrix,
    pub rewards: Option<Vec<f64>>,
    pub next_obs: Matrix,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.obs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.rows() == 0
    }

    pub fn rewards(&self) -> Result<&[f64]> {
        self.rewards.as_deref().ok_or(Error::Unlabeled)
    }
}

impl TransitionDataset {
    pub fn new(env_id: impl Into<String>, obs_dim: usize, act_dim: usize, labeled: bool) -> Self {
        Self {
            env_id: env_id.into(),
            obs_dim,
            act_dim,
            labeled,
            episodes: Vec::new(),
        }
    }

    pub fn push_episode(&mut self, episode: Episode) -> Result<()> {
        if episode.obs_dim != self.obs_dim || episode.act_dim != self.act_dim {
            return Err(Error::shape(
                "TransitionDataset::push_episode",
                format!("obs {} act {}", self.obs_dim, self.act_dim),
                format!("obs {} act {}", episode.obs_dim, episode.act_dim),
            ));
        }
        if episode.is_labeled() != self.labeled {
            return Err(Error::Config(format!(
                "episode labeled={} but dataset labeled={}",
                episode.is_labeled(),
                self.labeled
            )));
        }
        self.episodes.push(episode);
        Ok(())
    }

    pub fn env_id(&self) -> &str {
        &self.env_id
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn is_labeled(&self) -> bool {
        self.labeled
    }

    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }

    pub fn n_episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn n_transitions(&self) -> usize {
        self.episodes.iter().map(Episode::len).sum()
    }

    /// Same header, different episode list.
    pub(crate) fn with_episodes(&self, episodes: Vec<Episode>, labeled: bool) -> Self {
        Self {
            env_id: self.env_id.clone(),
            obs_dim: self.obs_dim,
            act_dim: self.act_dim,
            labeled,
            episodes,
        }
    }

    /// Mean per-transition reward of a labeled dataset.
    pub fn mean_reward(&self) -> Result<f64> {
        if !self.labeled {
            return Err(Error::Unlabeled);
        }
        let n = self.n_transitions();
        if n == 0 {
            return Ok(0.0);
        }
        let total: f64 = self.episodes.iter().flat_map(|e| e.rewards().unwrap()).sum();
        Ok(total / n as f64)
    }

    /// `n` transitions drawn uniformly (with replacement) over all transitions.
    pub fn sample_batch(&self, n: usize, rng: &mut Rng) -> Result<Batch> {
        if n == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        let total = self.n_transitions();
        if total == 0 {
            return Err(Error::InsufficientEpisodes {
                needed: 1,
                available: 0,
            });
        }
        // ends[e] = transitions in episodes 0..=e
        let ends: Vec<usize> = self
            .episodes
            .iter()
            .scan(0, |acc, e| {
                *acc += e.len();
                Some(*acc)
            })
            .collect();
        let mut obs = Matrix::zeros(n, self.obs_dim);
        let mut next_obs = Matrix::zeros(n, self.obs_dim);
        let mut actions = Matrix::zeros(n, self.act_dim);
        let mut rewards = self.labeled.then(|| Vec::with_capacity(n));
        for row in 0..n {
            let flat = rng.below(total);
            let e = ends.partition_point(|&end| end <= flat);
            let t = flat - if e == 0 { 0 } else { ends[e - 1] };
            let ep = &self.episodes[e];
            obs.row_mut(row).copy_from_slice(ep.observation(t));
            next_obs.row_mut(row).copy_from_slice(ep.next_observation(t));
            actions.row_mut(row).copy_from_slice(ep.action(t));
            if let Some(r) = rewards.as_mut() {
                r.push(ep.reward(t).unwrap());
            }
        }
        Ok(Batch {
            obs,
            actions,
            rewards,
            next_obs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_step(labeled: bool) -> TransitionDataset {
        let mut d = TransitionDataset::new("pointmass_maze", 2, 1, labeled);
        d.push_episode(
            Episode::new(2, 1, vec![0.0, 1.0, 2.0, 3.0], vec![0.5], labeled.then(|| vec![1.0])).unwrap(),
        )
        .unwrap();
        d
    }

    #[test]
    fn single_transition_batch() {
        let d = one_step(true);
        let b = d.sample_batch(1, &mut Rng::new(0)).unwrap();
        assert_eq!(b.obs.as_slice(), &[0.0, 1.0]);
        assert_eq!(b.next_obs.as_slice(), &[2.0, 3.0]);
        assert_eq!(b.actions.as_slice(), &[0.5]);
        assert_eq!(b.rewards().unwrap(), &[1.0]);
    }

    #[test]
    fn unlabeled_batch_has_no_rewards() {
        let b = one_step(false).sample_batch(3, &mut Rng::new(0)).unwrap();
        assert!(matches!(b.rewards(), Err(Error::Unlabeled)));
    }

    #[test]
    fn episode_validation() {
        assert!(Episode::new(2, 1, vec![0.0; 5], vec![], None).is_err());
        assert!(Episode::new(2, 1, vec![0.0; 4], vec![0.0, 0.0], None).is_err());
        assert!(Episode::new(2, 1, vec![0.0; 4], vec![0.0], Some(vec![])).is_err());
        assert!(Episode::new(2, 1, vec![0.0, f64::NAN, 0.0, 0.0], vec![0.0], None).is_err());
        let mut d = TransitionDataset::new("x", 2, 1, false);
        let labeled = Episode::new(2, 1, vec![0.0; 4], vec![0.0], Some(vec![0.0])).unwrap();
        assert!(d.push_episode(labeled).is_err());
    }

    #[test]
    fn zero_batch_rejected() {
        assert!(one_step(true).sample_batch(0, &mut Rng::new(0)).is_err());
    }
}

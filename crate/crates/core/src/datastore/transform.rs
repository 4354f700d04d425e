use crate::datastore::{Episode, TransitionDataset};
use crate::envs::RewardFn;
use crate::error::{Error, Result};
use crate::rng::Rng;

// Fractions arrive as decimals; keep ⌈0.07·100⌉ = 7 rather than 8.
const FRACTION_SLACK: f64 = 1e-9;

/// Recomputes every reward with `reward_fn`; observations and actions are
/// copied unchanged. Any existing reward channel is replaced.
pub fn relabel(dataset: &TransitionDataset, reward_fn: &dyn RewardFn) -> Result<TransitionDataset> {
    if reward_fn.env_id() != dataset.env_id() {
        return Err(Error::EnvMismatch {
            reward: reward_fn.reward_id().to_string(),
            reward_env: reward_fn.env_id().to_string(),
            env: dataset.env_id().to_string(),
        });
    }
    let episodes = dataset
        .episodes()
        .iter()
        .map(|ep| {
            let rewards = (0..ep.len())
                .map(|t| reward_fn.eval(ep.observation(t), ep.action(t), ep.next_observation(t)))
                .collect();
            ep.with_rewards(Some(rewards))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dataset.with_episodes(episodes, true))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeOrigin {
    Supervised(usize),
    Unsupervised(usize),
}

impl EpisodeOrigin {
    pub fn tag(&self) -> String {
        match self {
            EpisodeOrigin::Supervised(i) => format!("sup:{i}"),
            EpisodeOrigin::Unsupervised(i) => format!("unsup:{i}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mixed {
    pub dataset: TransitionDataset,
    pub provenance: Vec<EpisodeOrigin>,
}

/// Trajectory-level mixture of fixed size: `⌊fraction·total⌋` episodes drawn
/// without replacement from `unsupervised`, the rest from `supervised`, in
/// shuffled order. The output carries no rewards.
pub fn mix(
    supervised: &TransitionDataset,
    unsupervised: &TransitionDataset,
    unsup_fraction: f64,
    total_episodes: usize,
    rng: &mut Rng,
) -> Result<Mixed> {
    if !(0.0..=1.0).contains(&unsup_fraction) {
        return Err(Error::Config(format!("mix fraction {unsup_fraction} outside [0, 1]")));
    }
    if supervised.env_id() != unsupervised.env_id()
        || supervised.obs_dim() != unsupervised.obs_dim()
        || supervised.act_dim() != unsupervised.act_dim()
    {
        return Err(Error::Config(format!(
            "cannot mix {} ({}x{}) with {} ({}x{})",
            supervised.env_id(),
            supervised.obs_dim(),
            supervised.act_dim(),
            unsupervised.env_id(),
            unsupervised.obs_dim(),
            unsupervised.act_dim()
        )));
    }
    let n_unsup = ((unsup_fraction * total_episodes as f64) + FRACTION_SLACK).floor() as usize;
    let n_sup = total_episodes - n_unsup;
    for (needed, available) in [(n_unsup, unsupervised.n_episodes()), (n_sup, supervised.n_episodes())] {
        if needed > available {
            return Err(Error::InsufficientEpisodes { needed, available });
        }
    }
    let mut picks: Vec<EpisodeOrigin> = rng
        .choose_distinct(unsupervised.n_episodes(), n_unsup)
        .into_iter()
        .map(EpisodeOrigin::Unsupervised)
        .chain(
            rng.choose_distinct(supervised.n_episodes(), n_sup)
                .into_iter()
                .map(EpisodeOrigin::Supervised),
        )
        .collect();
    rng.shuffle(&mut picks);
    let episodes = picks
        .iter()
        .map(|origin| match *origin {
            EpisodeOrigin::Supervised(i) => supervised.episodes()[i].with_rewards(None),
            EpisodeOrigin::Unsupervised(i) => unsupervised.episodes()[i].with_rewards(None),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mixed {
        dataset: supervised.with_episodes(episodes, false),
        provenance: picks,
    })
}

/// Keeps episodes with index ≥ ⌈start_fraction·n⌉, in collection order.
pub fn suffix_slice(dataset: &TransitionDataset, start_fraction: f64) -> Result<TransitionDataset> {
    if !(0.0..1.0).contains(&start_fraction) {
        return Err(Error::Config(format!("suffix start {start_fraction} outside [0, 1)")));
    }
    let n = dataset.n_episodes();
    let start = ((start_fraction * n as f64) - FRACTION_SLACK).ceil().max(0.0) as usize;
    let episodes: Vec<Episode> = dataset.episodes()[start.min(n)..].to_vec();
    Ok(dataset.with_episodes(episodes, dataset.is_labeled()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::make_reward;

    fn tagged(n: usize, tag: f64) -> TransitionDataset {
        let mut d = TransitionDataset::new("pointmass_maze", 4, 2, false);
        for i in 0..n {
            let obs = vec![tag, i as f64, 0.0, 0.0, tag, i as f64, 0.0, 0.0];
            d.push_episode(Episode::new(4, 2, obs, vec![0.0, 0.0], None).unwrap()).unwrap();
        }
        d
    }

    #[test]
    fn relabel_marks_goal_hit() {
        let mut d = TransitionDataset::new("pointmass_maze", 4, 2, false);
        let obs = vec![0.7, 0.7, 0.0, 0.0, 0.75, 0.75, 0.0, 0.0];
        d.push_episode(Episode::new(4, 2, obs, vec![1.0, 1.0], None).unwrap()).unwrap();
        let r = relabel(&d, make_reward("reach_top_right").unwrap().as_ref()).unwrap();
        assert_eq!(r.episodes()[0].rewards().unwrap(), &[1.0]);
        assert!(!d.is_labeled());
    }

    #[test]
    fn relabel_env_mismatch() {
        let d = tagged(1, 0.0);
        assert!(relabel(&d, make_reward("swingup").unwrap().as_ref()).is_err());
    }

    #[test]
    fn mix_extremes() {
        let sup = tagged(10, 1.0);
        let unsup = tagged(10, -1.0);
        let all_sup = mix(&sup, &unsup, 0.0, 10, &mut Rng::new(0)).unwrap();
        assert!(all_sup.dataset.episodes().iter().all(|e| e.observation(0)[0] == 1.0));
        let all_unsup = mix(&sup, &unsup, 1.0, 10, &mut Rng::new(0)).unwrap();
        assert!(all_unsup.dataset.episodes().iter().all(|e| e.observation(0)[0] == -1.0));
    }

    #[test]
    fn mix_counts() {
        let sup = tagged(1000, 1.0);
        let unsup = tagged(1000, -1.0);
        let m = mix(&sup, &unsup, 0.25, 1000, &mut Rng::new(4)).unwrap();
        let n_unsup = m
            .provenance
            .iter()
            .filter(|o| matches!(o, EpisodeOrigin::Unsupervised(_)))
            .count();
        assert_eq!((n_unsup, m.dataset.n_episodes()), (250, 1000));
        assert!(mix(&sup, &unsup, 0.25, 2000, &mut Rng::new(4)).is_err());
        assert!(mix(&sup, &unsup, 1.5, 10, &mut Rng::new(4)).is_err());
    }

    #[test]
    fn suffix_basics() {
        let d = tagged(1000, 0.0);
        assert_eq!(suffix_slice(&d, 0.0).unwrap(), d);
        let half = suffix_slice(&d, 0.5).unwrap();
        assert_eq!(half.n_episodes(), 500);
        assert_eq!(half.episodes()[0].observation(0)[1], 500.0);
        assert!(suffix_slice(&d, 1.0).is_err());
        assert!(suffix_slice(&d, -0.1).is_err());
    }

    #[test]
    fn suffix_of_suffix() {
        let d = tagged(100, 0.0);
        let once = suffix_slice(&d, 0.9).unwrap();
        let ids: Vec<f64> = once.episodes().iter().map(|e| e.observation(0)[1]).collect();
        assert_eq!(ids, (90..100).map(|i| i as f64).collect::<Vec<_>>());
        let twice = suffix_slice(&once, 0.9).unwrap();
        assert_eq!(twice.n_episodes(), 1);
        assert_eq!(twice.episodes()[0].observation(0)[1], 99.0);
    }
}

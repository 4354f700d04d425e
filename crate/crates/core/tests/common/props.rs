#![allow(dead_code)]

use std::collections::HashSet;

use exorl::datastore::{decode, encode, mix, relabel, suffix_slice, Episode, EpisodeOrigin, TransitionDataset};
use exorl::envs::{make_reward, POINTMASS_MAZE};
use exorl::nn::{Matrix, Mlp, OutputHead};
use exorl::offline::{make_learner, OfflineAgent, OfflineConfig, StepRngs};
use exorl::{Error, Rng};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use super::random_dataset;

/// Episodes whose first observation entry is a unique id, so provenance and
/// order can be read back from contents alone.
pub fn tagged(n: usize, len: usize, base: f64, labeled: bool, rng: &mut Rng) -> TransitionDataset {
    let mut ds = TransitionDataset::new(POINTMASS_MAZE, 4, 2, labeled);
    for i in 0..n {
        let mut obs: Vec<f64> = (0..(len + 1) * 4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        obs[0] = base + i as f64;
        let acts = (0..len * 2).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let rewards = labeled.then(|| (0..len).map(|_| rng.uniform(0.0, 1.0)).collect());
        ds.push_episode(Episode::new(4, 2, obs, acts, rewards).unwrap()).unwrap();
    }
    ds
}

pub fn id(ep: &Episode) -> f64 {
    ep.observation(0)[0]
}

pub fn dataset_strategy() -> impl Strategy<Value = TransitionDataset> {
    (any::<u64>(), 0usize..12, 1usize..6, any::<bool>())
        .prop_map(|(seed, n, len, labeled)| tagged(n, len, 0.0, labeled, &mut Rng::new(seed)))
}

/// Independent reading of the reach-goal definition.
pub fn brute_force_mean_reach(ds: &TransitionDataset, gx: f64, gy: f64) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for ep in ds.episodes() {
        for t in 0..ep.len() {
            let s = ep.next_observation(t);
            let d = ((s[0] - gx).powi(2) + (s[1] - gy).powi(2)).sqrt();
            total += if d < 0.1 { 1.0 } else { 0.0 };
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Gradient of `sum(u ⊙ f(x))` by central differences.
pub fn finite_difference(net: &Mlp, x: &Matrix, upstream: &Matrix, h: f64) -> Vec<f64> {
    let objective = |n: &Mlp| -> f64 {
        let y = n.predict(x).unwrap();
        y.as_slice().iter().zip(upstream.as_slice()).map(|(a, b)| a * b).sum()
    };
    let mut probe = net.clone();
    (0..net.n_params())
        .map(|i| {
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + h;
            let up = objective(&probe);
            probe.params_mut()[i] = orig - h;
            let down = objective(&probe);
            probe.params_mut()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn random_small_net(rng: &mut Rng) -> Mlp {
    let n_layers = 1 + rng.below(3);
    let mut sizes = vec![1 + rng.below(8)];
    for _ in 0..n_layers {
        sizes.push(1 + rng.below(8));
    }
    let head = if rng.below(2) == 0 { OutputHead::Identity } else { OutputHead::Tanh };
    let mut net = Mlp::new(&sizes, head, rng).unwrap();
    // Non-zero biases so every code path carries signal.
    for l in 0..net.n_layers() {
        for b in net.bias_mut(l) {
            *b = 0.1 * rng.normal();
        }
    }
    net
}

/// Sort every distance, take the k smallest non-zero ones.
pub fn brute_force_knn(points: &Matrix, k: usize) -> Vec<f64> {
    (0..points.rows())
        .map(|i| {
            let mut d: Vec<f64> = (0..points.rows())
                .filter(|&j| j != i)
                .map(|j| {
                    points
                        .row(i)
                        .iter()
                        .zip(points.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .filter(|&s| s > 0.0)
                .collect();
            d.sort_by(f64::total_cmp);
            let take = k.min(d.len());
            let mean = if take == 0 {
                0.0
            } else {
                d[..take].iter().map(|s| s.sqrt()).sum::<f64>() / take as f64
            };
            (1.0 + mean).ln()
        })
        .collect()
}

pub fn small_config(algo: &str) -> OfflineConfig {
    OfflineConfig {
        algo_id: algo.to_string(),
        batch: 32,
        hidden_dim: 32,
        training_steps: 100,
        ..OfflineConfig::default()
    }
}

pub fn labeled_maze(episodes: usize, seed: u64) -> TransitionDataset {
    let ds = random_dataset(POINTMASS_MAZE, episodes, 20, 4, 2, &mut Rng::new(seed));
    // Dense enough reward that critics see signal.
    let r = make_reward("reach_top_right").unwrap();
    let mut labeled = relabel(&ds, r.as_ref()).unwrap();
    let eps: Vec<Episode> = labeled
        .episodes()
        .iter()
        .map(|e| {
            let rewards: Vec<f64> = (0..e.len()).map(|t| 0.5 + 0.5 * e.next_observation(t)[0]).collect();
            Episode::new(4, 2, e.observations().to_vec(), e.actions().to_vec(), Some(rewards)).unwrap()
        })
        .collect();
    let mut out = TransitionDataset::new(POINTMASS_MAZE, 4, 2, true);
    for e in eps {
        out.push_episode(e).unwrap();
    }
    labeled = out;
    labeled
}

/// Replays `train`'s stream layout, snapshotting the agent after each step.
pub fn run_steps(ds: &TransitionDataset, cfg: &OfflineConfig, seed: u64, steps: usize) -> Vec<OfflineAgent> {
    let root = Rng::new(seed);
    let learner = make_learner(cfg).unwrap();
    let mut agent = OfflineAgent::new(ds.obs_dim(), ds.act_dim(), cfg.clone(), &mut root.split("init")).unwrap();
    let mut batch_rng = root.split("batch");
    let mut rngs = StepRngs::from_root(&root);
    let mut out = Vec::new();
    for _ in 0..steps {
        let b = ds.sample_batch(cfg.batch, &mut batch_rng).unwrap();
        learner.train_step(&mut agent, &b, &mut rngs).unwrap();
        out.push(agent.clone());
    }
    out
}


pub fn save_load_identity(ds: &TransitionDataset) -> Result<(), TestCaseError> {
    let bytes = encode(ds);
    let back = decode(&bytes, "mem.exd".as_ref()).unwrap();
    prop_assert_eq!(&back, ds);
    prop_assert_eq!(encode(&back), bytes);
    Ok(())
}

pub fn relabel_idempotent_and_brute_force(ds: &TransitionDataset) -> Result<(), TestCaseError> {
    let r = make_reward("reach_top_right").unwrap();
    let once = relabel(ds, r.as_ref()).unwrap();
    prop_assert_eq!(&relabel(&once, r.as_ref()).unwrap(), &once);
    prop_assert_eq!(once.n_transitions(), ds.n_transitions());
    for (a, b) in once.episodes().iter().zip(ds.episodes()) {
        prop_assert_eq!(a.observations(), b.observations());
        prop_assert_eq!(a.actions(), b.actions());
    }
    let mean = once.mean_reward().unwrap();
    prop_assert!((mean - brute_force_mean_reach(ds, 0.75, 0.75)).abs() < 1e-12);
    Ok(())
}

pub fn mix_audit(seed: u64, n_sup: usize, n_unsup: usize, k: usize, total: usize) -> Result<(), TestCaseError> {
    let mut rng = Rng::new(seed);
    let sup = tagged(n_sup, 2, 0.0, true, &mut rng);
    let unsup = tagged(n_unsup, 2, 1000.0, false, &mut rng);
    let fraction = k as f64 / 20.0;
    let want_unsup = k * total / 20;
    let want_sup = total - want_unsup;
    match mix(&sup, &unsup, fraction, total, &mut rng) {
        Ok(m) => {
            prop_assert!(want_unsup <= n_unsup && want_sup <= n_sup);
            prop_assert_eq!(m.dataset.n_episodes(), total);
            prop_assert!(!m.dataset.is_labeled());
            let from_unsup = m.dataset.episodes().iter().map(id).filter(|&i| i >= 1000.0).count();
            prop_assert_eq!(from_unsup, want_unsup);
            let distinct: HashSet<u64> = m.dataset.episodes().iter().map(|e| id(e).to_bits()).collect();
            prop_assert_eq!(distinct.len(), total);
            for (ep, origin) in m.dataset.episodes().iter().zip(&m.provenance) {
                let src = match origin {
                    EpisodeOrigin::Supervised(i) => &sup.episodes()[*i],
                    EpisodeOrigin::Unsupervised(i) => &unsup.episodes()[*i],
                };
                prop_assert_eq!(ep.observations(), src.observations());
                prop_assert_eq!(ep.actions(), src.actions());
            }
        }
        Err(Error::InsufficientEpisodes { .. }) => {
            prop_assert!(want_unsup > n_unsup || want_sup > n_sup);
        }
        Err(e) => prop_assert!(false, "unexpected error {}", e),
    }
    Ok(())
}

pub fn suffix_composition(n: usize, k1: usize, k2: usize) -> Result<(), TestCaseError> {
    let ds = tagged(n, 1, 0.0, false, &mut Rng::new(n as u64));
    let once = suffix_slice(&ds, k1 as f64 / 100.0).unwrap();
    let twice = suffix_slice(&once, k2 as f64 / 100.0).unwrap();
    let s1 = (k1 * n).div_ceil(100);
    let s2 = s1 + (k2 * (n - s1)).div_ceil(100);
    let ids: Vec<f64> = twice.episodes().iter().map(id).collect();
    prop_assert_eq!(ids, (s2..n).map(|i| i as f64).collect::<Vec<_>>());
    let once_ids: Vec<f64> = once.episodes().iter().map(id).collect();
    prop_assert_eq!(once_ids, (s1..n).map(|i| i as f64).collect::<Vec<_>>());
    Ok(())
}

/// Analytic parameter gradients against central differences on `count`
/// random small nets. Returns the first mismatch.
pub fn gradient_check(seed: u64, count: usize) -> Result<(), String> {
    let mut rng = Rng::new(seed);
    for _ in 0..count {
        let net = random_small_net(&mut rng);
        let x = super::random_matrix(3, net.input_dim(), &mut rng);
        let u = super::random_matrix(3, net.output_dim(), &mut rng);
        let (_, cache) = net.forward(&x).map_err(|e| e.to_string())?;
        let (grads, _) = net.backward(&cache, &u).map_err(|e| e.to_string())?;
        let numeric = finite_difference(&net, &x, &u, 1e-6);
        for (a, n) in grads.iter().zip(&numeric) {
            let ok = (a - n).abs() <= 1e-4 * a.abs().max(n.abs()) || (a - n).abs() <= 1e-7;
            if !ok {
                return Err(format!("analytic {a} vs numeric {n} for sizes {:?}", net.sizes()));
            }
        }
    }
    Ok(())
}

/// Step-for-step comparison of two learners at one seed. With `actor_only`
/// only actor parameters must agree.
pub fn ladder_rung(a: &OfflineConfig, b: &OfflineConfig, actor_only: bool, steps: usize) -> Result<(), String> {
    let ds = labeled_maze(10, 8);
    let x = run_steps(&ds, a, 9, steps);
    let y = run_steps(&ds, b, 9, steps);
    for (step, (p, q)) in x.iter().zip(&y).enumerate() {
        let same = if actor_only { p.ac.actor.params() == q.ac.actor.params() } else { p.ac == q.ac };
        if !same {
            return Err(format!("{} vs {} diverge at step {}", a.algo_id, b.algo_id, step + 1));
        }
    }
    Ok(())
}

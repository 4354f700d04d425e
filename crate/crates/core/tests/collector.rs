mod common;

use common::props::brute_force_knn;
use common::random_matrix;
use exorl::collector::intrinsic::{Diayn, Icm, Rnd, RunningStats};
use exorl::collector::{
    collect, collect_supervised, ensemble_disagreement, intrinsic_ids, knn_particle_reward, make_intrinsic,
    meta_resample_due, CollectConfig, IntrinsicBatch, IntrinsicModel, ModelContext, COLLECTOR_IDS,
};
use exorl::datastore::relabel;
use exorl::envs::{make_env, reward_for, POINTMASS_MAZE};
use exorl::nn::{Matrix, Mlp, OutputHead};
use exorl::{Error, Preset, Rng};
use proptest::prelude::*;

fn small(algo: &str, episodes: usize) -> CollectConfig {
    CollectConfig {
        algo_id: algo.to_string(),
        budget_episodes: episodes,
        seed_frames: 60,
        batch: 32,
        hidden_dim: 16,
        ..CollectConfig::default()
    }
}

fn ctx(obs_dim: usize, act_dim: usize) -> ModelContext {
    ModelContext {
        obs_dim,
        act_dim,
        hidden_dim: 16,
        lr: 1e-3,
        knn_k: 12,
        aux_nets: false,
    }
}

fn batch(n: usize, obs_dim: usize, act_dim: usize, meta: Option<Matrix>, rng: &mut Rng) -> IntrinsicBatch {
    IntrinsicBatch {
        obs: random_matrix(n, obs_dim, rng),
        actions: random_matrix(n, act_dim, rng),
        next_obs: random_matrix(n, obs_dim, rng),
        meta,
    }
}

#[test]
fn table_one_defaults() {
    let c = CollectConfig::default();
    assert_eq!(c.seed_frames, 4000);
    assert_eq!((c.exploration_stddev, c.stddev_clip), (0.2, 0.3));
    assert_eq!((c.replay_capacity, c.batch, c.update_every), (1_000_000, 1024, 2));
    assert_eq!((c.discount, c.lr, c.tau), (0.99, 1e-4, 0.01));
    assert_eq!(c.hidden_dim, 1024);
    let desk = CollectConfig::for_preset("rnd", Preset::Desk);
    assert_eq!((desk.hidden_dim, desk.batch, desk.budget_episodes), (256, 256, 500));
}

#[test]
fn supervised_modes_need_a_task() {
    let env = make_env(POINTMASS_MAZE, 20).unwrap();
    for algo in ["supervised", "semi_supervised"] {
        assert!(matches!(collect(env.as_ref(), &small(algo, 1), &Rng::new(0)), Err(Error::Config(_))));
    }
    assert!(collect_supervised(env.as_ref(), &small("rnd", 1), &Rng::new(0)).is_err());
    assert!(collect(env.as_ref(), &small("dqn", 1), &Rng::new(0)).is_err());
}

#[test]
fn random_collection_counts_and_bounds() {
    let env = make_env(POINTMASS_MAZE, 200).unwrap();
    let out = collect(env.as_ref(), &small("random", 2), &Rng::new(3)).unwrap();
    assert_eq!(out.dataset.n_transitions(), 400);
    assert!(!out.dataset.is_labeled());
    assert_eq!(out.updates, 0);
    for ep in out.dataset.episodes() {
        assert!(ep.actions().iter().all(|a| (-1.0..=1.0).contains(a)));
    }
}

#[test]
fn every_collector_is_deterministic_and_legal() {
    let env = make_env(POINTMASS_MAZE, 40).unwrap();
    for &algo in COLLECTOR_IDS {
        let mut cfg = small(algo, 3);
        if algo.contains("supervised") {
            cfg.data_task = Some("reach_top_right".into());
        }
        let a = collect(env.as_ref(), &cfg, &Rng::new(8)).unwrap();
        let b = collect(env.as_ref(), &cfg, &Rng::new(8)).unwrap();
        assert_eq!(a.dataset, b.dataset, "{algo}");
        assert_eq!(a.dataset.n_transitions(), 3 * 40);
        assert!(!a.dataset.is_labeled());
        if algo != "random" {
            assert!(a.updates > 0, "{algo} never learned");
        }
        for ep in a.dataset.episodes() {
            assert!(ep.actions().iter().all(|v| (-1.0..=1.0).contains(v)), "{algo}");
        }
    }
}

#[test]
fn semi_supervised_with_zero_weight_is_supervised() {
    let env = make_env(POINTMASS_MAZE, 40).unwrap();
    let mut sup = small("supervised", 3);
    sup.data_task = Some("reach_top_right".into());
    let mut semi = sup.clone();
    semi.algo_id = "semi_supervised".into();
    semi.intrinsic_weight = 0.0;
    let a = collect(env.as_ref(), &sup, &Rng::new(4)).unwrap();
    let b = collect(env.as_ref(), &semi, &Rng::new(4)).unwrap();
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.task_returns, b.task_returns);
}

#[test]
fn apt_hand_example() {
    let pts = Matrix::from_vec(3, 1, vec![0.0, 1.0, 3.0]).unwrap();
    let r = knn_particle_reward(&pts, 1).unwrap();
    assert_eq!(r, vec![2f64.ln(), 2f64.ln(), 3f64.ln()]);
    assert!(matches!(knn_particle_reward(&pts, 3), Err(Error::BatchTooSmall { .. })));
}

#[test]
fn apt_matches_brute_force_exactly() {
    let mut rng = Rng::new(21);
    for _ in 0..300 {
        let k = 1 + rng.below(12);
        let n = k + 1 + rng.below(64 - k);
        let dim = 1 + rng.below(4);
        let mut pts = random_matrix(n, dim, &mut rng);
        // Duplicates exercise the non-zero filter.
        if n > 3 {
            let copy = pts.row(0).to_vec();
            pts.row_mut(1).copy_from_slice(&copy);
        }
        assert_eq!(knn_particle_reward(&pts, k).unwrap(), brute_force_knn(&pts, k));
    }
}

#[test]
fn disagreement_examples() {
    let preds: Vec<Matrix> = [0.0, 0.0, 0.0, 0.0, 5.0]
        .iter()
        .map(|&v| Matrix::from_vec(1, 1, vec![v]).unwrap())
        .collect();
    assert_eq!(ensemble_disagreement(&preds), vec![4.0]);
    let same = vec![Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(); 5];
    assert_eq!(ensemble_disagreement(&same), vec![0.0, 0.0]);
}

#[test]
fn disagreement_matches_direct_variance() {
    let mut rng = Rng::new(5);
    let preds: Vec<Matrix> = (0..5).map(|_| random_matrix(6, 3, &mut rng)).collect();
    let got = ensemble_disagreement(&preds);
    for (r, g) in got.iter().enumerate() {
        let mut acc = 0.0;
        for c in 0..3 {
            let xs: Vec<f64> = preds.iter().map(|p| p.get(r, c)).collect();
            let m = xs.iter().sum::<f64>() / 5.0;
            acc += xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 5.0;
        }
        assert!((g - acc / 3.0).abs() < 1e-12);
    }
}

#[test]
fn diayn_uniform_discriminator_gives_zero() {
    let model = Diayn::with_discriminator(Mlp::zeros(&[4, 8, 16], OutputHead::Identity).unwrap(), 1e-3);
    let mut rng = Rng::new(0);
    let meta_rows: Vec<Vec<f64>> = (0..16)
        .map(|z| (0..16).map(|i| if i == z { 1.0 } else { 0.0 }).collect())
        .collect();
    let b = batch(16, 4, 2, Some(Matrix::from_rows(&meta_rows).unwrap()), &mut rng);
    assert!(model.reward(&b).unwrap().iter().all(|&r| r == 0.0));
}

#[test]
fn diayn_skill_schedule() {
    let model = make_intrinsic("diayn", &ctx(4, 2), &mut Rng::new(0)).unwrap();
    let due: Vec<usize> = (0..200).filter(|&t| meta_resample_due(t, model.meta_period())).collect();
    assert_eq!(due, vec![0, 50, 100, 150]);
    let aps = make_intrinsic("aps", &ctx(4, 2), &mut Rng::new(0)).unwrap();
    assert_eq!((0..200).filter(|&t| meta_resample_due(t, aps.meta_period())).count(), 1);
    let w = aps.sample_meta(&mut Rng::new(3));
    assert!((w.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn rnd_loss_is_mean_reward_and_target_is_frozen() {
    let mut rng = Rng::new(6);
    let mut rnd = Rnd::new(&ctx(4, 2), &mut rng).unwrap();
    let target = rnd.target_net().clone();
    for _ in 0..5 {
        let b = batch(32, 4, 2, None, &mut rng);
        let r = rnd.reward(&b).unwrap();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let loss = rnd.update(&b, &mut rng).unwrap();
        assert_eq!(loss, mean);
    }
    assert_eq!(rnd.target_net(), &target);
    assert_eq!(rnd.stats().count(), 160.0);
}

#[test]
fn running_stats_normalise_and_clip() {
    let mut s = RunningStats::new(1);
    let data = Matrix::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    s.update(&data);
    assert!((s.mean()[0] - 2.5).abs() < 1e-15);
    assert!((s.var()[0] - 1.25).abs() < 1e-15);
    s.update(&Matrix::from_vec(2, 1, vec![5.0, 6.0]).unwrap());
    // Matches the pooled statistics of all six values.
    assert!((s.mean()[0] - 3.5).abs() < 1e-12);
    assert!((s.var()[0] - 35.0 / 12.0).abs() < 1e-12);
    let far = s.normalize(&Matrix::from_vec(2, 1, vec![1e6, -1e6]).unwrap(), 5.0);
    assert_eq!(far.as_slice(), &[5.0, -5.0]);
}

#[test]
fn icm_forward_loss_decreases() {
    let mut rng = Rng::new(7);
    let mut icm = Icm::new(&ctx(4, 2), &mut rng).unwrap();
    let b = batch(64, 4, 2, None, &mut rng);
    let first = icm.update(&b, &mut rng).unwrap();
    let mut last = first;
    for _ in 0..99 {
        last = icm.update(&b, &mut rng).unwrap();
    }
    assert!(last < first, "{first} -> {last}");
}

#[test]
fn every_model_updates_and_rewards_finitely() {
    let mut rng = Rng::new(8);
    for aux in [false, true] {
        for id in intrinsic_ids() {
            let c = ModelContext { aux_nets: aux, ..ctx(4, 2) };
            let mut m = make_intrinsic(id, &c, &mut rng).unwrap();
            let meta = (m.meta_dim() > 0).then(|| {
                let rows: Vec<Vec<f64>> = (0..32).map(|_| m.sample_meta(&mut rng)).collect();
                Matrix::from_rows(&rows).unwrap()
            });
            let b = batch(32, 4, 2, meta, &mut rng);
            for _ in 0..3 {
                assert!(m.update(&b, &mut rng).unwrap().is_finite(), "{id}");
            }
            let r = m.reward(&b).unwrap();
            assert_eq!(r.len(), 32);
            assert!(r.iter().all(|v| v.is_finite()), "{id}");
            if matches!(id, "icm" | "apt" | "rnd" | "disagreement") {
                assert!(r.iter().all(|&v| v >= 0.0), "{id}");
            }
        }
    }
}

/// Long: a learned supervised collector should out-score random data on its
/// own task.
#[test]
#[ignore = "long-running: collects 500 desk episodes"]
fn supervised_data_beats_random_on_its_task() {
    let env = make_env(POINTMASS_MAZE, Preset::Desk.episode_length()).unwrap();
    let mut cfg = CollectConfig::for_preset("supervised", Preset::Desk);
    cfg.data_task = Some("reach_top_right".into());
    let sup = collect(env.as_ref(), &cfg, &Rng::new(1)).unwrap();
    let rnd = collect(env.as_ref(), &CollectConfig::for_preset("random", Preset::Desk), &Rng::new(1)).unwrap();
    let r = reward_for(POINTMASS_MAZE, "reach_top_right").unwrap();
    let a = relabel(&sup.dataset, r.as_ref()).unwrap().mean_reward().unwrap();
    let b = relabel(&rnd.dataset, r.as_ref()).unwrap().mean_reward().unwrap();
    assert!(a >= b, "supervised {a} vs random {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn budget_accounting(episodes in 0usize..5, len in 1usize..30, seed in any::<u64>()) {
        let env = make_env(POINTMASS_MAZE, len).unwrap();
        let out = collect(env.as_ref(), &small("random", episodes), &Rng::new(seed)).unwrap();
        prop_assert_eq!(out.dataset.n_episodes(), episodes);
        prop_assert_eq!(out.dataset.n_transitions(), episodes * len);
    }
}

mod common;

use common::props::{gradient_check, random_small_net};
use common::{naive_forward, random_matrix};
use exorl::nn::{AdamState, Matrix, Mlp, OutputHead, TargetCopy};
use exorl::Rng;
use proptest::prelude::*;

#[test]
fn analytic_gradients_match_finite_differences() {
    gradient_check(11, 100).unwrap();
}

#[test]
fn input_gradients_match_finite_differences() {
    let mut rng = Rng::new(12);
    for _ in 0..30 {
        let net = random_small_net(&mut rng);
        let x = random_matrix(2, net.input_dim(), &mut rng);
        let u = random_matrix(2, net.output_dim(), &mut rng);
        let (_, cache) = net.forward(&x).unwrap();
        let (_, dx) = net.backward(&cache, &u).unwrap();
        let f = |m: &Matrix| -> f64 {
            net.predict(m).unwrap().as_slice().iter().zip(u.as_slice()).map(|(a, b)| a * b).sum()
        };
        for i in 0..x.as_slice().len() {
            let mut up = x.clone();
            up.as_mut_slice()[i] += 1e-6;
            let mut down = x.clone();
            down.as_mut_slice()[i] -= 1e-6;
            let n = (f(&up) - f(&down)) / 2e-6;
            let a = dx.as_slice()[i];
            assert!((a - n).abs() <= 1e-4 * a.abs().max(n.abs()) || (a - n).abs() <= 1e-7);
        }
    }
}

#[test]
fn forward_matches_hand_evaluation() {
    let mut rng = Rng::new(3);
    let net = Mlp::new(&[5, 7, 6, 3], OutputHead::Tanh, &mut rng).unwrap();
    let x = random_matrix(4, 5, &mut rng);
    let y = net.predict(&x).unwrap();
    for r in 0..4 {
        let expect = naive_forward(&net, x.row(r));
        for (a, b) in y.row(r).iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn single_linear_unit_gradients() {
    let net = Mlp::from_params(&[1, 1], OutputHead::Identity, vec![0.5, 0.0]).unwrap();
    let x = Matrix::from_vec(1, 1, vec![3.0]).unwrap();
    let (_, cache) = net.forward(&x).unwrap();
    let (g, dx) = net.backward(&cache, &Matrix::from_vec(1, 1, vec![1.0]).unwrap()).unwrap();
    assert_eq!(g, vec![3.0, 1.0]);
    assert_eq!(dx.as_slice(), &[0.5]);
}

#[test]
fn adam_first_step_hand_value() {
    let mut p = vec![0.0];
    let mut s = AdamState::new(1);
    s.step(&mut p, &[1.0], 0.1).unwrap();
    // m̂ = 1, v̂ = 1, so Δ = −0.1 · 1 / (1 + 1e-8).
    let expected = -0.1 / (1.0 + 1e-8);
    assert!((p[0] - expected).abs() < 1e-12);
    assert!((p[0] + 0.1).abs() < 1e-6);
    assert_eq!(s.step_count(), 1);
}

#[test]
fn adam_zero_gradient_leaves_params() {
    let mut p = vec![1.5, -2.0, 0.25];
    let mut s = AdamState::new(3);
    s.step(&mut p, &[0.0; 3], 0.1).unwrap();
    assert_eq!(p, vec![1.5, -2.0, 0.25]);
}

#[test]
fn identical_nets_follow_identical_trajectories() {
    let build = || {
        let mut rng = Rng::new(77);
        let mut net = Mlp::new(&[3, 16, 2], OutputHead::Identity, &mut rng).unwrap();
        let mut opt = AdamState::new(net.n_params());
        for _ in 0..20 {
            let x = random_matrix(8, 3, &mut rng);
            let u = random_matrix(8, 2, &mut rng);
            let (_, c) = net.forward(&x).unwrap();
            let (g, _) = net.backward(&c, &u).unwrap();
            opt.step(net.params_mut(), &g, 1e-3).unwrap();
        }
        net
    };
    assert_eq!(build().params(), build().params());
}

#[test]
fn ema_hand_values() {
    let online = Mlp::from_params(&[1, 1], OutputHead::Identity, vec![1.0, 1.0]).unwrap();
    let zero = Mlp::zeros(&[1, 1], OutputHead::Identity).unwrap();
    let mut t = TargetCopy::new(&zero, 0.01).unwrap();
    t.update(&online).unwrap();
    assert!(t.net().params().iter().all(|&v| (v - 0.01).abs() < 1e-15));

    let mut full = TargetCopy::new(&zero, 1.0).unwrap();
    full.update(&online).unwrap();
    assert_eq!(full.net().params(), online.params());

    let mut frozen = TargetCopy::new(&zero, 0.0).unwrap();
    frozen.update(&online).unwrap();
    assert_eq!(frozen.net().params(), zero.params());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_shape_and_finiteness(
        sizes in proptest::collection::vec(1usize..12, 2..5),
        rows in 1usize..9,
        seed in any::<u64>(),
    ) {
        let mut rng = Rng::new(seed);
        let net = Mlp::new(&sizes, OutputHead::Tanh, &mut rng).unwrap();
        let x = random_matrix(rows, sizes[0], &mut rng);
        let y = net.predict(&x).unwrap();
        prop_assert_eq!((y.rows(), y.cols()), (rows, *sizes.last().unwrap()));
        prop_assert!(y.is_finite());
        prop_assert!(y.as_slice().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn init_is_a_pure_function_of_seed(seed in any::<u64>()) {
        let a = Mlp::new(&[3, 8, 2], OutputHead::Identity, &mut Rng::new(seed)).unwrap();
        let b = Mlp::new(&[3, 8, 2], OutputHead::Identity, &mut Rng::new(seed)).unwrap();
        prop_assert_eq!(a.params(), b.params());
        prop_assert!(a.bias(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adam_state_invariants(grads in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 4), 1..20)) {
        let mut p = vec![0.0; 4];
        let mut s = AdamState::new(4);
        for (i, g) in grads.iter().enumerate() {
            s.step(&mut p, g, 1e-2).unwrap();
            prop_assert_eq!(s.step_count(), i as u64 + 1);
            prop_assert!(s.second_moment().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn ema_stays_in_history_hull(
        tau in 0.0f64..=1.0,
        steps in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 1..50),
    ) {
        let start = Mlp::from_params(&[1, 1], OutputHead::Identity, vec![0.3, -0.7]).unwrap();
        let mut target = TargetCopy::new(&start, tau).unwrap();
        let mut lo = start.params().to_vec();
        let mut hi = lo.clone();
        for s in &steps {
            let online = Mlp::from_params(&[1, 1], OutputHead::Identity, vec![s[0], s[1]]).unwrap();
            for (i, v) in online.params().iter().enumerate() {
                lo[i] = lo[i].min(*v);
                hi[i] = hi[i].max(*v);
            }
            target.update(&online).unwrap();
            for (i, v) in target.net().params().iter().enumerate() {
                prop_assert!(*v >= lo[i] && *v <= hi[i]);
            }
        }
    }
}

#![allow(dead_code)]

use exorl::datastore::{Episode, TransitionDataset};
use exorl::nn::{Matrix, Mlp, OutputHead};
use exorl::Rng;

/// Plain triple-loop forward pass, independent of the library's gemm path.
pub fn naive_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
    let sizes = net.sizes();
    let mut a = x.to_vec();
    for l in 0..net.n_layers() {
        let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
        let w = net.weights(l);
        let b = net.bias(l);
        let mut y = vec![0.0; fan_out];
        for j in 0..fan_out {
            let mut s = b[j];
            for i in 0..fan_in {
                s += a[i] * w[i * fan_out + j];
            }
            y[j] = s;
        }
        if l + 1 < net.n_layers() {
            y.iter_mut().for_each(|v| *v = v.max(0.0));
        } else if net.head() == OutputHead::Tanh {
            y.iter_mut().for_each(|v| *v = v.tanh());
        }
        a = y;
    }
    a
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

/// Random maze-shaped dataset (obs 4, act 2), reward-free.
pub fn random_dataset(env_id: &str, episodes: usize, len: usize, obs_dim: usize, act_dim: usize, rng: &mut Rng) -> TransitionDataset {
    let mut ds = TransitionDataset::new(env_id, obs_dim, act_dim, false);
    for _ in 0..episodes {
        let obs = (0..(len + 1) * obs_dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let acts = (0..len * act_dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        ds.push_episode(Episode::new(obs_dim, act_dim, obs, acts, None).unwrap()).unwrap();
    }
    ds
}

/// One-sided paired t statistic of `a − b`.
pub mod props;

pub fn paired_t(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return if mean > 0.0 { f64::INFINITY } else if mean < 0.0 { f64::NEG_INFINITY } else { 0.0 };
    }
    mean / (var / n).sqrt()
}

//! Intrinsic reward models, one per exploration algorithm, selected by name.

mod aps;
mod apt;
mod diayn;
mod disagreement;
mod icm;
mod rnd;

pub use aps::Aps;
pub use apt::{knn_particle_reward, Apt};
pub use diayn::Diayn;
pub use disagreement::{ensemble_disagreement, Disagreement};
pub use icm::Icm;
pub use rnd::{Rnd, RunningStats};

use crate::error::{Error, Result};
use crate::nn::{AdamState, Matrix, Mlp};
use crate::rng::Rng;

/// Transitions (and skill/task vectors, if any) sampled from the replay.
#[derive(Debug, Clone)]
pub struct IntrinsicBatch {
    pub obs: Matrix,
    pub actions: Matrix,
    pub next_obs: Matrix,
    pub meta: Option<Matrix>,
}

impl IntrinsicBatch {
    pub fn len(&self) -> usize {
        self.obs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.rows() == 0
    }

    pub(crate) fn meta(&self, context: &'static str) -> Result<&Matrix> {
        self.meta
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{context} needs a skill/task vector per sample")))
    }
}

pub trait IntrinsicModel: Send + std::fmt::Debug {
    fn name(&self) -> &'static str;

    /// Width of the skill/task vector appended to the actor's input.
    fn meta_dim(&self) -> usize {
        0
    }

    fn sample_meta(&self, _rng: &mut Rng) -> Vec<f64> {
        Vec::new()
    }

    /// Steps between meta resamples within an episode; `None` means once per
    /// episode.
    fn meta_period(&self) -> Option<usize> {
        None
    }

    fn reward(&self, batch: &IntrinsicBatch) -> Result<Vec<f64>>;

    /// One optimisation step on the trainable parts; returns the loss.
    fn update(&mut self, batch: &IntrinsicBatch, rng: &mut Rng) -> Result<f64>;
}

/// Sizes and optimiser settings shared by all models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelContext {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden_dim: usize,
    pub lr: f64,
    pub knn_k: usize,
    /// Enables the learned encoder / inverse-dynamics networks.
    pub aux_nets: bool,
}

type ModelCtor = fn(&ModelContext, &mut Rng) -> Result<Box<dyn IntrinsicModel>>;

const MODELS: &[(&str, ModelCtor)] = &[
    ("icm", |c, r| Ok(Box::new(Icm::new(c, r)?))),
    ("disagreement", |c, r| Ok(Box::new(Disagreement::new(c, r)?))),
    ("rnd", |c, r| Ok(Box::new(Rnd::new(c, r)?))),
    ("apt", |c, r| Ok(Box::new(Apt::new(c, r)?))),
    ("diayn", |c, r| Ok(Box::new(Diayn::new(c, r)?))),
    ("aps", |c, r| Ok(Box::new(Aps::new(c, r)?))),
];

pub fn intrinsic_ids() -> Vec<&'static str> {
    MODELS.iter().map(|(id, _)| *id).collect()
}

pub fn make_intrinsic(id: &str, ctx: &ModelContext, rng: &mut Rng) -> Result<Box<dyn IntrinsicModel>> {
    MODELS
        .iter()
        .find(|(name, _)| *name == id)
        .ok_or_else(|| Error::Unknown {
            kind: "intrinsic model",
            id: id.to_string(),
        })
        .and_then(|(_, ctor)| ctor(ctx, rng))
}

pub(crate) fn hidden_sizes(input: usize, hidden: usize, n_hidden: usize, output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend(std::iter::repeat_n(hidden, n_hidden));
    s.push(output);
    s
}

/// A network with its own optimiser.
#[derive(Debug, Clone)]
pub(crate) struct Trained {
    pub net: Mlp,
    pub opt: AdamState,
    pub lr: f64,
}

impl Trained {
    pub fn new(net: Mlp, lr: f64) -> Self {
        let opt = AdamState::new(net.n_params());
        Self { net, opt, lr }
    }

    pub fn step(&mut self, grads: &[f64]) -> Result<()> {
        self.opt.step(self.net.params_mut(), grads, self.lr)
    }

    /// Mean over rows of `‖f(x) − target‖²` and one Adam step on it.
    pub fn regress(&mut self, input: &Matrix, target: &Matrix) -> Result<f64> {
        let (pred, cache) = self.net.forward(input)?;
        let (loss, g) = squared_error(&pred, target);
        let (grads, _) = self.net.backward(&cache, &g)?;
        self.step(&grads)?;
        Ok(loss)
    }
}

/// Loss `mean_b ‖pred_b − target_b‖²` and its gradient w.r.t. `pred`.
pub(crate) fn squared_error(pred: &Matrix, target: &Matrix) -> (f64, Matrix) {
    let n = pred.rows() as f64;
    let mut g = Matrix::zeros(pred.rows(), pred.cols());
    let mut loss = 0.0;
    for ((gv, p), t) in g.as_mut_slice().iter_mut().zip(pred.as_slice()).zip(target.as_slice()) {
        let d = p - t;
        loss += d * d;
        *gv = 2.0 * d / n;
    }
    (loss / n, g)
}

/// Per-row squared distance `‖a_b − b_b‖²`.
pub(crate) fn row_sq_dist(a: &Matrix, b: &Matrix) -> Vec<f64> {
    (0..a.rows())
        .map(|r| a.row(r).iter().zip(b.row(r)).map(|(x, y)| (x - y) * (x - y)).sum())
        .collect()
}

pub(crate) fn check_loss(context: &'static str, loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFinite {
            context,
            detail: format!("loss {loss}"),
        })
    }
}

pub(crate) fn one_hot_index(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}


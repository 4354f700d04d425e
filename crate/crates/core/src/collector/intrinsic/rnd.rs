use crate::collector::intrinsic::{check_loss, hidden_sizes, row_sq_dist, IntrinsicBatch, IntrinsicModel, ModelContext, Trained};
use crate::error::Result;
use crate::nn::{Matrix, Mlp, OutputHead};
use crate::rng::Rng;

pub const RND_OUTPUT_DIM: usize = 512;
pub const RND_CLIP: f64 = 5.0;

/// Running per-dimension mean and variance (parallel-merge form).
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    count: f64,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl RunningStats {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }

    pub fn update(&mut self, batch: &Matrix) {
        let n = batch.rows() as f64;
        if n == 0.0 {
            return;
        }
        for c in 0..batch.cols() {
            let col = batch.column(c);
            let bm = col.iter().sum::<f64>() / n;
            let bv = col.iter().map(|x| (x - bm) * (x - bm)).sum::<f64>() / n;
            if self.count == 0.0 {
                self.mean[c] = bm;
                self.var[c] = bv;
                continue;
            }
            let total = self.count + n;
            let delta = bm - self.mean[c];
            let m2 = self.var[c] * self.count + bv * n + delta * delta * self.count * n / total;
            self.mean[c] += delta * n / total;
            self.var[c] = m2 / total;
        }
        self.count += n;
    }

    /// `(x − μ) / sqrt(σ² + 1e-8)`, clipped to `±clip`.
    pub fn normalize(&self, batch: &Matrix, clip: f64) -> Matrix {
        let mut out = batch.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = ((*v - self.mean[c]) / (self.var[c] + 1e-8).sqrt()).clamp(-clip, clip);
            }
        }
        out
    }
}

/// Random network distillation: error of a trained predictor against a
/// frozen random target on normalised s′.
#[derive(Debug, Clone)]
pub struct Rnd {
    target: Mlp,
    predictor: Trained,
    stats: RunningStats,
}

impl Rnd {
    pub fn new(ctx: &ModelContext, rng: &mut Rng) -> Result<Self> {
        let sizes = hidden_sizes(ctx.obs_dim, ctx.hidden_dim, 2, RND_OUTPUT_DIM);
        let target = Mlp::new(&sizes, OutputHead::Identity, rng)?;
        let predictor = Mlp::new(&sizes, OutputHead::Identity, rng)?;
        Ok(Self {
            target,
            predictor: Trained::new(predictor, ctx.lr),
            stats: RunningStats::new(ctx.obs_dim),
        })
    }

    pub fn stats(&self) -> &RunningStats {
        &self.stats
    }

    pub fn target_net(&self) -> &Mlp {
        &self.target
    }

    fn errors(&self, next_obs: &Matrix) -> Result<Vec<f64>> {
        let x = self.stats.normalize(next_obs, RND_CLIP);
        let t = self.target.predict(&x)?;
        let p = self.predictor.net.predict(&x)?;
        Ok(row_sq_dist(&p, &t))
    }
}

impl IntrinsicModel for Rnd {
    fn name(&self) -> &'static str {
        "rnd"
    }

    fn reward(&self, batch: &IntrinsicBatch) -> Result<Vec<f64>> {
        self.errors(&batch.next_obs)
    }

    fn update(&mut self, batch: &IntrinsicBatch, _rng: &mut Rng) -> Result<f64> {
        let x = self.stats.normalize(&batch.next_obs, RND_CLIP);
        let t = self.target.predict(&x)?;
        let (p, cache) = self.predictor.net.forward(&x)?;
        let e = row_sq_dist(&p, &t);
        let loss = check_loss("rnd loss", e.iter().sum::<f64>() / e.len().max(1) as f64)?;
        let n = p.rows() as f64;
        let mut g = p;
        for (gv, tv) in g.as_mut_slice().iter_mut().zip(t.as_slice()) {
            *gv = 2.0 * (*gv - tv) / n;
        }
        let (grads, _) = self.predictor.net.backward(&cache, &g)?;
        self.predictor.step(&grads)?;
        self.stats.update(&batch.next_obs);
        Ok(loss)
    }
}

use crate::collector::intrinsic::{check_loss, hidden_sizes, knn_particle_reward, IntrinsicBatch, IntrinsicModel, ModelContext, Trained};
use crate::error::Result;
use crate::nn::{Matrix, Mlp, OutputHead};
use crate::rng::Rng;

pub const APS_SF_DIM: usize = 10;

fn normalize_rows(m: &Matrix) -> (Matrix, Vec<f64>) {
    let mut out = m.clone();
    let mut norms = Vec::with_capacity(m.rows());
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        row.iter_mut().for_each(|v| *v /= norm);
        norms.push(norm);
    }
    (out, norms)
}

/// Successor-feature exploration: kNN entropy on unit-norm features φ(s′)
/// plus the task term `wᵀφ(s′)` for a per-episode task vector `w`.
#[derive(Debug, Clone)]
pub struct Aps {
    phi: Trained,
    k: usize,
}

impl Aps {
    pub fn new(ctx: &ModelContext, rng: &mut Rng) -> Result<Self> {
        let net = Mlp::new(&hidden_sizes(ctx.obs_dim, ctx.hidden_dim, 2, APS_SF_DIM), OutputHead::Identity, rng)?;
        Ok(Self {
            phi: Trained::new(net, ctx.lr),
            k: ctx.knn_k,
        })
    }

    /// Unit-norm features.
    pub fn features(&self, obs: &Matrix) -> Result<Matrix> {
        Ok(normalize_rows(&self.phi.net.predict(obs)?).0)
    }
}

impl IntrinsicModel for Aps {
    fn name(&self) -> &'static str {
        "aps"
    }

    fn meta_dim(&self) -> usize {
        APS_SF_DIM
    }

    fn sample_meta(&self, rng: &mut Rng) -> Vec<f64> {
        let mut w: Vec<f64> = (0..APS_SF_DIM).map(|_| rng.normal()).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        w.iter_mut().for_each(|v| *v /= norm);
        w
    }

    fn reward(&self, batch: &IntrinsicBatch) -> Result<Vec<f64>> {
        let w = batch.meta("aps")?;
        let phi = self.features(&batch.next_obs)?;
        let entropy = knn_particle_reward(&phi, self.k)?;
        Ok((0..phi.rows())
            .map(|r| entropy[r] + phi.row(r).iter().zip(w.row(r)).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    }

    fn update(&mut self, batch: &IntrinsicBatch, _rng: &mut Rng) -> Result<f64> {
        let w = batch.meta("aps")?;
        let (raw, cache) = self.phi.net.forward(&batch.next_obs)?;
        let (unit, norms) = normalize_rows(&raw);
        let n = raw.rows() as f64;
        // Maximise wᵀφ̂: d(−wᵀu)/dφ = −(w − (wᵀu)u)/‖φ‖.
        let mut g = Matrix::zeros(raw.rows(), raw.cols());
        let mut loss = 0.0;
        for (r, norm) in norms.iter().enumerate() {
            let u = unit.row(r);
            let wr = w.row(r);
            let dot: f64 = u.iter().zip(wr).map(|(a, b)| a * b).sum();
            loss -= dot;
            for (c, gv) in g.row_mut(r).iter_mut().enumerate() {
                *gv = -(wr[c] - dot * u[c]) / norm / n;
            }
        }
        let (grads, _) = self.phi.net.backward(&cache, &g)?;
        self.phi.step(&grads)?;
        check_loss("aps loss", loss / n)
    }
}

use crate::collector::intrinsic::{check_loss, hidden_sizes, one_hot_index, IntrinsicBatch, IntrinsicModel, ModelContext, Trained};
use crate::error::Result;
use crate::nn::{Matrix, Mlp, OutputHead};
use crate::rng::Rng;

pub const DIAYN_SKILLS: usize = 16;
pub const DIAYN_UPDATE_SKILL_EVERY: usize = 50;

/// Row-wise log-softmax.
pub(crate) fn log_softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        for v in row.iter_mut() {
            *v = *v - max - lse;
        }
    }
    out
}

/// Skill discovery: a discriminator guesses the one-hot skill from s′ and the
/// reward is its log-probability relative to the uniform prior.
#[derive(Debug, Clone)]
pub struct Diayn {
    discriminator: Trained,
    skills: usize,
}

impl Diayn {
    pub fn new(ctx: &ModelContext, rng: &mut Rng) -> Result<Self> {
        let net = Mlp::new(
            &hidden_sizes(ctx.obs_dim, ctx.hidden_dim, 2, DIAYN_SKILLS),
            OutputHead::Identity,
            rng,
        )?;
        Ok(Self::with_discriminator(net, ctx.lr))
    }

    pub fn with_discriminator(net: Mlp, lr: f64) -> Self {
        let skills = net.output_dim();
        Self {
            discriminator: Trained::new(net, lr),
            skills,
        }
    }

    pub fn discriminator(&self) -> &Mlp {
        &self.discriminator.net
    }
}

impl IntrinsicModel for Diayn {
    fn name(&self) -> &'static str {
        "diayn"
    }

    fn meta_dim(&self) -> usize {
        self.skills
    }

    fn sample_meta(&self, rng: &mut Rng) -> Vec<f64> {
        let mut z = vec![0.0; self.skills];
        z[rng.below(self.skills)] = 1.0;
        z
    }

    fn meta_period(&self) -> Option<usize> {
        Some(DIAYN_UPDATE_SKILL_EVERY)
    }

    fn reward(&self, batch: &IntrinsicBatch) -> Result<Vec<f64>> {
        let meta = batch.meta("diayn")?;
        let lp = log_softmax(&self.discriminator.net.predict(&batch.next_obs)?);
        let prior = (self.skills as f64).ln();
        Ok((0..lp.rows())
            .map(|r| lp.get(r, one_hot_index(meta.row(r))) + prior)
            .collect())
    }

    fn update(&mut self, batch: &IntrinsicBatch, _rng: &mut Rng) -> Result<f64> {
        let meta = batch.meta("diayn")?;
        let (logits, cache) = self.discriminator.net.forward(&batch.next_obs)?;
        let lp = log_softmax(&logits);
        let n = lp.rows() as f64;
        let mut g = lp.clone();
        let mut loss = 0.0;
        for r in 0..g.rows() {
            let z = one_hot_index(meta.row(r));
            loss -= lp.get(r, z);
            for (c, v) in g.row_mut(r).iter_mut().enumerate() {
                let target = if c == z { 1.0 } else { 0.0 };
                *v = (v.exp() - target) / n;
            }
        }
        let (grads, _) = self.discriminator.net.backward(&cache, &g)?;
        self.discriminator.step(&grads)?;
        check_loss("diayn loss", loss / n)
    }
}

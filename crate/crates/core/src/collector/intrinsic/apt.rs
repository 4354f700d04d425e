use crate::collector::intrinsic::{check_loss, squared_error, IntrinsicBatch, IntrinsicModel, ModelContext, Trained};
use crate::error::{Error, Result};
use crate::nn::{Matrix, Mlp, OutputHead};
use crate::rng::Rng;

pub const APT_REP_DIM: usize = 512;

/// Particle-based entropy reward: for each row, `log(1 + d̄)` where `d̄` is the
/// mean Euclidean distance to its `k` nearest other rows, ignoring exact
/// duplicates.
pub fn knn_particle_reward(points: &Matrix, k: usize) -> Result<Vec<f64>> {
    let n = points.rows();
    if k == 0 {
        return Err(Error::Config("knn k must be positive".into()));
    }
    if n < k + 1 {
        return Err(Error::BatchTooSmall { batch: n, k });
    }
    let mut out = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n);
    for i in 0..n {
        dists.clear();
        let pi = points.row(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d: f64 = pi.iter().zip(points.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            if d > 0.0 {
                dists.push(d);
            }
        }
        let take = k.min(dists.len());
        let mean = if take == 0 {
            0.0
        } else {
            dists.select_nth_unstable_by(take - 1, f64::total_cmp);
            dists[..take].sort_unstable_by(f64::total_cmp);
            dists[..take].iter().map(|d| d.sqrt()).sum::<f64>() / take as f64
        };
        out.push((1.0 + mean).ln());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct Encoder {
    encoder: Trained,
    forward: Trained,
    inverse: Trained,
}

/// Active pre-training: kNN entropy of (optionally encoded) next states.
#[derive(Debug, Clone)]
pub struct Apt {
    k: usize,
    learned: Option<Encoder>,
}

impl Apt {
    pub fn new(ctx: &ModelContext, rng: &mut Rng) -> Result<Self> {
        let learned = if ctx.aux_nets {
            let h = ctx.hidden_dim;
            let enc = Mlp::new(&[ctx.obs_dim, h, APT_REP_DIM], OutputHead::Identity, rng)?;
            let fwd = Mlp::new(&[APT_REP_DIM + ctx.act_dim, h, APT_REP_DIM], OutputHead::Identity, rng)?;
            let inv = Mlp::new(&[2 * APT_REP_DIM, h, ctx.act_dim], OutputHead::Tanh, rng)?;
            Some(Encoder {
                encoder: Trained::new(enc, ctx.lr),
                forward: Trained::new(fwd, ctx.lr),
                inverse: Trained::new(inv, ctx.lr),
            })
        } else {
            None
        };
        Ok(Self { k: ctx.knn_k, learned })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn represent(&self, obs: &Matrix) -> Result<Matrix> {
        match &self.learned {
            Some(e) => e.encoder.net.predict(obs),
            None => Ok(obs.clone()),
        }
    }
}

impl IntrinsicModel for Apt {
    fn name(&self) -> &'static str {
        "apt"
    }

    fn reward(&self, batch: &IntrinsicBatch) -> Result<Vec<f64>> {
        knn_particle_reward(&self.represent(&batch.next_obs)?, self.k)
    }

    fn update(&mut self, batch: &IntrinsicBatch, _rng: &mut Rng) -> Result<f64> {
        let Some(e) = self.learned.as_mut() else {
            return Ok(0.0);
        };
        let rep = e.encoder.net.sizes().last().copied().unwrap_or(APT_REP_DIM);
        let (z, zc) = e.encoder.net.forward(&batch.obs)?;
        let (zn, znc) = e.encoder.net.forward(&batch.next_obs)?;

        let (f, fc) = e.forward.net.forward(&z.hcat(&batch.actions)?)?;
        let (fl, fg) = squared_error(&f, &zn);
        let (fgrads, f_in) = e.forward.net.backward(&fc, &fg)?;

        let (a, ac) = e.inverse.net.forward(&z.hcat(&zn)?)?;
        let (il, ig) = squared_error(&a, &batch.actions);
        let (igrads, i_in) = e.inverse.net.backward(&ac, &ig)?;

        // Encoder gradient: through z (forward and inverse inputs) and
        // through z′ (forward target and inverse input).
        let mut dz = f_in.columns(0, rep);
        let mut dzn = i_in.columns(rep, 2 * rep);
        for (d, v) in dz.as_mut_slice().iter_mut().zip(i_in.columns(0, rep).as_slice()) {
            *d += v;
        }
        for (d, v) in dzn.as_mut_slice().iter_mut().zip(fg.as_slice()) {
            *d -= v;
        }
        let (g1, _) = e.encoder.net.backward(&zc, &dz)?;
        let (g2, _) = e.encoder.net.backward(&znc, &dzn)?;
        let enc_grads: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();

        e.forward.step(&fgrads)?;
        e.inverse.step(&igrads)?;
        e.encoder.step(&enc_grads)?;
        check_loss("apt loss", fl + il)
    }
}

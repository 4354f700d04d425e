use crate::collector::intrinsic::{
    check_loss, hidden_sizes, row_sq_dist, IntrinsicBatch, IntrinsicModel, ModelContext, Trained,
};
use crate::error::Result;
use crate::nn::{Mlp, OutputHead};
use crate::rng::Rng;

/// Forward-model prediction error, `log(1 + ‖f(s, a) − s′‖²)`.
#[derive(Debug, Clone)]
pub struct Icm {
    forward: Trained,
    inverse: Option<Trained>,
}

impl Icm {
    pub fn new(ctx: &ModelContext, rng: &mut Rng) -> Result<Self> {
        let h = ctx.hidden_dim;
        let forward = Mlp::new(
            &hidden_sizes(ctx.obs_dim + ctx.act_dim, h, 2, ctx.obs_dim),
            OutputHead::Identity,
            rng,
        )?;
        let inverse = if ctx.aux_nets {
            let net = Mlp::new(&hidden_sizes(2 * ctx.obs_dim, h, 2, ctx.act_dim), OutputHead::Tanh, rng)?;
            Some(Trained::new(net, ctx.lr))
        } else {
            None
        };
        Ok(Self {
            forward: Trained::new(forward, ctx.lr),
            inverse,
        })
    }

    pub fn forward_net(&self) -> &Mlp {
        &self.forward.net
    }

    /// Squared forward-prediction error per sample.
    pub fn prediction_error(&self, batch: &IntrinsicBatch) -> Result<Vec<f64>> {
        let pred = self.forward.net.predict(&batch.obs.hcat(&batch.actions)?)?;
        Ok(row_sq_dist(&pred, &batch.next_obs))
    }
}

impl IntrinsicModel for Icm {
    fn name(&self) -> &'static str {
        "icm"
    }

    fn reward(&self, batch: &IntrinsicBatch) -> Result<Vec<f64>> {
        Ok(self
            .prediction_error(batch)?
            .into_iter()
            .map(|e| (1.0 + e).ln())
            .collect())
    }

    fn update(&mut self, batch: &IntrinsicBatch, _rng: &mut Rng) -> Result<f64> {
        let mut loss = self
            .forward
            .regress(&batch.obs.hcat(&batch.actions)?, &batch.next_obs)?;
        if let Some(inv) = self.inverse.as_mut() {
            loss += inv.regress(&batch.obs.hcat(&batch.next_obs)?, &batch.actions)?;
        }
        check_loss("icm loss", loss)
    }
}

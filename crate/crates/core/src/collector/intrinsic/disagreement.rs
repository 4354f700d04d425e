use crate::collector::intrinsic::{check_loss, hidden_sizes, IntrinsicBatch, IntrinsicModel, ModelContext, Trained};
use crate::error::Result;
use crate::nn::{Matrix, Mlp, OutputHead};
use crate::rng::Rng;

pub const ENSEMBLE_SIZE: usize = 5;

/// Mean over output dims of the across-member population variance.
pub fn ensemble_disagreement(predictions: &[Matrix]) -> Vec<f64> {
    let Some(first) = predictions.first() else {
        return Vec::new();
    };
    let m = predictions.len() as f64;
    let (rows, cols) = (first.rows(), first.cols());
    (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let mean = predictions.iter().map(|p| p.get(r, c)).sum::<f64>() / m;
                    predictions
                        .iter()
                        .map(|p| (p.get(r, c) - mean) * (p.get(r, c) - mean))
                        .sum::<f64>()
                        / m
                })
                .sum::<f64>()
                / cols as f64
        })
        .collect()
}

/// Ensemble of forward models; reward is their disagreement on s′.
#[derive(Debug, Clone)]
pub struct Disagreement {
    members: Vec<Trained>,
}

impl Disagreement {
    pub fn new(ctx: &ModelContext, rng: &mut Rng) -> Result<Self> {
        let sizes = hidden_sizes(ctx.obs_dim + ctx.act_dim, ctx.hidden_dim, 2, ctx.obs_dim);
        let members = (0..ENSEMBLE_SIZE)
            .map(|_| Ok(Trained::new(Mlp::new(&sizes, OutputHead::Identity, rng)?, ctx.lr)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { members })
    }

    pub fn members(&self) -> impl Iterator<Item = &Mlp> {
        self.members.iter().map(|m| &m.net)
    }
}

impl IntrinsicModel for Disagreement {
    fn name(&self) -> &'static str {
        "disagreement"
    }

    fn reward(&self, batch: &IntrinsicBatch) -> Result<Vec<f64>> {
        let input = batch.obs.hcat(&batch.actions)?;
        let preds = self
            .members
            .iter()
            .map(|m| m.net.predict(&input))
            .collect::<Result<Vec<_>>>()?;
        Ok(ensemble_disagreement(&preds))
    }

    fn update(&mut self, batch: &IntrinsicBatch, rng: &mut Rng) -> Result<f64> {
        let input = batch.obs.hcat(&batch.actions)?;
        let n = batch.len();
        let half = (n / 2).max(1);
        let mut loss = 0.0;
        for member in &mut self.members {
            // Each member sees its own random half of the batch.
            let idx = rng.choose_distinct(n, half);
            loss += member.regress(&input.select_rows(&idx), &batch.next_obs.select_rows(&idx))?;
        }
        check_loss("disagreement loss", loss / self.members.len() as f64)
    }
}

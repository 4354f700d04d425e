use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preset::Preset;

/// Advantage-to-weight map for CRR's filtered regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrrTransform {
    /// 1 if the advantage is positive, else 0.
    Indicator,
    /// Every sample weighted 1 (plain behaviour cloning).
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineConfig {
    pub algo_id: String,
    pub batch: usize,
    pub lr: f64,
    pub discount: f64,
    /// Actor and target updates happen on every `update_every`-th step.
    pub update_every: usize,
    pub training_steps: usize,
    pub tau_q: f64,
    pub hidden_dim: usize,
    pub n_hidden: usize,
    pub target_noise: f64,
    pub stddev_clip: f64,
    pub td3bc_alpha: f64,
    pub crr_value_samples: usize,
    pub crr_transform: CrrTransform,
    pub cql_alpha: f64,
    pub cql_n_actions: usize,
    pub cql_lagrange: bool,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        Self {
            algo_id: "td3".into(),
            batch: 1024,
            lr: 1e-4,
            discount: 0.99,
            update_every: 2,
            training_steps: 500_000,
            tau_q: 0.01,
            hidden_dim: 1024,
            n_hidden: 2,
            target_noise: 0.2,
            stddev_clip: 0.3,
            td3bc_alpha: 2.5,
            crr_value_samples: 10,
            crr_transform: CrrTransform::Indicator,
            cql_alpha: 0.01,
            cql_n_actions: 3,
            cql_lagrange: false,
        }
    }
}

impl OfflineConfig {
    pub fn for_preset(algo_id: &str, preset: Preset) -> Self {
        Self {
            algo_id: algo_id.to_string(),
            batch: preset.batch_size(),
            training_steps: preset.training_steps(),
            hidden_dim: preset.hidden_dim(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.batch == 0 {
            return bad("batch must be positive".into());
        }
        if self.update_every == 0 {
            return bad("update_every must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad(format!("discount {} outside [0, 1]", self.discount));
        }
        if !(0.0..=1.0).contains(&self.tau_q) {
            return bad(format!("tau_q {} outside [0, 1]", self.tau_q));
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive".into());
        }
        if self.crr_value_samples == 0 || self.cql_n_actions == 0 {
            return bad("sample counts must be positive".into());
        }
        if self.cql_lagrange {
            return bad("the Lagrange variant of CQL is not supported".into());
        }
        if self.td3bc_alpha < 0.0 || self.cql_alpha < 0.0 {
            return bad("alphas must be non-negative".into());
        }
        Ok(())
    }
}

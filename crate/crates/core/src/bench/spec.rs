use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preset::Preset;

/// Where a cell's dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Collected on demand (and cached).
    Collect {
        algo: String,
        #[serde(default)]
        data_task: Option<String>,
    },
    /// An existing `.exd` file.
    File { path: String },
    /// Trajectory mixture of a supervised and an unsupervised collection, one
    /// cell per unsupervised fraction.
    Mix {
        supervised_task: String,
        unsupervised_algo: String,
        fractions: Vec<f64>,
    },
}

impl DataSource {
    pub fn label(&self) -> String {
        match self {
            DataSource::Collect { algo, data_task: Some(t) } => format!("{algo}[{t}]"),
            DataSource::Collect { algo, data_task: None } => algo.clone(),
            DataSource::File { path } => format!("file:{path}"),
            DataSource::Mix {
                supervised_task,
                unsupervised_algo,
                ..
            } => format!("mix(supervised[{supervised_task}],{unsupervised_algo})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment_id: String,
    pub env: String,
    #[serde(default)]
    pub preset: Preset,
    pub sources: Vec<DataSource>,
    pub rewards: Vec<String>,
    pub offline_algos: Vec<String>,
    pub seeds: Vec<u64>,
    /// Collection budgets in episodes; empty means the preset's.
    #[serde(default)]
    pub budgets: Vec<usize>,
    /// Suffix start fractions; empty means the whole dataset.
    #[serde(default)]
    pub suffix_fractions: Vec<f64>,
    #[serde(default)]
    pub training_steps: Option<usize>,
    #[serde(default)]
    pub eval_episodes: Option<usize>,
}

/// One grid point; it runs once per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub experiment_id: String,
    pub env: String,
    pub preset: Preset,
    pub source: DataSource,
    pub mix_fraction: Option<f64>,
    pub budget: usize,
    pub suffix_start: Option<f64>,
    pub reward: String,
    pub offline_algo: String,
    pub training_steps: usize,
    pub eval_episodes: usize,
}

impl Cell {
    /// Stable identifier used to derive the cell's random streams.
    pub fn key(&self) -> String {
        format!(
            "{}|{}|{}|{}|mix={:?}|budget={}|suffix={:?}|{}|{}|steps={}|eval={}",
            self.experiment_id,
            self.env,
            self.preset,
            self.source.label(),
            self.mix_fraction,
            self.budget,
            self.suffix_start,
            self.reward,
            self.offline_algo,
            self.training_steps,
            self.eval_episodes,
        )
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for f in &self.suffix_fractions {
            if !(0.0..1.0).contains(f) {
                return bad(format!("suffix fraction {f} outside [0, 1)"));
            }
        }
        for s in &self.sources {
            if let DataSource::Mix { fractions, .. } = s {
                if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
                    return bad(format!("mix fraction {f} outside [0, 1]"));
                }
            }
        }
        if self.budgets.contains(&0) {
            return bad("budgets must be positive".into());
        }
        Ok(())
    }

    /// Expands the grid in a fixed order.
    pub fn cells(&self) -> Vec<Cell> {
        let budgets = if self.budgets.is_empty() {
            vec![self.preset.budget_episodes()]
        } else {
            self.budgets.clone()
        };
        let suffixes: Vec<Option<f64>> = if self.suffix_fractions.is_empty() {
            vec![None]
        } else {
            self.suffix_fractions.iter().map(|&f| Some(f)).collect()
        };
        let training_steps = self.training_steps.unwrap_or(self.preset.training_steps());
        let eval_episodes = self.eval_episodes.unwrap_or(self.preset.eval_episodes());
        let mut cells = Vec::new();
        for source in &self.sources {
            let mixes: Vec<Option<f64>> = match source {
                DataSource::Mix { fractions, .. } => fractions.iter().map(|&f| Some(f)).collect(),
                _ => vec![None],
            };
            for &mix_fraction in &mixes {
                for &budget in &budgets {
                    for &suffix_start in &suffixes {
                        for reward in &self.rewards {
                            for algo in &self.offline_algos {
                                cells.push(Cell {
                                    experiment_id: self.experiment_id.clone(),
                                    env: self.env.clone(),
                                    preset: self.preset,
                                    source: source.clone(),
                                    mix_fraction,
                                    budget,
                                    suffix_start,
                                    reward: reward.clone(),
                                    offline_algo: algo.clone(),
                                    training_steps,
                                    eval_episodes,
                                });
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Run,
    Error,
}

/// One `(cell, seed)` outcome. Column order is the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRow {
    pub kind: RowKind,
    pub experiment_id: String,
    pub env: String,
    pub collector: String,
    pub dataset_hash: String,
    pub reward: String,
    pub offline_algo: String,
    pub seed: u64,
    pub budget: usize,
    pub mix_fraction: Option<f64>,
    pub suffix_start: Option<f64>,
    pub mean_return: Option<f64>,
    pub stderr: Option<f64>,
    pub wall_time: f64,
    pub error: String,
}

impl ResultRow {
    pub(crate) fn for_cell(cell: &Cell, seed: u64) -> Self {
        Self {
            kind: RowKind::Run,
            experiment_id: cell.experiment_id.clone(),
            env: cell.env.clone(),
            collector: cell.source.label(),
            dataset_hash: String::new(),
            reward: cell.reward.clone(),
            offline_algo: cell.offline_algo.clone(),
            seed,
            budget: cell.budget,
            mix_fraction: cell.mix_fraction,
            suffix_start: cell.suffix_start,
            mean_return: None,
            stderr: None,
            wall_time: 0.0,
            error: String::new(),
        }
    }
}

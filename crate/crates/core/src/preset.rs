use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Scale of a run. `Paper` uses the published hyperparameters; `Desk`
/// shrinks widths, batches, episodes and step counts for one workstation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Paper,
    #[default]
    Desk,
}

impl Preset {
    pub fn hidden_dim(self) -> usize {
        match self {
            Preset::Paper => 1024,
            Preset::Desk => 256,
        }
    }

    pub fn batch_size(self) -> usize {
        match self {
            Preset::Paper => 1024,
            Preset::Desk => 256,
        }
    }

    pub fn episode_length(self) -> usize {
        match self {
            Preset::Paper => 1000,
            Preset::Desk => 200,
        }
    }

    /// Collection budget in episodes.
    pub fn budget_episodes(self) -> usize {
        match self {
            Preset::Paper => 1000,
            Preset::Desk => 500,
        }
    }

    pub fn training_steps(self) -> usize {
        match self {
            Preset::Paper => 500_000,
            Preset::Desk => 50_000,
        }
    }

    pub fn eval_episodes(self) -> usize {
        10
    }

    pub fn seeds(self) -> usize {
        match self {
            Preset::Paper => 10,
            Preset::Desk => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            _ => Err(Error::Unknown {
                kind: "preset",
                id: s.to_string(),
            }),
        }
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datastore::{content_hash, encode, write_atomic, TransitionDataset};
use crate::error::{Error, Result};

/// Another dataset this one was derived from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub role: String,
    pub hash: String,
    pub episodes: usize,
}

/// JSON sidecar describing where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub env_id: String,
    pub algo_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub episodes: usize,
    pub transitions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_id: Option<String>,
    #[serde(default)]
    pub content_hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<SourceRef>,
    /// Per-episode origin tags for mixed datasets, e.g. `unsup:17`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
    /// Free-form description of the producing operation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
}

impl Manifest {
    pub fn for_dataset(dataset: &TransitionDataset, algo_id: impl Into<String>) -> Self {
        Self {
            env_id: dataset.env_id().to_string(),
            algo_id: algo_id.into(),
            episodes: dataset.n_episodes(),
            transitions: dataset.n_transitions(),
            ..Default::default()
        }
    }
}

pub fn manifest_path(dataset_path: &Path) -> PathBuf {
    dataset_path.with_extension("json")
}

/// Writes the dataset and its sidecar, filling in counts and content hash.
/// Returns the manifest as written.
pub fn save_with_manifest(dataset: &TransitionDataset, mut manifest: Manifest, path: &Path) -> Result<Manifest> {
    let bytes = encode(dataset);
    manifest.env_id = dataset.env_id().to_string();
    manifest.episodes = dataset.n_episodes();
    manifest.transitions = dataset.n_transitions();
    manifest.content_hash = content_hash(&bytes);
    write_atomic(path, &bytes)?;
    let json = serde_json::to_vec_pretty(&manifest)?;
    write_atomic(&manifest_path(path), &json)?;
    Ok(manifest)
}

pub fn load_manifest(dataset_path: &Path) -> Result<Manifest> {
    let path = manifest_path(dataset_path);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

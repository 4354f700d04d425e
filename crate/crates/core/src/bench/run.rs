use std::collections::HashMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use serde_json::json;

use crate::bench::{Cell, DataSource, ExperimentSpec, ResultRow, RowKind};
use crate::collector::{collect, CollectConfig};
use crate::datastore::{
    content_hash, decode, encode, load, load_manifest, mix, relabel, save_with_manifest, suffix_slice, Manifest,
    SourceRef, TransitionDataset,
};
use crate::envs::{make_env, reward_for};
use crate::error::{Error, Result};
use crate::nn::save_mlp;
use crate::offline::{evaluate, train, OfflineConfig};
use crate::preset::Preset;
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads; cells are independent so any width gives the same rows.
    pub jobs: usize,
    /// Dataset cache and agent checkpoints go here when set.
    pub out_dir: Option<PathBuf>,
    pub save_agents: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            out_dir: None,
            save_agents: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<ResultRow>,
    pub failures: usize,
    /// Datasets generated (as opposed to loaded from the cache directory).
    pub generated: usize,
}

#[derive(Debug)]
struct Cached {
    dataset: Arc<TransitionDataset>,
    hash: String,
}

type Slot = Arc<OnceLock<std::result::Result<Arc<Cached>, String>>>;

/// Content-addressed store keyed by a provenance description. Identical
/// concurrent requests wait on one generation.
#[derive(Debug, Default)]
struct DatasetCache {
    dir: Option<PathBuf>,
    slots: Mutex<HashMap<String, Slot>>,
    generated: AtomicUsize,
}

impl DatasetCache {
    fn get(
        &self,
        provenance: &serde_json::Value,
        make: impl FnOnce() -> Result<(TransitionDataset, Manifest)>,
    ) -> Result<Arc<Cached>> {
        let text = provenance.to_string();
        let key = content_hash(text.as_bytes());
        let slot = {
            let mut slots = self.slots.lock().unwrap_or_else(|p| p.into_inner());
            slots.entry(key.clone()).or_default().clone()
        };
        slot.get_or_init(|| self.load_or_make(&key, &text, make).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Config)
    }

    fn load_or_make(
        &self,
        key: &str,
        provenance: &str,
        make: impl FnOnce() -> Result<(TransitionDataset, Manifest)>,
    ) -> Result<Arc<Cached>> {
        let path = self.dir.as_ref().map(|d| d.join("cache").join(format!("{key}.exd")));
        if let Some(p) = path.as_ref().filter(|p| p.exists()) {
            if let Some(hit) = Self::try_load(p, provenance) {
                return Ok(Arc::new(hit));
            }
        }
        let (dataset, mut manifest) = make()?;
        self.generated.fetch_add(1, Ordering::Relaxed);
        let hash = content_hash(&encode(&dataset));
        if let Some(p) = path {
            manifest.operation = Some(provenance.to_string());
            save_with_manifest(&dataset, manifest, &p)?;
        }
        Ok(Arc::new(Cached {
            dataset: Arc::new(dataset),
            hash,
        }))
    }

    /// A cached file is used only if its manifest records the same provenance
    /// and its bytes still hash to the recorded value.
    fn try_load(path: &Path, provenance: &str) -> Option<Cached> {
        let manifest = load_manifest(path).ok()?;
        if manifest.operation.as_deref() != Some(provenance) {
            return None;
        }
        let bytes = std::fs::read(path).ok()?;
        let hash = content_hash(&bytes);
        if hash != manifest.content_hash {
            return None;
        }
        let dataset = decode(&bytes, path).ok()?;
        Some(Cached {
            dataset: Arc::new(dataset),
            hash,
        })
    }
}

/// What to collect for a cell or a standalone request.
#[derive(Debug, Clone, Copy)]
struct CollectRequest<'a> {
    env: &'a str,
    preset: Preset,
    budget: usize,
    algo: &'a str,
    data_task: Option<&'a str>,
    seed: u64,
}

fn collect_provenance(req: &CollectRequest, config: &CollectConfig) -> serde_json::Value {
    json!({
        "op": "collect",
        "env": req.env,
        "preset": req.preset,
        "episode_length": req.preset.episode_length(),
        "algo": req.algo,
        "data_task": req.data_task,
        "seed": req.seed,
        "budget": req.budget,
        "config": config,
    })
}

fn collected(cache: &DatasetCache, req: CollectRequest) -> Result<(Arc<Cached>, serde_json::Value)> {
    let CollectRequest {
        env,
        preset,
        budget,
        algo,
        data_task,
        seed,
    } = req;
    let mut config = CollectConfig::for_preset(algo, preset);
    config.budget_episodes = budget;
    config.data_task = data_task.map(str::to_string);
    let provenance = collect_provenance(&req, &config);
    let cached = cache.get(&provenance, || {
        let env = make_env(env, preset.episode_length())?;
        let label = match data_task {
            Some(t) => format!("{algo}[{t}]"),
            None => algo.to_string(),
        };
        let out = collect(env.as_ref(), &config, &Rng::new(seed).split("collect").split(&label))?;
        let mut manifest = Manifest::for_dataset(&out.dataset, algo);
        manifest.seed = Some(seed);
        manifest.preset = Some(preset.to_string());
        manifest.data_task = config.data_task.clone();
        Ok((out.dataset, manifest))
    })?;
    Ok((cached, provenance))
}

fn request<'a>(cell: &'a Cell, algo: &'a str, data_task: Option<&'a str>, seed: u64) -> CollectRequest<'a> {
    CollectRequest {
        env: &cell.env,
        preset: cell.preset,
        budget: cell.budget,
        algo,
        data_task,
        seed,
    }
}

/// Collects the same dataset a bench cell with these settings would use,
/// reusing `cache_dir/cache` when given.
pub fn collect_cached(
    env: &str,
    preset: Preset,
    algo: &str,
    data_task: Option<&str>,
    budget: usize,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<Arc<TransitionDataset>> {
    if let Some(dir) = cache_dir {
        std::fs::create_dir_all(dir.join("cache")).map_err(|e| Error::io(dir, e))?;
    }
    let cache = DatasetCache {
        dir: cache_dir.map(Path::to_path_buf),
        ..Default::default()
    };
    let req = CollectRequest {
        env,
        preset,
        budget,
        algo,
        data_task,
        seed,
    };
    Ok(collected(&cache, req)?.0.dataset.clone())
}

fn source_dataset(cache: &DatasetCache, cell: &Cell, seed: u64) -> Result<Arc<Cached>> {
    match &cell.source {
        DataSource::Collect { algo, data_task } => Ok(collected(cache, request(cell, algo, data_task.as_deref(), seed))?.0),
        DataSource::File { path } => {
            let provenance = json!({ "op": "file", "path": path });
            let p = PathBuf::from(path);
            let cached = cache.get(&provenance, || {
                let ds = load(&p)?;
                let manifest = Manifest::for_dataset(&ds, "file");
                Ok((ds, manifest))
            })?;
            if cached.dataset.env_id() != cell.env {
                return Err(Error::Config(format!(
                    "dataset {path} is for {} not {}",
                    cached.dataset.env_id(),
                    cell.env
                )));
            }
            Ok(cached)
        }
        DataSource::Mix {
            supervised_task,
            unsupervised_algo,
            ..
        } => {
            let fraction = cell
                .mix_fraction
                .ok_or_else(|| Error::Config("mix cell without a fraction".into()))?;
            let (sup, sup_prov) = collected(cache, request(cell, "supervised", Some(supervised_task), seed))?;
            let (unsup, unsup_prov) = collected(cache, request(cell, unsupervised_algo, None, seed))?;
            let provenance = json!({
                "op": "mix",
                "supervised": sup_prov,
                "unsupervised": unsup_prov,
                "fraction": fraction,
                "episodes": cell.budget,
                "seed": seed,
            });
            cache.get(&provenance, || {
                let mixed = mix(
                    &sup.dataset,
                    &unsup.dataset,
                    fraction,
                    cell.budget,
                    &mut Rng::new(seed).split("mix"),
                )?;
                let mut manifest = Manifest::for_dataset(&mixed.dataset, "mix");
                manifest.seed = Some(seed);
                manifest.sources = vec![
                    SourceRef {
                        role: "supervised".into(),
                        hash: sup.hash.clone(),
                        episodes: sup.dataset.n_episodes(),
                    },
                    SourceRef {
                        role: "unsupervised".into(),
                        hash: unsup.hash.clone(),
                        episodes: unsup.dataset.n_episodes(),
                    },
                ];
                manifest.provenance = mixed.provenance.iter().map(|o| o.tag()).collect();
                Ok((mixed.dataset, manifest))
            })
        }
    }
}

fn run_cell(cache: &DatasetCache, cell: &Cell, seed: u64, agent_path: Option<&Path>, row: &mut ResultRow) -> Result<()> {
    let source = source_dataset(cache, cell, seed)?;
    let data = match cell.suffix_start {
        Some(f) => suffix_slice(&source.dataset, f)?,
        None => (*source.dataset).clone(),
    };
    row.dataset_hash = if cell.suffix_start.is_some() {
        content_hash(&encode(&data))
    } else {
        source.hash.clone()
    };
    let reward = reward_for(&cell.env, &cell.reward)?;
    let labeled = relabel(&data, reward.as_ref())?;

    let mut config = OfflineConfig::for_preset(&cell.offline_algo, cell.preset);
    config.training_steps = cell.training_steps;
    let root = Rng::new(seed).split(&cell.key());
    let agent = train(&labeled, &config, &root.split("train"))?;
    if let Some(p) = agent_path {
        save_mlp(&agent.ac.actor, p)?;
    }
    let env = make_env(&cell.env, cell.preset.episode_length())?;
    let result = evaluate(&agent, env.as_ref(), reward.as_ref(), cell.eval_episodes, &root.split("eval"))?;
    row.mean_return = Some(result.mean_return);
    row.stderr = Some(result.stderr);
    Ok(())
}

fn agent_file(dir: &Path, cell_index: usize, cell: &Cell, seed: u64) -> PathBuf {
    let id: String = cell
        .experiment_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '-' })
        .collect();
    dir.join("agents").join(format!("{id}-{cell_index:04}-s{seed}.exnn"))
}

/// Runs every `(cell, seed)` of every spec. Failing cells become error rows;
/// their siblings still run.
pub fn run_experiments(specs: &[ExperimentSpec], options: &RunOptions) -> Result<RunReport> {
    let mut tasks = Vec::new();
    for spec in specs {
        spec.validate()?;
        for (ci, cell) in spec.cells().into_iter().enumerate() {
            for &seed in &spec.seeds {
                tasks.push((ci, cell.clone(), seed));
            }
        }
    }
    if let Some(dir) = &options.out_dir {
        std::fs::create_dir_all(dir.join("cache")).map_err(|e| Error::io(dir, e))?;
        if options.save_agents {
            std::fs::create_dir_all(dir.join("agents")).map_err(|e| Error::io(dir, e))?;
        }
    }
    let cache = DatasetCache {
        dir: options.out_dir.clone(),
        ..Default::default()
    };
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<ResultRow>>> = Mutex::new(vec![None; tasks.len()]);
    let workers = options.jobs.clamp(1, tasks.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((ci, cell, seed)) = tasks.get(i) else {
                    break;
                };
                let mut row = ResultRow::for_cell(cell, *seed);
                let agent_path = options
                    .out_dir
                    .as_ref()
                    .filter(|_| options.save_agents)
                    .map(|d| agent_file(d, *ci, cell, *seed));
                let start = Instant::now();
                let outcome = catch_unwind(AssertUnwindSafe(|| {
                    run_cell(&cache, cell, *seed, agent_path.as_deref(), &mut row)
                }));
                row.wall_time = start.elapsed().as_secs_f64();
                let err = match outcome {
                    Ok(Ok(())) => None,
                    Ok(Err(e)) => Some(e.to_string()),
                    Err(_) => Some("cell panicked".to_string()),
                };
                if let Some(e) = err {
                    row.kind = RowKind::Error;
                    row.mean_return = None;
                    row.stderr = None;
                    row.error = e;
                }
                results.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(row);
            });
        }
    });
    let rows: Vec<ResultRow> = results
        .into_inner()
        .unwrap_or_else(|p| p.into_inner())
        .into_iter()
        .flatten()
        .collect();
    let failures = rows.iter().filter(|r| r.kind == RowKind::Error).count();
    Ok(RunReport {
        rows,
        failures,
        generated: cache.generated.load(Ordering::Relaxed),
    })
}

pub fn run_experiment(spec: &ExperimentSpec, options: &RunOptions) -> Result<RunReport> {
    run_experiments(std::slice::from_ref(spec), options)
}

/// Writes rows with a header, even when there are none.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(super::aggregate::RESULT_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(Path::new("<csv>"), e))?;
    Ok(())
}

use std::fs::File;
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use exorl::bench::{aggregate_csv, recipe, run_experiments, write_results_csv, ExperimentSpec, RunOptions};
use exorl::collector::{collect, CollectConfig};
use exorl::datastore::{
    content_hash, encode, load, load_manifest, mix, relabel, save_with_manifest, suffix_slice, Manifest, SourceRef,
    TransitionDataset,
};
use exorl::envs::{make_env, reward_for};
use exorl::nn::load_mlp;
use exorl::offline::{evaluate, save_agent, train_with_hook, OfflineConfig};
use exorl::{Preset, Rng};

#[derive(Parser)]
#[command(name = "exorl", version, about = "Collect reward-free data, relabel it, and train offline agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Supervised,
    Semi,
}

#[derive(Subcommand)]
enum Command {
    /// Run an exploration agent and store every transition.
    Collect {
        #[arg(long)]
        env: String,
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "desk")]
        preset: Preset,
        #[arg(long)]
        out: PathBuf,
        /// Extrinsic task for supervised collection.
        #[arg(long)]
        data_task: Option<String>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Attach rewards computed by a reward function.
    Relabel {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        reward: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mix whole episodes from a supervised and an unsupervised dataset.
    Mix {
        #[arg(long)]
        sup: PathBuf,
        #[arg(long)]
        unsup: PathBuf,
        /// Fraction of episodes taken from the unsupervised dataset.
        #[arg(long)]
        fraction: f64,
        #[arg(long)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep the episodes from a start fraction onward.
    Slice {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an offline agent; writes final.exnn and eval.csv into --out.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        reward: String,
        #[arg(long)]
        algo: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "desk")]
        preset: Preset,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the preset's gradient steps.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        eval_episodes: Option<usize>,
    },
    /// Roll out a saved actor and report its mean return.
    Eval {
        #[arg(long)]
        agent: PathBuf,
        #[arg(long)]
        env: String,
        #[arg(long)]
        reward: String,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "desk")]
        preset: Preset,
    },
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Run a built-in recipe or a JSON spec; writes raw.csv into --out.
    Run {
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        recipe: Option<String>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value = "desk")]
        preset: Preset,
        /// Number of seeds (1..=N); defaults to the preset's.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        eval_episodes: Option<usize>,
        #[arg(long)]
        save_agents: bool,
    },
    /// Per-cell mean and standard error, printed as CSV.
    Aggregate { raw: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn source_ref(role: &str, path: &Path, ds: &TransitionDataset) -> SourceRef {
    let hash = load_manifest(path)
        .map(|m| m.content_hash)
        .unwrap_or_else(|_| content_hash(&encode(ds)));
    SourceRef {
        role: role.to_string(),
        hash,
        episodes: ds.n_episodes(),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Collect {
            env,
            algo,
            episodes,
            seed,
            preset,
            out,
            data_task,
            mode,
        } => {
            let algo = match (mode, algo) {
                (Some(Mode::Supervised), None) => "supervised".to_string(),
                (Some(Mode::Semi), None) => "semi_supervised".to_string(),
                (None, Some(a)) => a,
                (None, None) => bail!("one of --algo or --mode is required"),
                (Some(_), Some(_)) => bail!("--algo and --mode are mutually exclusive"),
            };
            let environment = make_env(&env, preset.episode_length())?;
            let mut config = CollectConfig::for_preset(&algo, preset);
            if let Some(n) = episodes {
                config.budget_episodes = n;
            }
            config.data_task = data_task;
            let collected = collect(environment.as_ref(), &config, &Rng::new(seed))?;
            let mut manifest = Manifest::for_dataset(&collected.dataset, &algo);
            manifest.seed = Some(seed);
            manifest.preset = Some(preset.to_string());
            manifest.data_task = config.data_task.clone();
            let m = save_with_manifest(&collected.dataset, manifest, &out)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::Relabel { input, reward, out } => {
            let ds = load(&input)?;
            let r = reward_for(ds.env_id(), &reward)?;
            let labeled = relabel(&ds, r.as_ref())?;
            let mut manifest = load_manifest(&input).unwrap_or_else(|_| Manifest::for_dataset(&ds, "unknown"));
            manifest.reward_id = Some(reward.clone());
            manifest.sources = vec![source_ref("input", &input, &ds)];
            manifest.operation = Some(format!("relabel {reward}"));
            let m = save_with_manifest(&labeled, manifest, &out)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::Mix {
            sup,
            unsup,
            fraction,
            episodes,
            seed,
            out,
        } => {
            let s = load(&sup)?;
            let u = load(&unsup)?;
            let mixed = mix(&s, &u, fraction, episodes, &mut Rng::new(seed))?;
            let mut manifest = Manifest::for_dataset(&mixed.dataset, "mix");
            manifest.seed = Some(seed);
            manifest.sources = vec![source_ref("supervised", &sup, &s), source_ref("unsupervised", &unsup, &u)];
            manifest.provenance = mixed.provenance.iter().map(|o| o.tag()).collect();
            manifest.operation = Some(format!("mix fraction={fraction}"));
            let m = save_with_manifest(&mixed.dataset, manifest, &out)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::Slice { input, start, out } => {
            let ds = load(&input)?;
            let sliced = suffix_slice(&ds, start)?;
            let mut manifest = load_manifest(&input).unwrap_or_else(|_| Manifest::for_dataset(&ds, "unknown"));
            manifest.sources = vec![source_ref("input", &input, &ds)];
            manifest.provenance.clear();
            manifest.operation = Some(format!("suffix start={start}"));
            let m = save_with_manifest(&sliced, manifest, &out)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::Train {
            data,
            reward,
            algo,
            seed,
            preset,
            out,
            steps,
            eval_episodes,
        } => {
            let ds = load(&data)?;
            let r = reward_for(ds.env_id(), &reward)?;
            let labeled = relabel(&ds, r.as_ref())?;
            let mut config = OfflineConfig::for_preset(&algo, preset);
            if let Some(s) = steps {
                config.training_steps = s;
            }
            let env = make_env(ds.env_id(), preset.episode_length())?;
            let n_eval = eval_episodes.unwrap_or(preset.eval_episodes());
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut csv = csv::Writer::from_writer(BufWriter::new(File::create(out.join("eval.csv"))?));
            csv.write_record([
                "run_id",
                "algo",
                "dataset",
                "reward",
                "step",
                "mean_return",
                "stderr",
                "seed",
                "critic_loss",
                "actor_loss",
            ])?;
            let run_id = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let dataset = data.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let root = Rng::new(seed);
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let agent = train_with_hook(&labeled, &config, &root.split("train"), |step, agent, losses| {
                let res = evaluate(agent, env.as_ref(), r.as_ref(), n_eval, &root.split("eval"))?;
                csv.write_record([
                    run_id.clone(),
                    algo.clone(),
                    dataset.clone(),
                    reward.clone(),
                    step.to_string(),
                    res.mean_return.to_string(),
                    res.stderr.to_string(),
                    seed.to_string(),
                    fmt(losses.critic),
                    fmt(losses.actor),
                ])?;
                eprintln!("step {step}: return {:.3} ± {:.3}", res.mean_return, res.stderr);
                Ok(())
            })?;
            csv.flush()?;
            save_agent(&agent, &out.join("final.exnn"))?;
        }
        Command::Eval {
            agent,
            env,
            reward,
            episodes,
            seed,
            preset,
        } => {
            let actor = load_mlp(&agent)?;
            let environment = make_env(&env, preset.episode_length())?;
            let r = reward_for(&env, &reward)?;
            let res = evaluate(&actor, environment.as_ref(), r.as_ref(), episodes, &Rng::new(seed).split("eval"))?;
            println!("mean_return,stderr,episodes");
            println!("{},{},{}", res.mean_return, res.stderr, res.returns.len());
        }
        Command::Bench { command } => match command {
            BenchCommand::Run {
                recipe: recipe_id,
                spec,
                preset,
                seeds,
                jobs,
                out,
                steps,
                eval_episodes,
                save_agents,
            } => {
                let seed_list: Vec<u64> = (1..=seeds.unwrap_or(preset.seeds() as u64)).collect();
                let mut specs = match (recipe_id, spec) {
                    (Some(id), _) => recipe(&id, preset, &seed_list)?,
                    (None, Some(path)) => {
                        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                        vec![ExperimentSpec::from_json(&text)?]
                    }
                    (None, None) => bail!("one of --recipe or --spec is required"),
                };
                for s in &mut specs {
                    if steps.is_some() {
                        s.training_steps = steps;
                    }
                    if eval_episodes.is_some() {
                        s.eval_episodes = eval_episodes;
                    }
                }
                let options = RunOptions {
                    jobs,
                    out_dir: Some(out.clone()),
                    save_agents,
                };
                let report = run_experiments(&specs, &options)?;
                let raw = out.join("raw.csv");
                write_results_csv(&report.rows, BufWriter::new(File::create(&raw)?))?;
                eprintln!(
                    "{} rows, {} failed, {} datasets generated -> {}",
                    report.rows.len(),
                    report.failures,
                    report.generated,
                    raw.display()
                );
                if report.failures > 0 {
                    return Ok(ExitCode::FAILURE);
                }
            }
            BenchCommand::Aggregate { raw } => {
                let f = File::open(&raw).with_context(|| format!("opening {}", raw.display()))?;
                aggregate_csv(BufReader::new(f), io::stdout().lock())?;
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

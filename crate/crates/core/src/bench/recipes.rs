use crate::bench::{DataSource, ExperimentSpec};
use crate::envs::{rewards_for_env, CARTPOLE, POINTMASS_MAZE};
use crate::error::{Error, Result};
use crate::preset::Preset;

const UNSUPERVISED: &[&str] = &["random", "icm", "disagreement", "rnd", "apt", "diayn", "aps"];
const DATA_TASK: &str = "reach_top_right";
const TRANSFER_TASK: &str = "reach_bottom_left";

pub fn recipe_ids() -> Vec<&'static str> {
    vec![
        "q1_single_task",
        "q2_multitask_maze",
        "q3_supervision",
        "q4_mixing",
        "q5_scaling",
        "appendix_suffix",
    ]
}

fn collect(algo: &str) -> DataSource {
    DataSource::Collect {
        algo: algo.to_string(),
        data_task: None,
    }
}

fn supervised(algo: &str, task: &str) -> DataSource {
    DataSource::Collect {
        algo: algo.to_string(),
        data_task: Some(task.to_string()),
    }
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn base(id: &str, env: &str, preset: Preset, seeds: &[u64]) -> ExperimentSpec {
    ExperimentSpec {
        experiment_id: id.to_string(),
        env: env.to_string(),
        preset,
        sources: Vec::new(),
        rewards: Vec::new(),
        offline_algos: strings(&["td3"]),
        seeds: seeds.to_vec(),
        budgets: Vec::new(),
        suffix_fractions: Vec::new(),
        training_steps: None,
        eval_episodes: None,
    }
}

/// Scales a desk budget (in episodes) to the preset.
fn budget(preset: Preset, desk: usize) -> usize {
    desk * preset.budget_episodes() / Preset::Desk.budget_episodes()
}

/// Built-in experiment grids.
pub fn recipe(id: &str, preset: Preset, seeds: &[u64]) -> Result<Vec<ExperimentSpec>> {
    let maze_goals = strings(&rewards_for_env(POINTMASS_MAZE));
    let specs = match id {
        "q1_single_task" => [POINTMASS_MAZE, CARTPOLE]
            .iter()
            .map(|&env| ExperimentSpec {
                sources: UNSUPERVISED.iter().map(|a| collect(a)).collect(),
                rewards: strings(&rewards_for_env(env)),
                offline_algos: strings(&["bc", "td3", "td3bc", "crr", "cql"]),
                ..base(id, env, preset, seeds)
            })
            .collect(),
        "q2_multitask_maze" => vec![ExperimentSpec {
            sources: vec![collect("rnd")],
            rewards: maze_goals,
            ..base(id, POINTMASS_MAZE, preset, seeds)
        }],
        "q3_supervision" => vec![
            ExperimentSpec {
                sources: vec![
                    supervised("supervised", DATA_TASK),
                    supervised("semi_supervised", DATA_TASK),
                    collect("rnd"),
                ],
                rewards: strings(&[DATA_TASK, TRANSFER_TASK]),
                ..base(id, POINTMASS_MAZE, preset, seeds)
            },
            ExperimentSpec {
                sources: vec![
                    supervised("supervised", "swingup"),
                    supervised("semi_supervised", "swingup"),
                    collect("rnd"),
                ],
                rewards: strings(&["swingup"]),
                ..base(id, CARTPOLE, preset, seeds)
            },
        ],
        "q4_mixing" => vec![ExperimentSpec {
            sources: vec![DataSource::Mix {
                supervised_task: DATA_TASK.to_string(),
                unsupervised_algo: "rnd".to_string(),
                fractions: vec![0.0, 0.1, 0.25, 0.5, 1.0],
            }],
            rewards: strings(&[DATA_TASK, TRANSFER_TASK]),
            ..base(id, POINTMASS_MAZE, preset, seeds)
        }],
        "q5_scaling" => vec![ExperimentSpec {
            sources: vec![collect("icm")],
            rewards: maze_goals,
            budgets: [50, 100, 200, 500].iter().map(|&b| budget(preset, b)).collect(),
            ..base(id, POINTMASS_MAZE, preset, seeds)
        }],
        "appendix_suffix" => vec![ExperimentSpec {
            sources: vec![collect("icm")],
            rewards: maze_goals,
            suffix_fractions: vec![0.0, 0.25, 0.5, 0.75, 0.9],
            ..base(id, POINTMASS_MAZE, preset, seeds)
        }],
        other => {
            return Err(Error::Unknown {
                kind: "recipe",
                id: other.to_string(),
            })
        }
    };
    Ok(specs)
}

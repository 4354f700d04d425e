//! Experiment grids: each cell runs collect → relabel → train → evaluate and
//! produces one CSV row per seed.

mod aggregate;
mod recipes;
mod run;
mod spec;

pub use aggregate::{aggregate, aggregate_csv, SummaryRow};
pub use recipes::{recipe, recipe_ids};
pub use run::{collect_cached, run_experiment, run_experiments, write_results_csv, RunOptions, RunReport};
pub use spec::{Cell, DataSource, ExperimentSpec, ResultRow, RowKind};

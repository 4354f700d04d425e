use std::path::Path;

use crate::datastore::TransitionDataset;
use crate::envs::POINTMASS_MAZE;
use crate::error::{Error, Result};

/// Visit counts of next-state positions on an `n x n` grid over the arena.
/// `counts[row * n + col]`, row indexing y and col indexing x, both from −1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    pub n: usize,
    pub counts: Vec<u64>,
}

impl OccupancyGrid {
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.n + col]
    }

    pub fn nonzero_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub(crate) fn cell_index(v: f64, n: usize) -> usize {
    let i = ((v + 1.0) / 2.0 * n as f64).floor();
    (i.max(0.0) as usize).min(n - 1)
}

pub fn maze_occupancy(dataset: &TransitionDataset, grid_n: usize) -> Result<OccupancyGrid> {
    if dataset.env_id() != POINTMASS_MAZE {
        return Err(Error::Config(format!(
            "occupancy needs a {POINTMASS_MAZE} dataset, got {}",
            dataset.env_id()
        )));
    }
    if grid_n == 0 {
        return Err(Error::Config("grid size must be positive".into()));
    }
    let mut counts = vec![0u64; grid_n * grid_n];
    for ep in dataset.episodes() {
        for t in 0..ep.len() {
            let s = ep.next_observation(t);
            counts[cell_index(s[1], grid_n) * grid_n + cell_index(s[0], grid_n)] += 1;
        }
    }
    Ok(OccupancyGrid { n: grid_n, counts })
}

/// CSV with header `row,col,count`, one line per cell.
pub fn write_occupancy_csv(grid: &OccupancyGrid, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "col", "count"])?;
    for row in 0..grid.n {
        for col in 0..grid.n {
            w.write_record([row.to_string(), col.to_string(), grid.get(row, col).to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bench::{ResultRow, RowKind};
use crate::error::{Error, Result};
use crate::offline::mean_and_stderr;

pub(crate) const RESULT_COLUMNS: &[&str] = &[
    "kind",
    "experiment_id",
    "env",
    "collector",
    "dataset_hash",
    "reward",
    "offline_algo",
    "seed",
    "budget",
    "mix_fraction",
    "suffix_start",
    "mean_return",
    "stderr",
    "wall_time",
    "error",
];

/// Per-cell statistics over seeds. `rank` orders cells sharing
/// `(experiment_id, env, reward)` by mean return, 1 = best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub kind: String,
    pub experiment_id: String,
    pub env: String,
    pub collector: String,
    pub reward: String,
    pub offline_algo: String,
    pub budget: usize,
    pub mix_fraction: Option<f64>,
    pub suffix_start: Option<f64>,
    pub n: usize,
    pub failed: usize,
    pub mean_return: Option<f64>,
    pub stderr: Option<f64>,
    pub rank: Option<usize>,
}

type GroupKey = (String, String, String, String, String, usize, Option<u64>, Option<u64>);

fn group_key(r: &ResultRow) -> GroupKey {
    (
        r.experiment_id.clone(),
        r.env.clone(),
        r.reward.clone(),
        r.collector.clone(),
        r.offline_algo.clone(),
        r.budget,
        r.mix_fraction.map(f64::to_bits),
        r.suffix_start.map(f64::to_bits),
    )
}

/// Seed returns, error count and a representative row.
type Group<'a> = (Vec<(u64, f64)>, usize, &'a ResultRow);

/// Groups rows by cell. The result does not depend on row order.
pub fn aggregate(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    let mut groups: BTreeMap<GroupKey, Group> = BTreeMap::new();
    for r in rows {
        let entry = groups.entry(group_key(r)).or_insert((Vec::new(), 0, r));
        match (r.kind, r.mean_return) {
            (RowKind::Run, Some(v)) => entry.0.push((r.seed, v)),
            (RowKind::Run, None) => {
                return Err(Error::Config(format!(
                    "run row for seed {} has no mean_return",
                    r.seed
                )))
            }
            (RowKind::Error, _) => entry.1 += 1,
        }
    }
    let mut out: Vec<SummaryRow> = groups
        .into_values()
        .map(|(mut values, failed, r)| {
            values.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let v: Vec<f64> = values.iter().map(|x| x.1).collect();
            let (mean, stderr) = if v.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_and_stderr(&v);
                (Some(m), Some(s))
            };
            SummaryRow {
                kind: "summary".into(),
                experiment_id: r.experiment_id.clone(),
                env: r.env.clone(),
                collector: r.collector.clone(),
                reward: r.reward.clone(),
                offline_algo: r.offline_algo.clone(),
                budget: r.budget,
                mix_fraction: r.mix_fraction,
                suffix_start: r.suffix_start,
                n: v.len(),
                failed,
                mean_return: mean,
                stderr,
                rank: None,
            }
        })
        .collect();

    let mut by_table: BTreeMap<(String, String, String), Vec<usize>> = BTreeMap::new();
    for (i, s) in out.iter().enumerate() {
        if s.mean_return.is_some() {
            by_table
                .entry((s.experiment_id.clone(), s.env.clone(), s.reward.clone()))
                .or_default()
                .push(i);
        }
    }
    for idx in by_table.into_values() {
        let mut sorted = idx;
        // Stable sort keeps key order among ties.
        sorted.sort_by(|&a, &b| out[b].mean_return.unwrap().total_cmp(&out[a].mean_return.unwrap()));
        for (rank, i) in sorted.into_iter().enumerate() {
            out[i].rank = Some(rank + 1);
        }
    }
    Ok(out)
}

/// Reads a results CSV and writes the summary CSV.
pub fn aggregate_csv<R: Read, W: Write>(input: R, output: W) -> Result<()> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(RESULT_COLUMNS.iter().copied()) {
        return Err(Error::Config(format!(
            "unexpected results header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let rows = reader
        .deserialize::<ResultRow>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let summary = aggregate(&rows)?;
    let mut w = csv::Writer::from_writer(output);
    for s in &summary {
        w.serialize(s)?;
    }
    if summary.is_empty() {
        w.write_record([
            "kind",
            "experiment_id",
            "env",
            "collector",
            "reward",
            "offline_algo",
            "budget",
            "mix_fraction",
            "suffix_start",
            "n",
            "failed",
            "mean_return",
            "stderr",
            "rank",
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

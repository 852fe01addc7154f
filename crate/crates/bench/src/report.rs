//! CSV rendering of run records, summaries and pairwise tests.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::{ExperimentConfig, Method};
use crate::error::{io_err, BenchError, Result};
use crate::runner::{Metric, RunRecord};
use crate::stats::{summarize, wilcoxon_rank_sum, Summary};

pub const RUNS_HEADER: [&str; 11] = [
    "method",
    "rep",
    "seed",
    "architecture",
    "evaluations",
    "test_mae",
    "test_mse",
    "test_mape",
    "optimization_seconds",
    "training_seconds",
    "total_seconds",
];

/// The `#` comment line heading every output file.
pub fn header_line(cfg: &ExperimentConfig) -> String {
    header_with_hash(&cfg.hash())
}

fn header_with_hash(hash: &str) -> String {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# config_hash={hash} timestamp={now}")
}

/// Records grouped by method, in method order.
pub fn by_method(records: &[RunRecord]) -> BTreeMap<Method, Vec<&RunRecord>> {
    let mut groups: BTreeMap<Method, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.method).or_default().push(r);
    }
    groups
}

/// Values of `metric` within one group; `None` when any run lacks it.
pub fn metric_values(group: &[&RunRecord], metric: Metric) -> Option<Vec<f64>> {
    group.iter().map(|r| r.metric(metric)).collect()
}

/// Summaries per method: the three metrics, then total time in minutes.
pub fn summary_table(records: &[RunRecord]) -> Result<Vec<(Method, [Option<Summary>; 4])>> {
    by_method(records)
        .into_iter()
        .map(|(method, group)| {
            let metric = |m| metric_values(&group, m).map(|v| summarize(&v)).transpose();
            let minutes: Vec<f64> = group.iter().map(|r| r.total_seconds / 60.0).collect();
            Ok((
                method,
                [
                    metric(Metric::Mae)?,
                    metric(Metric::Mse)?,
                    metric(Metric::Mape)?,
                    Some(summarize(&minutes)?),
                ],
            ))
        })
        .collect()
}

/// Two-sided p-values for every pair of methods on `metric`.
pub fn pairwise_tests(records: &[RunRecord], metric: Metric) -> Result<Vec<(Method, Method, f64)>> {
    let groups: Vec<_> = by_method(records).into_iter().collect();
    let mut out = Vec::new();
    for (i, (ma, ga)) in groups.iter().enumerate() {
        for (mb, gb) in &groups[i + 1..] {
            if let (Some(a), Some(b)) = (metric_values(ga, metric), metric_values(gb, metric)) {
                out.push((*ma, *mb, wilcoxon_rank_sum(&a, &b)?));
            }
        }
    }
    Ok(out)
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut file = File::create(path).map_err(io_err(path))?;
    writeln!(file, "{header}").map_err(io_err(path))?;
    let mut out = csv::Writer::from_writer(file);
    for row in rows {
        out.write_record(row).map_err(|source| BenchError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    out.flush().map_err(io_err(path))
}

fn summary_fields(s: Option<Summary>) -> Vec<String> {
    match s {
        Some(s) => [s.mean, s.median, s.max, s.min, s.sd]
            .iter()
            .map(|v| format!("{v:?}"))
            .collect(),
        None => vec!["NA".into(); 5],
    }
}

/// Writes `runs.csv`, `summary.csv` and `tests.csv` into `dir`.
///
/// Apart from the timestamp in the header line the output depends only on
/// `records` and `config_hash`.
pub fn emit_report(records: &[RunRecord], config_hash: &str, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let header = header_with_hash(config_hash);

    let mut runs = vec![RUNS_HEADER
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()];
    runs.extend(records.iter().map(RunRecord::csv_fields));
    write_csv(&dir.join("runs.csv"), &header, &runs)?;

    let mut columns = vec!["method".to_string(), "n".to_string()];
    for prefix in ["mae", "mse", "mape", "time_min"] {
        for stat in ["mean", "median", "max", "min", "sd"] {
            columns.push(format!("{prefix}_{stat}"));
        }
    }
    let mut summary = vec![columns];
    for (method, stats) in summary_table(records)? {
        let n = stats[3].map_or(0, |s| s.n);
        let mut row = vec![method.to_string(), n.to_string()];
        for s in stats {
            row.extend(summary_fields(s));
        }
        summary.push(row);
    }
    write_csv(&dir.join("summary.csv"), &header, &summary)?;

    let mut tests = vec![["metric", "method_a", "method_b", "p_value"]
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()];
    for metric in Metric::ALL {
        for (a, b, p) in pairwise_tests(records, metric)? {
            tests.push(vec![
                metric.name().into(),
                a.to_string(),
                b.to_string(),
                format!("{p:?}"),
            ]);
        }
    }
    write_csv(&dir.join("tests.csv"), &header, &tests)
}

/// Reads a `runs.csv` written by [`emit_report`] or an experiment in progress.
pub fn read_runs(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err)?;
    let bad = |row: usize, what: &str| BenchError::Config {
        path: path.to_path_buf(),
        message: format!("row {row}: bad {what}"),
    };
    let mut records = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let row_no = k + 1;
        if row.len() != RUNS_HEADER.len() {
            return Err(bad(row_no, "column count"));
        }
        let num =
            |i: usize| -> Result<f64> { row[i].parse().map_err(|_| bad(row_no, RUNS_HEADER[i])) };
        records.push(RunRecord {
            method: row[0].parse()?,
            rep: row[1].parse().map_err(|_| bad(row_no, "rep"))?,
            seed: row[2].parse().map_err(|_| bad(row_no, "seed"))?,
            architecture: row[3].parse()?,
            evaluations: row[4].parse().map_err(|_| bad(row_no, "evaluations"))?,
            test_mae: num(5)?,
            test_mse: num(6)?,
            test_mape: if &row[7] == "NA" { None } else { Some(num(7)?) },
            optimization_seconds: num(8)?,
            training_seconds: num(9)?,
            total_seconds: num(10)?,
        });
    }
    Ok(records)
}

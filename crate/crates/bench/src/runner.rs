use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use resn::data::{window, Segment, TimeSeriesDataset};
use resn::evolve::{run_random_search, run_resn, train_champion, Evaluator, GenerationLog};
use resn::rnn::{predict_series, write_champion, Architecture, WeightVector};
use resn::train::{mae, mape, mse};

use crate::config::{ExperimentConfig, Method};
use crate::error::{io_err, BenchError, Result};
use crate::report::{header_line, RUNS_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Mae,
    Mse,
    Mape,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Mae, Metric::Mse, Metric::Mape];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mae => "mae",
            Metric::Mse => "mse",
            Metric::Mape => "mape",
        }
    }
}

impl FromStr for Metric {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| BenchError::InvalidArgument(format!("unknown metric {s:?}")))
    }
}

/// Outcome of one method × repetition.
///
/// MAE and MSE are on the normalized scale; MAPE is on the raw scale and absent
/// when a raw test target is zero up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: Method,
    pub rep: usize,
    pub seed: u64,
    pub architecture: Architecture,
    pub evaluations: usize,
    pub test_mae: f64,
    pub test_mse: f64,
    pub test_mape: Option<f64>,
    pub optimization_seconds: f64,
    pub training_seconds: f64,
    pub total_seconds: f64,
}

impl RunRecord {
    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Mae => Some(self.test_mae),
            Metric::Mse => Some(self.test_mse),
            Metric::Mape => self.test_mape,
        }
    }

    pub(crate) fn csv_fields(&self) -> Vec<String> {
        vec![
            self.method.to_string(),
            self.rep.to_string(),
            self.seed.to_string(),
            self.architecture.to_string(),
            self.evaluations.to_string(),
            format!("{:?}", self.test_mae),
            format!("{:?}", self.test_mse),
            self.test_mape
                .map_or_else(|| "NA".to_string(), |v| format!("{v:?}")),
            format!("{:?}", self.optimization_seconds),
            format!("{:?}", self.training_seconds),
            format!("{:?}", self.total_seconds),
        ]
    }
}

/// A finished run together with what it produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub weights: WeightVector,
    /// Per-generation log; empty for random search.
    pub log: Vec<GenerationLog>,
}

/// Executes `method` once with seed `cfg.base_seed + rep`.
pub fn run_single(
    cfg: &ExperimentConfig,
    dataset: &TimeSeriesDataset,
    method: Method,
    rep: usize,
) -> Result<RunOutput> {
    let start = Instant::now();
    let seed = cfg.base_seed + rep as u64;
    let ea = cfg.ea_for(method, seed);
    let (champion, report, log, evaluations, optimization_seconds) = match method {
        Method::Resn | Method::Gdet => {
            let out = run_resn(&cfg.search_space, &ea, dataset, &cfg.mrs, &cfg.adam)?;
            (
                out.best,
                out.report,
                out.log,
                out.evaluations,
                out.optimization_seconds,
            )
        }
        Method::Random => {
            let mut evaluator = Evaluator::new(dataset, ea.fitness_kind, &cfg.mrs, &cfg.adam, &ea)?;
            let best =
                run_random_search(&cfg.search_space, ea.max_evaluations, seed, &mut evaluator)?;
            let optimization_seconds = start.elapsed().as_secs_f64();
            let report = train_champion(&best, dataset, &ea, &cfg.mrs, &cfg.adam)?;
            (
                best,
                report,
                Vec::new(),
                evaluator.evaluations(),
                optimization_seconds,
            )
        }
    };

    let arch = champion.arch;
    let test = window(dataset, arch.look_back(), Segment::Test)?;
    let predictions = predict_series(&arch, &report.final_weights, &test)?;
    let raw_targets: Vec<f64> = test
        .targets()
        .iter()
        .map(|&v| dataset.denormalize(v))
        .collect();
    let raw_predictions: Vec<f64> = predictions
        .iter()
        .map(|&v| dataset.denormalize(v))
        .collect();
    // values this close to zero are rounding residue (e.g. sin(π)), not data
    let scale = dataset.raw().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let test_mape = if raw_targets.iter().any(|&v| v.abs() <= 1e-12 * scale) {
        None
    } else {
        Some(mape(&raw_targets, &raw_predictions)?)
    };

    let record = RunRecord {
        method,
        rep,
        seed,
        architecture: arch,
        evaluations,
        test_mae: mae(test.targets(), &predictions)?,
        test_mse: mse(test.targets(), &predictions)?,
        test_mape,
        optimization_seconds,
        training_seconds: report.wall_time_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        record,
        weights: report.final_weights,
        log,
    })
}

/// Serializes finished runs to `runs.csv`, flushing after every row.
struct Appender {
    path: PathBuf,
    out: Mutex<csv::Writer<File>>,
}

impl Appender {
    fn create(path: PathBuf, header: &str) -> Result<Self> {
        let mut file = File::create(&path).map_err(io_err(&path))?;
        writeln!(file, "{header}").map_err(io_err(&path))?;
        let mut out = csv::Writer::from_writer(file);
        let csv_err = |source| BenchError::Csv {
            path: path.clone(),
            source,
        };
        out.write_record(RUNS_HEADER).map_err(csv_err)?;
        out.flush().map_err(io_err(&path))?;
        Ok(Self {
            path,
            out: Mutex::new(out),
        })
    }

    fn append(&self, record: &RunRecord) -> Result<()> {
        let mut out = self.out.lock().expect("appender poisoned");
        out.write_record(record.csv_fields())
            .map_err(|source| BenchError::Csv {
                path: self.path.clone(),
                source,
            })?;
        out.flush().map_err(io_err(&self.path))
    }
}

fn write_artifacts(dir: &Path, output: &RunOutput) -> Result<()> {
    let r = &output.record;
    let path = dir.join(format!("champion_{}_{}.txt", r.method, r.rep));
    let mut file = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    write_champion(&mut file, &r.architecture, &output.weights)?;
    file.flush().map_err(io_err(&path))?;

    if !output.log.is_empty() {
        let path = dir.join(format!("generations_{}_{}.csv", r.method, r.rep));
        let mut text = format!("{}\n", GenerationLog::CSV_HEADER);
        for row in &output.log {
            text.push_str(&row.csv_row());
            text.push('\n');
        }
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Worker count from `RESN_THREADS`, if set to a positive integer.
fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("RESN_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(BenchError::InvalidArgument(format!(
                "RESN_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs every method × repetition, in that order, into `cfg.output_dir`.
///
/// Each finished run is appended to `runs.csv` at once and its champion and
/// generation log are written next to it, so an interrupted experiment keeps every
/// completed run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let dataset = cfg.dataset()?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let appender = Appender::create(dir.join("runs.csv"), &header_line(cfg))?;

    let body = || -> Result<Vec<RunRecord>> {
        let mut records = Vec::with_capacity(cfg.methods.len() * cfg.repetitions);
        for &method in &cfg.methods {
            for rep in 0..cfg.repetitions {
                let annotate = |source: BenchError| BenchError::Run {
                    method,
                    rep,
                    source: Box::new(source),
                };
                let output = run_single(cfg, &dataset, method, rep).map_err(annotate)?;
                appender.append(&output.record)?;
                write_artifacts(dir, &output).map_err(annotate)?;
                records.push(output.record);
            }
        }
        Ok(records)
    };

    match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| BenchError::InvalidArgument(e.to_string()))?
            .install(body),
        None => body(),
    }
}

//! Univariate series: generation, CSV ingestion, min-max normalization and
//! sliding-window supervision.

use std::f64::consts::PI;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::seed::{self, stream};
use crate::{Error, Result};

/// Which part of the series the min-max constants are computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationScope {
    /// Constants from `[0, split_index)` only; test values may fall outside `[0, 1]`.
    #[default]
    TrainSegment,
    WholeSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesOptions {
    /// Fraction of points assigned to the training segment.
    pub train_fraction: f64,
    pub normalization: NormalizationScope,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            normalization: NormalizationScope::TrainSegment,
        }
    }
}

/// A normalized series with a train/test split point.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    raw: Vec<f64>,
    normalized: Vec<f64>,
    norm_min: f64,
    norm_max: f64,
    split_index: usize,
}

impl TimeSeriesDataset {
    pub fn from_raw(raw: Vec<f64>, opts: &SeriesOptions) -> Result<Self> {
        let n = raw.len();
        if n < 2 {
            return Err(Error::InvalidData(format!(
                "a series needs at least 2 points, got {n}"
            )));
        }
        if let Some(bad) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value at position {bad}"
            )));
        }
        if !(opts.train_fraction > 0.0 && opts.train_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "train_fraction must lie in (0, 1), got {}",
                opts.train_fraction
            )));
        }
        let split_index = ((n as f64 * opts.train_fraction).round() as usize).clamp(1, n - 1);

        let scope = match opts.normalization {
            NormalizationScope::TrainSegment => &raw[..split_index],
            NormalizationScope::WholeSeries => &raw[..],
        };
        let norm_min = scope.iter().copied().fold(f64::INFINITY, f64::min);
        let norm_max = scope.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let normalized = raw
            .iter()
            .map(|&v| normalize(v, norm_min, norm_max))
            .collect();

        Ok(Self {
            raw,
            normalized,
            norm_min,
            norm_max,
            split_index,
        })
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn norm_min(&self) -> f64 {
        self.norm_min
    }

    pub fn norm_max(&self) -> f64 {
        self.norm_max
    }

    pub fn split_index(&self) -> usize {
        self.split_index
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Maps a normalized value back to the original scale.
    pub fn denormalize(&self, value: f64) -> f64 {
        if self.norm_max > self.norm_min {
            value * (self.norm_max - self.norm_min) + self.norm_min
        } else {
            self.norm_min
        }
    }

    /// MAE of the last-value predictor over the training segment, in normalized units.
    pub fn naive_train_mae(&self) -> f64 {
        let train = &self.normalized[..self.split_index];
        if train.len() < 2 {
            return 0.0;
        }
        let total: f64 = train.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        total / (train.len() - 1) as f64
    }
}

fn normalize(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        (v - min) / (max - min)
    } else {
        0.0
    }
}

/// Parameters of a sampled sine wave `amplitude·sin(2π·i/period + phase) + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineSpec {
    pub num_points: usize,
    pub period: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl SineSpec {
    pub fn new(num_points: usize, period: f64) -> Self {
        Self {
            num_points,
            period,
            amplitude: 1.0,
            phase: 0.0,
            noise_sd: 0.0,
            seed: 0,
        }
    }
}

pub fn generate_sine(spec: &SineSpec, opts: &SeriesOptions) -> Result<TimeSeriesDataset> {
    if spec.num_points < 2 {
        return Err(Error::invalid(format!(
            "num_points must be at least 2, got {}",
            spec.num_points
        )));
    }
    if !(spec.period > 0.0) || !(spec.amplitude > 0.0) {
        return Err(Error::invalid("period and amplitude must be positive"));
    }
    if !(spec.noise_sd >= 0.0) {
        return Err(Error::invalid("noise_sd must be nonnegative"));
    }

    let mut raw: Vec<f64> = (0..spec.num_points)
        .map(|i| spec.amplitude * (2.0 * PI * i as f64 / spec.period + spec.phase).sin())
        .collect();
    if spec.noise_sd > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = seed::rng_for(spec.seed, stream::NOISE);
        for v in raw.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }
    TimeSeriesDataset::from_raw(raw, opts)
}

/// Column of a CSV file, by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl From<&str> for ColumnSelector {
    fn from(name: &str) -> Self {
        ColumnSelector::Name(name.to_string())
    }
}

impl From<usize> for ColumnSelector {
    fn from(index: usize) -> Self {
        ColumnSelector::Index(index)
    }
}

/// Reads one numeric column from a headed CSV file.
///
/// The delimiter is `;` when the header line holds more semicolons than commas,
/// otherwise `,`. Parse errors report the 1-based data row (the header is not counted).
pub fn load_csv(
    path: impl AsRef<Path>,
    column: &ColumnSelector,
    opts: &SeriesOptions,
) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let header_line = text.lines().next().unwrap_or("");
    let delimiter = if header_line.matches(';').count() > header_line.matches(',').count() {
        b';'
    } else {
        b','
    };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidData(format!("unreadable header: {e}")))?
        .clone();
    let col = match column {
        ColumnSelector::Index(i) if *i < headers.len() => *i,
        ColumnSelector::Index(i) => {
            return Err(Error::InvalidData(format!(
                "column index {i} out of range ({} columns)",
                headers.len()
            )))
        }
        ColumnSelector::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidData(format!("no column named {name:?}")))?,
    };

    let mut raw = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let cell = record.get(col).ok_or_else(|| Error::Parse {
            row,
            message: format!("missing column {col}"),
        })?;
        let value: f64 = cell.parse().map_err(|_| Error::Parse {
            row,
            message: format!("{cell:?} is not a number"),
        })?;
        raw.push(value);
    }
    if raw.len() < 2 {
        return Err(Error::InvalidData(format!(
            "need at least 2 data rows, found {}",
            raw.len()
        )));
    }
    TimeSeriesDataset::from_raw(raw, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Train,
    Test,
    Whole,
}

/// Supervised pairs cut from a series: `inputs[k] = s[k..k+look_back]`, `targets[k] = s[k+look_back]`.
///
/// Inputs are stored row-major in one buffer, one row of `look_back` values per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSet {
    look_back: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl WindowedSet {
    pub fn from_series(series: &[f64], look_back: usize) -> Result<Self> {
        if look_back == 0 {
            return Err(Error::invalid("look_back must be positive"));
        }
        if look_back >= series.len() {
            return Err(Error::invalid(format!(
                "look_back {look_back} must be smaller than the segment length {}",
                series.len()
            )));
        }
        let pairs = series.len() - look_back;
        let mut inputs = Vec::with_capacity(pairs * look_back);
        for k in 0..pairs {
            inputs.extend_from_slice(&series[k..k + look_back]);
        }
        Ok(Self {
            look_back,
            inputs,
            targets: series[look_back..].to_vec(),
        })
    }

    /// Builds a set from explicit pairs; every input must have the same nonzero length.
    pub fn from_pairs(inputs: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::invalid("a windowed set needs at least one pair"));
        }
        if inputs.len() != targets.len() {
            return Err(Error::shape(
                "windowed targets",
                inputs.len(),
                targets.len(),
            ));
        }
        let look_back = inputs[0].len();
        if look_back == 0 {
            return Err(Error::invalid("look_back must be positive"));
        }
        let mut flat = Vec::with_capacity(inputs.len() * look_back);
        for row in inputs {
            if row.len() != look_back {
                return Err(Error::shape("window length", look_back, row.len()));
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            look_back,
            inputs: flat,
            targets: targets.to_vec(),
        })
    }

    pub fn look_back(&self) -> usize {
        self.look_back
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input(&self, k: usize) -> &[f64] {
        &self.inputs[k * self.look_back..(k + 1) * self.look_back]
    }

    pub fn inputs(&self) -> impl Iterator<Item = &[f64]> {
        self.inputs.chunks_exact(self.look_back)
    }

    /// Row-major `len() × look_back` input buffer.
    pub fn flat_inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

/// Cuts windowed pairs from one segment of `dataset`.
///
/// The test segment borrows the last `look_back` training points so its first target
/// is `normalized[split_index]`. For both segments `look_back` must be smaller than
/// the training segment.
pub fn window(
    dataset: &TimeSeriesDataset,
    look_back: usize,
    segment: Segment,
) -> Result<WindowedSet> {
    let series = dataset.normalized();
    let split = dataset.split_index();
    let slice = match segment {
        Segment::Whole => series,
        Segment::Train => &series[..split],
        Segment::Test => {
            if look_back >= split {
                return Err(Error::invalid(format!(
                    "look_back {look_back} must be smaller than the training segment {split}"
                )));
            }
            &series[split - look_back..]
        }
    };
    WindowedSet::from_series(slice, look_back)
}

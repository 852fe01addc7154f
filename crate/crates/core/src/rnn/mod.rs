//! Stacked-LSTM genotypes and their forward pass over explicit weight vectors.
//!
//! A network is `hidden_layers.len()` LSTM layers followed by a dense readout of
//! the last hidden state at the final time step. All parameters live in one flat
//! vector with the canonical layout
//!
//! ```text
//! for each layer j (input width i_j, hidden width h_j):
//!     W_x   4h_j × i_j   row-major, gate blocks ordered input | forget | cell | output
//!     W_h   4h_j × h_j   row-major, same gate order
//!     b     4h_j
//! dense weights  output_dim × h_last
//! dense bias     output_dim
//! ```
//!
//! Sampling, training and the champion text format all share this ordering.

mod activation;
pub(crate) mod kernel;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::WindowedSet;
use crate::{Error, Result};

/// Bounds of the architecture search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpace {
    pub max_layers: usize,
    pub min_neurons: usize,
    pub max_neurons: usize,
    pub min_look_back: usize,
    pub max_look_back: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            max_layers: 3,
            min_neurons: 1,
            max_neurons: 32,
            min_look_back: 2,
            max_look_back: 16,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.max_layers == 0 || self.min_neurons == 0 || self.min_look_back == 0 {
            return Err(Error::invalid(
                "max_layers, min_neurons and min_look_back must be positive",
            ));
        }
        if self.min_neurons > self.max_neurons || self.min_look_back > self.max_look_back {
            return Err(Error::invalid(format!("inverted bounds in {self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, arch: &Architecture) -> bool {
        let layers = arch.hidden_layers();
        !layers.is_empty()
            && layers.len() <= self.max_layers
            && layers
                .iter()
                .all(|&w| (self.min_neurons..=self.max_neurons).contains(&w))
            && (self.min_look_back..=self.max_look_back).contains(&arch.look_back())
    }
}

/// Genotype of a univariate stacked LSTM with a scalar readout.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    hidden_layers: Vec<usize>,
    look_back: usize,
}

impl Architecture {
    pub const INPUT_DIM: usize = 1;
    pub const OUTPUT_DIM: usize = 1;

    pub fn new(hidden_layers: Vec<usize>, look_back: usize) -> Result<Self> {
        if hidden_layers.is_empty() {
            return Err(Error::invalid("an architecture needs at least one layer"));
        }
        if hidden_layers.contains(&0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        if look_back == 0 {
            return Err(Error::invalid("look_back must be positive"));
        }
        Ok(Self {
            hidden_layers,
            look_back,
        })
    }

    pub fn hidden_layers(&self) -> &[usize] {
        &self.hidden_layers
    }

    pub fn look_back(&self) -> usize {
        self.look_back
    }

    pub fn input_dim(&self) -> usize {
        Self::INPUT_DIM
    }

    pub fn output_dim(&self) -> usize {
        Self::OUTPUT_DIM
    }

    pub fn depth(&self) -> usize {
        self.hidden_layers.len()
    }

    pub(crate) fn hidden_layers_mut(&mut self) -> &mut Vec<usize> {
        &mut self.hidden_layers
    }

    pub(crate) fn set_look_back(&mut self, look_back: usize) {
        self.look_back = look_back;
    }

    pub fn weight_count(&self) -> usize {
        weight_count(self)
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout::new(self)
    }
}

/// Renders as `w1,w2,...;look_back`, the architecture line of the champion format.
impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, w) in self.hidden_layers.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ";{}", self.look_back)
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidData(format!("malformed architecture line {s:?}"));
        let (widths, look_back) = s.trim().split_once(';').ok_or_else(bad)?;
        let hidden = widths
            .split(',')
            .map(|w| w.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let look_back = look_back.trim().parse::<usize>().map_err(|_| bad())?;
        Architecture::new(hidden, look_back)
    }
}

/// Number of scalars in the canonical weight layout of `arch`.
pub fn weight_count(arch: &Architecture) -> usize {
    let mut input = arch.input_dim();
    let mut total = 0;
    for &h in arch.hidden_layers() {
        total += 4 * (h * (input + h) + h);
        input = h;
    }
    total + input * arch.output_dim() + arch.output_dim()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerSlots {
    pub input: usize,
    pub hidden: usize,
    pub wx: usize,
    pub wh: usize,
    pub bias: usize,
}

/// Offsets of every parameter block inside the flat weight vector.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub layers: Vec<LayerSlots>,
    pub dense_w: usize,
    pub dense_b: usize,
    pub total: usize,
}

impl Layout {
    fn new(arch: &Architecture) -> Self {
        let mut offset = 0;
        let mut input = arch.input_dim();
        let mut layers = Vec::with_capacity(arch.depth());
        for &hidden in arch.hidden_layers() {
            let wx = offset;
            let wh = wx + 4 * hidden * input;
            let bias = wh + 4 * hidden * hidden;
            offset = bias + 4 * hidden;
            layers.push(LayerSlots {
                input,
                hidden,
                wx,
                wh,
                bias,
            });
            input = hidden;
        }
        let dense_w = offset;
        let dense_b = dense_w + input * arch.output_dim();
        Self {
            layers,
            dense_w,
            dense_b,
            total: dense_b + arch.output_dim(),
        }
    }
}

/// Flat parameter vector in the canonical layout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn zeros(arch: &Architecture) -> Self {
        Self(vec![0.0; weight_count(arch)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

pub(crate) fn check_weights(arch: &Architecture, weights: &WeightVector) -> Result<()> {
    let expected = weight_count(arch);
    if weights.len() != expected {
        return Err(Error::shape("weight vector", expected, weights.len()));
    }
    Ok(())
}

/// Prediction for one input window.
pub fn forward(arch: &Architecture, weights: &WeightVector, window: &[f64]) -> Result<f64> {
    check_weights(arch, weights)?;
    if window.len() != arch.look_back() {
        return Err(Error::shape("input window", arch.look_back(), window.len()));
    }
    let out = kernel::forward_batch(arch, weights.as_slice(), window, 1, false);
    Ok(out.predictions[0])
}

/// Predictions for every window of `windowed`, in order.
pub fn predict_series(
    arch: &Architecture,
    weights: &WeightVector,
    windowed: &WindowedSet,
) -> Result<Vec<f64>> {
    check_weights(arch, weights)?;
    if windowed.look_back() != arch.look_back() {
        return Err(Error::shape(
            "windowed look_back",
            arch.look_back(),
            windowed.look_back(),
        ));
    }
    let out = kernel::forward_batch(
        arch,
        weights.as_slice(),
        windowed.flat_inputs(),
        windowed.len(),
        false,
    );
    Ok(out.predictions)
}

/// Writes the plain-text champion record: the architecture line, then one weight per line.
pub fn write_champion(
    mut out: impl Write,
    arch: &Architecture,
    weights: &WeightVector,
) -> Result<()> {
    check_weights(arch, weights)?;
    let io = |source| Error::Io {
        path: "<champion>".into(),
        source,
    };
    writeln!(out, "{arch}").map_err(io)?;
    for w in weights.as_slice() {
        writeln!(out, "{w:?}").map_err(io)?;
    }
    Ok(())
}

pub fn read_champion(input: impl BufRead) -> Result<(Architecture, WeightVector)> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::InvalidData("empty champion record".into()))?;
    let first = first.map_err(|source| Error::Io {
        path: "<champion>".into(),
        source,
    })?;
    let arch: Architecture = first.parse()?;
    let mut values = Vec::with_capacity(weight_count(&arch));
    for (idx, line) in lines {
        let line = line.map_err(|source| Error::Io {
            path: "<champion>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let v = line.trim().parse::<f64>().map_err(|_| Error::Parse {
            row: idx + 1,
            message: format!("{line:?} is not a number"),
        })?;
        values.push(v);
    }
    let weights = WeightVector(values);
    check_weights(&arch, &weights)?;
    Ok((arch, weights))
}

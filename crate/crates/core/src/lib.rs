//! Neuroevolution of stacked-LSTM forecasters guided by random error sampling.
//!
//! Architectures are scored without training: a batch of random weight vectors is
//! drawn for each candidate, the mean absolute error of each draw is measured on the
//! training windows, and a zero-truncated normal fitted to those errors yields the
//! probability `p_t` that a random draw lands below an error threshold. A (μ+λ)
//! evolutionary loop maximizes `p_t`, and the winning architecture is then trained
//! with Adam.
//!
//! Module map:
//! - [`data`]: sine generation, CSV ingestion, normalization and windowing.
//! - [`rnn`]: architecture genotypes, flat weight layout and the LSTM forward pass.
//! - [`mrs`]: random-sampling fitness (`p_t`) and the normal CDF it relies on.
//! - [`train`]: backpropagation through time, Adam and error metrics.
//! - [`evolve`]: the (μ+λ) search, the training-based fitness variant and random search.

pub mod data;
pub mod error;
pub mod evolve;
mod gemm;
pub mod mrs;
pub mod rnn;
pub mod seed;
pub mod train;

pub use error::{Error, Result};

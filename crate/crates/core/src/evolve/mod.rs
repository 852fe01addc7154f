//! (μ+λ) architecture search.
//!
//! The loop is initialize → evaluate → {select, mutate, evaluate, replace,
//! self-adjust} until the evaluation budget is spent; the best architecture is then
//! trained with Adam. Fitness is either the random-sampling estimate `p_t`
//! ([`FitnessKind::Mrs`]) or the negated test MAE after a short Adam run
//! ([`FitnessKind::Gdet`]). A random-search baseline shares the same evaluator.

mod operators;
mod search;

pub use operators::{
    initialize, mutate, random_architecture, replace, select_parents, self_adjust,
};
pub use search::{
    best_of, run_random_search, run_resn, train_champion, Evaluator, GenerationLog, ResnOutcome,
};

use serde::{Deserialize, Serialize};

use crate::rnn::Architecture;
use crate::seed::{self, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessKind {
    /// Zero-truncated normal `p_t` from random weight samples.
    #[default]
    Mrs,
    /// `−MAE` on the test segment after a short Adam run.
    Gdet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MutationRates {
    pub width: f64,
    pub add_layer: f64,
    pub remove_layer: f64,
    pub look_back: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        Self {
            width: 0.7,
            add_layer: 0.2,
            remove_layer: 0.2,
            look_back: 0.3,
        }
    }
}

/// Integer perturbation magnitudes, adapted by the 1/5-success rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepSizes {
    pub width: usize,
    pub look_back: usize,
}

impl Default for StepSizes {
    fn default() -> Self {
        Self {
            width: 4,
            look_back: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfAdjustConfig {
    /// Number of offspring outcomes collected before each adjustment.
    pub window: usize,
    pub up_factor: f64,
    pub down_factor: f64,
    pub target_success: f64,
}

impl Default for SelfAdjustConfig {
    fn default() -> Self {
        Self {
            window: 10,
            up_factor: 1.5,
            down_factor: 0.5,
            target_success: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EaConfig {
    pub mu: usize,
    pub lambda: usize,
    pub max_evaluations: usize,
    pub mutation_rates: MutationRates,
    pub step_sizes: StepSizes,
    pub self_adjust: SelfAdjustConfig,
    pub fitness_kind: FitnessKind,
    pub seed: u64,
    /// Epochs of the short training run behind GDET fitness.
    pub gdet_epochs: usize,
    /// Standard deviation of the normal initialization before any Adam run.
    pub init_sd: f64,
    /// Start the champion's training from its lowest-error random sample instead of
    /// a fresh draw. Only meaningful with MRS fitness.
    pub init_from_best_sample: bool,
}

impl Default for EaConfig {
    fn default() -> Self {
        Self {
            mu: 10,
            lambda: 10,
            max_evaluations: 100,
            mutation_rates: MutationRates::default(),
            step_sizes: StepSizes::default(),
            self_adjust: SelfAdjustConfig::default(),
            fitness_kind: FitnessKind::Mrs,
            seed: 0,
            gdet_epochs: 100,
            init_sd: 0.1,
            init_from_best_sample: false,
        }
    }
}

impl EaConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = self.mutation_rates;
        let probabilities = [
            rates.width,
            rates.add_layer,
            rates.remove_layer,
            rates.look_back,
        ];
        if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid(format!(
                "mutation rates must be probabilities: {rates:?}"
            )));
        }
        if self.mu == 0 {
            return Err(Error::invalid("mu must be positive"));
        }
        // a budget of exactly mu is allowed and stops after the initial population
        if self.max_evaluations < self.mu {
            return Err(Error::invalid(format!(
                "max_evaluations {} is below mu = {}",
                self.max_evaluations, self.mu
            )));
        }
        let sa = self.self_adjust;
        if sa.window == 0
            || !(sa.up_factor > 1.0)
            || !(sa.down_factor > 0.0 && sa.down_factor < 1.0)
        {
            return Err(Error::invalid(format!(
                "invalid self-adjustment settings {sa:?}"
            )));
        }
        if self.step_sizes.width == 0 || self.step_sizes.look_back == 0 {
            return Err(Error::invalid("step sizes must be at least 1"));
        }
        if self.gdet_epochs == 0 || !(self.init_sd > 0.0) {
            return Err(Error::invalid("gdet_epochs and init_sd must be positive"));
        }
        Ok(())
    }

    pub(crate) fn eval_seed(&self, birth: u64) -> u64 {
        seed::derive_seed(seed::derive_seed(self.seed, stream::EVALUATION), birth)
    }
}

/// An architecture together with its (possibly pending) fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub arch: Architecture,
    pub fitness: Option<f64>,
    /// Seed of every random draw made while evaluating this individual.
    pub eval_seed: u64,
    pub eval_cost_seconds: f64,
    /// Creation index within its run.
    pub birth: u64,
}

impl Individual {
    pub fn new(arch: Architecture, birth: u64, eval_seed: u64) -> Self {
        Self {
            arch,
            fitness: None,
            eval_seed,
            eval_cost_seconds: 0.0,
            birth,
        }
    }

    pub fn is_evaluated(&self) -> bool {
        self.fitness.is_some()
    }

    pub(crate) fn expect_fitness(&self) -> Result<f64> {
        self.fitness.ok_or_else(|| {
            Error::Contract(format!(
                "individual {} ({}) has not been evaluated",
                self.birth, self.arch
            ))
        })
    }
}

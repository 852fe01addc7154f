use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use resn::data::{
    generate_sine, load_csv, ColumnSelector, SeriesOptions, SineSpec, TimeSeriesDataset,
};
use resn::evolve::{EaConfig, FitnessKind};
use resn::mrs::MrsConfig;
use resn::rnn::SearchSpace;
use resn::train::AdamConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Evolution with random-sampling fitness.
    Resn,
    /// The same evolution scored by short Adam training.
    Gdet,
    /// Independent random architectures under the same budget.
    Random,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Resn, Method::Gdet, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::Resn => "resn",
            Method::Gdet => "gdet",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| BenchError::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// Where the series comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Problem {
    Sine(SineSpec),
    Csv(CsvSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    /// Relative paths are taken from the working directory.
    pub path: PathBuf,
    pub column: ColumnSelector,
}

/// A full experiment: problem, search settings and the method × repetition matrix.
///
/// `ea.seed` and `mrs.seed` are replaced per run by `base_seed + repetition` and the
/// per-individual evaluation seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    #[serde(default)]
    pub series: SeriesOptions,
    #[serde(default)]
    pub search_space: SearchSpace,
    #[serde(default)]
    pub ea: EaConfig,
    #[serde(default)]
    pub mrs: MrsConfig,
    #[serde(default = "final_training")]
    pub adam: AdamConfig,
    pub methods: Vec<Method>,
    /// Fitness behind random search.
    #[serde(default = "gdet")]
    pub random_fitness: FitnessKind,
    #[serde(default = "thirty")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

fn final_training() -> AdamConfig {
    AdamConfig::default()
}

fn gdet() -> FitnessKind {
    FitnessKind::Gdet
}

fn thirty() -> usize {
    30
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::parse(text, Path::new("<inline>"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(BenchError::InvalidArgument(
                "repetitions must be at least 1".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(BenchError::InvalidArgument(
                "at least one method is required".into(),
            ));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(BenchError::InvalidArgument(
                "methods must not repeat".into(),
            ));
        }
        self.search_space.validate()?;
        self.ea.validate()?;
        self.mrs.validate()?;
        self.adam.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, so formatting of the source file
    /// does not matter.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn dataset(&self) -> Result<TimeSeriesDataset> {
        Ok(match &self.problem {
            Problem::Sine(spec) => generate_sine(spec, &self.series)?,
            Problem::Csv(src) => load_csv(&src.path, &src.column, &self.series)?,
        })
    }

    pub fn ea_for(&self, method: Method, seed: u64) -> EaConfig {
        let fitness_kind = match method {
            Method::Resn => FitnessKind::Mrs,
            Method::Gdet => FitnessKind::Gdet,
            Method::Random => self.random_fitness,
        };
        EaConfig {
            seed,
            fitness_kind,
            ..self.ea
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
methods = ["resn", "random"]
output_dir = "out"

[problem]
kind = "sine"
num_points = 120
period = 24.0
"#;

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.repetitions, 30);
        assert_eq!(cfg.ea, EaConfig::default());
        assert_eq!(cfg.random_fitness, FitnessKind::Gdet);
        assert_eq!(cfg.dataset().unwrap().len(), 120);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for extra in [
            "bogus = 1\n",
            "[ea]\nmuu = 3\n",
            "[problem]\nkind = \"sine\"\nnum_points = 5\nperiod = 2.0\nwobble = 1\n",
        ] {
            let text = if extra.starts_with("[problem]") {
                "methods = [\"resn\"]\noutput_dir = \"o\"\n".to_string() + extra
            } else {
                format!("{extra}{MINIMAL}")
            };
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{extra}");
        }
    }

    #[test]
    fn invalid_matrix_is_rejected() {
        let zero = MINIMAL.replace("output_dir", "repetitions = 0\noutput_dir");
        assert!(ExperimentConfig::from_toml(&zero).is_err());
        let none = MINIMAL.replace(r#"["resn", "random"]"#, "[]");
        assert!(ExperimentConfig::from_toml(&none).is_err());
    }

    #[test]
    fn round_trip_and_hash_stability() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 64);
        let other = ExperimentConfig {
            base_seed: 7,
            ..cfg.clone()
        };
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn every_section_parses() {
        let text = r#"
methods = ["resn", "gdet", "random"]
repetitions = 30          # seed of repetition r is base_seed + r
base_seed = 0
output_dir = "results"
random_fitness = "gdet"   # fitness behind random search: "gdet" or "mrs"

[problem]
kind = "sine"             # or: kind = "csv", path = "series.csv", column = "value" (name or 0-based index)
num_points = 500
period = 50.0

[series]
train_fraction = 0.8
normalization = "train_segment"   # or "whole_series"

[search_space]
max_layers = 3
min_neurons = 1
max_neurons = 32
min_look_back = 2
max_look_back = 16

[ea]
mu = 10
lambda = 10
max_evaluations = 100
gdet_epochs = 100         # length of GDET's short training runs
init_sd = 0.1             # sd of the normal initialization before training
init_from_best_sample = false

[mrs]
num_samples = 100
# threshold = 0.05        # default: MAE of the last-value predictor on the training windows
weight_sd = 1.0

[adam]
learning_rate = 0.001
epochs = 1000             # final training of the champion
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.methods, Method::ALL);
        assert_eq!(cfg.search_space, SearchSpace::default());
        assert_eq!(cfg.adam.epochs, 1000);
    }

    #[test]
    fn method_kinds() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.ea_for(Method::Resn, 3).fitness_kind, FitnessKind::Mrs);
        assert_eq!(cfg.ea_for(Method::Gdet, 3).fitness_kind, FitnessKind::Gdet);
        assert_eq!(cfg.ea_for(Method::Random, 3).seed, 3);
        assert_eq!("gdet".parse::<Method>().unwrap(), Method::Gdet);
    }
}

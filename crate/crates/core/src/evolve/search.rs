use std::time::Instant;

use rayon::prelude::*;

use super::operators::{
    initialize, mutate, random_architecture, replace, select_parents, self_adjust,
};
use super::{EaConfig, FitnessKind, Individual};
use crate::data::{window, Segment, TimeSeriesDataset};
use crate::mrs::{self, MrsConfig};
use crate::rnn::{Architecture, SearchSpace, WeightVector};
use crate::seed::{self, stream};
use crate::train::{self, AdamConfig, TrainReport};
use crate::{Error, Result};

/// Scores individuals on one dataset and counts how many evaluations were spent.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    dataset: &'a TimeSeriesDataset,
    kind: FitnessKind,
    mrs: MrsConfig,
    short_training: AdamConfig,
    init_sd: f64,
    evaluations: usize,
}

impl<'a> Evaluator<'a> {
    /// `adam` supplies the optimizer settings of GDET's short runs; their length is
    /// `ea.gdet_epochs`.
    pub fn new(
        dataset: &'a TimeSeriesDataset,
        kind: FitnessKind,
        mrs: &MrsConfig,
        adam: &AdamConfig,
        ea: &EaConfig,
    ) -> Result<Self> {
        mrs.validate()?;
        adam.validate()?;
        Ok(Self {
            dataset,
            kind,
            mrs: *mrs,
            short_training: AdamConfig {
                epochs: ea.gdet_epochs,
                ..*adam
            },
            init_sd: ea.init_sd,
            evaluations: 0,
        })
    }

    pub fn kind(&self) -> FitnessKind {
        self.kind
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Fitness of `arch` with all randomness drawn from `eval_seed`.
    pub fn score(&self, arch: &Architecture, eval_seed: u64) -> Result<f64> {
        let train_set = window(self.dataset, arch.look_back(), Segment::Train)?;
        match self.kind {
            FitnessKind::Mrs => {
                let cfg = MrsConfig {
                    seed: eval_seed,
                    ..self.mrs
                };
                mrs::fitness(arch, &train_set, &cfg)
            }
            FitnessKind::Gdet => {
                let init = train::init_weights(arch, self.init_sd, eval_seed)?;
                let report = train::train_adam(arch, &init, &train_set, &self.short_training)?;
                let test_set = window(self.dataset, arch.look_back(), Segment::Test)?;
                let predictions =
                    crate::rnn::predict_series(arch, &report.final_weights, &test_set)?;
                Ok(-train::mae(test_set.targets(), &predictions)?)
            }
        }
    }

    /// Scores every unevaluated member of `population`; returns how many were scored.
    ///
    /// Individuals are processed in parallel. Each one only reads its own seed, so the
    /// outcome matches a sequential pass.
    pub fn evaluate(&mut self, population: &mut [Individual]) -> Result<usize> {
        let this = &*self;
        let results = population
            .par_iter_mut()
            .filter(|ind| !ind.is_evaluated())
            .map(|ind| {
                let start = Instant::now();
                let fitness = this.score(&ind.arch, ind.eval_seed)?;
                ind.fitness = Some(fitness);
                ind.eval_cost_seconds = start.elapsed().as_secs_f64();
                Ok(())
            })
            .collect::<Vec<Result<()>>>();
        let done = results.len();
        results.into_iter().collect::<Result<Vec<()>>>()?;
        self.evaluations += done;
        Ok(done)
    }
}

/// Highest fitness, then fewest weights, then earliest birth.
pub fn best_of(population: &[Individual]) -> Result<&Individual> {
    let mut best: Option<(&Individual, f64)> = None;
    for ind in population {
        let f = ind.expect_fitness()?;
        let better = match best {
            None => true,
            Some((b, bf)) => {
                f > bf
                    || (f == bf
                        && (ind.arch.weight_count(), ind.birth) < (b.arch.weight_count(), b.birth))
            }
        };
        if better {
            best = Some((ind, f));
        }
    }
    best.map(|(b, _)| b)
        .ok_or_else(|| Error::invalid("empty population"))
}

/// One row of the per-generation log.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationLog {
    pub generation: usize,
    pub evaluations: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub step_width: usize,
    pub step_look_back: usize,
    pub elapsed_seconds: f64,
}

impl GenerationLog {
    pub const CSV_HEADER: &'static str =
        "generation,evaluations,best_fitness,mean_fitness,step_width,step_lookback,elapsed_seconds";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:?},{:?},{},{},{:.6}",
            self.generation,
            self.evaluations,
            self.best_fitness,
            self.mean_fitness,
            self.step_width,
            self.step_look_back,
            self.elapsed_seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct ResnOutcome {
    /// Best individual of the final population, as scored during the search.
    pub best: Individual,
    pub report: TrainReport,
    pub log: Vec<GenerationLog>,
    pub evaluations: usize,
    pub optimization_seconds: f64,
    pub training_seconds: f64,
}

/// Adam training of a champion architecture on the training segment.
///
/// Initial weights are fresh `normal(0, init_sd²)` draws keyed by the run seed, or,
/// with `init_from_best_sample`, the lowest-error random sample behind its MRS score.
pub fn train_champion(
    champion: &Individual,
    dataset: &TimeSeriesDataset,
    ea: &EaConfig,
    mrs_cfg: &MrsConfig,
    adam: &AdamConfig,
) -> Result<TrainReport> {
    let arch = &champion.arch;
    let train_set = window(dataset, arch.look_back(), Segment::Train)?;
    let init: WeightVector = if ea.init_from_best_sample {
        let cfg = MrsConfig {
            seed: champion.eval_seed,
            ..*mrs_cfg
        };
        let maes = mrs::sample_maes(arch, &train_set, &cfg)?;
        let best = maes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(s, _)| s)
            .unwrap_or(0);
        mrs::sample_weights(arch, &cfg, best)?
    } else {
        train::init_weights(
            arch,
            ea.init_sd,
            seed::derive_seed(ea.seed, stream::FINAL_INIT),
        )?
    };
    train::train_adam(arch, &init, &train_set, adam)
}

fn log_row(
    generation: usize,
    population: &[Individual],
    evaluations: usize,
    steps: super::StepSizes,
    start: Instant,
) -> Result<GenerationLog> {
    let best = best_of(population)?.expect_fitness()?;
    let mean = population
        .iter()
        .map(Individual::expect_fitness)
        .sum::<Result<f64>>()?
        / population.len() as f64;
    Ok(GenerationLog {
        generation,
        evaluations,
        best_fitness: best,
        mean_fitness: mean,
        step_width: steps.width,
        step_look_back: steps.look_back,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// The full search: evolve until `max_evaluations` is reached, then train the best.
///
/// Generations continue while fewer than `max_evaluations` evaluations have been
/// spent, so the total never exceeds the budget by more than `λ − 1`.
pub fn run_resn(
    space: &SearchSpace,
    cfg: &EaConfig,
    dataset: &TimeSeriesDataset,
    mrs_cfg: &MrsConfig,
    adam: &AdamConfig,
) -> Result<ResnOutcome> {
    space.validate()?;
    cfg.validate()?;
    let start = Instant::now();
    let mut evaluator = Evaluator::new(dataset, cfg.fitness_kind, mrs_cfg, adam, cfg)?;
    let mut rng = seed::rng_for(cfg.seed, stream::VARIATION);

    let mut population = initialize(space, cfg)?;
    evaluator.evaluate(&mut population)?;
    let mut births = population.len() as u64;
    let mut steps = cfg.step_sizes;
    let mut history: Vec<bool> = Vec::new();
    let mut log = vec![log_row(
        0,
        &population,
        evaluator.evaluations(),
        steps,
        start,
    )?];

    while evaluator.evaluations() < cfg.max_evaluations && cfg.lambda > 0 {
        let parents = select_parents(&population, cfg.lambda, &mut rng)?;
        let mut offspring: Vec<Individual> = parents
            .iter()
            .map(|p| {
                let arch = mutate(&p.arch, space, &cfg.mutation_rates, &steps, &mut rng);
                let birth = births;
                births += 1;
                Individual::new(arch, birth, cfg.eval_seed(birth))
            })
            .collect();
        evaluator.evaluate(&mut offspring)?;
        let born: Vec<u64> = offspring.iter().map(|o| o.birth).collect();

        population = replace(population, offspring)?;
        history.extend(
            born.iter()
                .map(|b| population.iter().any(|p| p.birth == *b)),
        );
        while history.len() >= cfg.self_adjust.window {
            let window: Vec<bool> = history.drain(..cfg.self_adjust.window).collect();
            steps = self_adjust(&window, steps, &cfg.self_adjust, space);
        }
        log.push(log_row(
            log.len(),
            &population,
            evaluator.evaluations(),
            steps,
            start,
        )?);
    }

    let best = best_of(&population)?.clone();
    let optimization_seconds = start.elapsed().as_secs_f64();
    let report = train_champion(&best, dataset, cfg, mrs_cfg, adam)?;
    Ok(ResnOutcome {
        best,
        training_seconds: report.wall_time_seconds,
        report,
        log,
        evaluations: evaluator.evaluations(),
        optimization_seconds,
    })
}

/// Best of `budget` independently drawn architectures.
///
/// Draws follow one seeded stream, so a larger budget scores a superset of the
/// architectures of a smaller one.
pub fn run_random_search(
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    evaluator: &mut Evaluator<'_>,
) -> Result<Individual> {
    space.validate()?;
    if budget == 0 {
        return Err(Error::invalid("random search needs a budget of at least 1"));
    }
    let mut rng = seed::rng_for(seed, stream::INIT);
    let eval_base = seed::derive_seed(seed, stream::EVALUATION);
    let mut candidates: Vec<Individual> = (0..budget as u64)
        .map(|k| {
            Individual::new(
                random_architecture(space, &mut rng),
                k,
                seed::derive_seed(eval_base, k),
            )
        })
        .collect();
    evaluator.evaluate(&mut candidates)?;
    Ok(best_of(&candidates)?.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_sine, SeriesOptions, SineSpec};

    fn small_space() -> SearchSpace {
        SearchSpace {
            max_layers: 2,
            min_neurons: 1,
            max_neurons: 4,
            min_look_back: 2,
            max_look_back: 4,
        }
    }

    fn sine() -> TimeSeriesDataset {
        generate_sine(&SineSpec::new(80, 16.0), &SeriesOptions::default()).unwrap()
    }

    fn quick_mrs() -> MrsConfig {
        MrsConfig {
            num_samples: 10,
            ..Default::default()
        }
    }

    fn quick_adam() -> AdamConfig {
        AdamConfig {
            epochs: 5,
            ..Default::default()
        }
    }

    #[test]
    fn cached_individuals_are_not_rescored() {
        let ds = sine();
        let ea = EaConfig::default();
        let mut ev =
            Evaluator::new(&ds, FitnessKind::Mrs, &quick_mrs(), &quick_adam(), &ea).unwrap();
        let mut pop = initialize(&small_space(), &EaConfig { mu: 4, ..ea }).unwrap();
        assert_eq!(ev.evaluate(&mut pop).unwrap(), 4);
        let scored = pop.clone();
        assert_eq!(ev.evaluate(&mut pop).unwrap(), 0);
        assert_eq!(ev.evaluations(), 4);
        assert_eq!(pop, scored);
        assert!(pop
            .iter()
            .all(|p| (0.0..=1.0).contains(&p.fitness.unwrap())));
        for p in &pop {
            assert_eq!(ev.score(&p.arch, p.eval_seed).unwrap(), p.fitness.unwrap());
        }
    }

    #[test]
    fn gdet_fitness_is_negated_mae() {
        let ds = sine();
        let ea = EaConfig {
            gdet_epochs: 3,
            ..Default::default()
        };
        let ev = Evaluator::new(&ds, FitnessKind::Gdet, &quick_mrs(), &quick_adam(), &ea).unwrap();
        let arch = Architecture::new(vec![2], 3).unwrap();
        let f = ev.score(&arch, 17).unwrap();
        assert!(f <= 0.0);
        assert_eq!(f, ev.score(&arch, 17).unwrap());
    }

    #[test]
    fn budget_of_mu_trains_initial_best() {
        let ds = sine();
        let cfg = EaConfig {
            mu: 4,
            lambda: 4,
            max_evaluations: 4,
            ..Default::default()
        };
        let out = run_resn(&small_space(), &cfg, &ds, &quick_mrs(), &quick_adam()).unwrap();
        assert_eq!(out.evaluations, 4);
        assert_eq!(out.log.len(), 1);
        let mut pop = initialize(&small_space(), &cfg).unwrap();
        Evaluator::new(&ds, FitnessKind::Mrs, &quick_mrs(), &quick_adam(), &cfg)
            .unwrap()
            .evaluate(&mut pop)
            .unwrap();
        let best = best_of(&pop).unwrap();
        assert_eq!(
            (&best.arch, best.fitness, best.birth),
            (&out.best.arch, out.best.fitness, out.best.birth)
        );
        assert_eq!(out.report.loss_history.len(), 5);
    }

    #[test]
    fn resn_is_elitist_budgeted_and_deterministic() {
        let ds = sine();
        let cfg = EaConfig {
            mu: 4,
            lambda: 3,
            max_evaluations: 20,
            self_adjust: super::super::SelfAdjustConfig {
                window: 3,
                ..Default::default()
            },
            ..Default::default()
        };
        let a = run_resn(&small_space(), &cfg, &ds, &quick_mrs(), &quick_adam()).unwrap();
        assert!(a.evaluations >= 20 && a.evaluations < 20 + cfg.lambda);
        for pair in a.log.windows(2) {
            assert!(pair[1].best_fitness >= pair[0].best_fitness);
            assert!(pair[1].evaluations > pair[0].evaluations);
        }
        let b = run_resn(&small_space(), &cfg, &ds, &quick_mrs(), &quick_adam()).unwrap();
        assert_eq!(a.best, b.best_with_cost(&a.best));
        assert_eq!(a.report.final_weights, b.report.final_weights);
    }

    #[test]
    fn random_search_prefix_property() {
        let ds = sine();
        let ea = EaConfig::default();
        let mut ev =
            Evaluator::new(&ds, FitnessKind::Mrs, &quick_mrs(), &quick_adam(), &ea).unwrap();
        let mut previous = f64::NEG_INFINITY;
        for budget in [1, 3, 6] {
            let best = run_random_search(&small_space(), budget, 5, &mut ev).unwrap();
            assert!(best.fitness.unwrap() >= previous);
            previous = best.fitness.unwrap();
        }
        let one = run_random_search(&small_space(), 1, 5, &mut ev).unwrap();
        let mut rng = seed::rng_for(5, stream::INIT);
        assert_eq!(one.arch, random_architecture(&small_space(), &mut rng));
        assert!(run_random_search(&small_space(), 0, 5, &mut ev).is_err());
    }

    impl ResnOutcome {
        /// `best` with the wall-clock cost copied from `other`, for equality checks.
        fn best_with_cost(&self, other: &Individual) -> Individual {
            Individual {
                eval_cost_seconds: other.eval_cost_seconds,
                ..self.best.clone()
            }
        }
    }
}

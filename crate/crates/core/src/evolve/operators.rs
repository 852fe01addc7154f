use std::cmp::Ordering;

use rand::Rng;

use super::{EaConfig, Individual, MutationRates, SelfAdjustConfig, StepSizes};
use crate::rnn::{Architecture, SearchSpace};
use crate::seed::{self, stream};
use crate::Result;

/// Uniform draw: layer count, then each width, then the look-back.
pub fn random_architecture(space: &SearchSpace, rng: &mut impl Rng) -> Architecture {
    let layers = rng.random_range(1..=space.max_layers);
    let widths = (0..layers)
        .map(|_| rng.random_range(space.min_neurons..=space.max_neurons))
        .collect();
    let look_back = rng.random_range(space.min_look_back..=space.max_look_back);
    Architecture::new(widths, look_back).expect("space bounds are positive")
}

/// The μ random architectures of the initial population, births `0..μ`.
pub fn initialize(space: &SearchSpace, cfg: &EaConfig) -> Result<Vec<Individual>> {
    space.validate()?;
    cfg.validate()?;
    let mut rng = seed::rng_for(cfg.seed, stream::INIT);
    Ok((0..cfg.mu as u64)
        .map(|birth| {
            Individual::new(
                random_architecture(space, &mut rng),
                birth,
                cfg.eval_seed(birth),
            )
        })
        .collect())
}

/// Higher fitness first, then fewer weights.
fn rank(a: &Individual, fa: f64, b: &Individual, fb: f64) -> Ordering {
    fb.total_cmp(&fa)
        .then_with(|| a.arch.weight_count().cmp(&b.arch.weight_count()))
}

/// `k` binary tournaments with replacement.
pub fn select_parents(
    population: &[Individual],
    k: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Individual>> {
    let fitness = population
        .iter()
        .map(Individual::expect_fitness)
        .collect::<Result<Vec<f64>>>()?;
    if population.is_empty() {
        return Ok(Vec::new());
    }
    let n = population.len();
    Ok((0..k)
        .map(|_| {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let winner = match rank(&population[a], fitness[a], &population[b], fitness[b]) {
                Ordering::Less => a,
                Ordering::Greater => b,
                Ordering::Equal => {
                    if rng.random_bool(0.5) {
                        a
                    } else {
                        b
                    }
                }
            };
            population[winner].clone()
        })
        .collect())
}

fn perturb(value: usize, step: usize, lo: usize, hi: usize, rng: &mut impl Rng) -> usize {
    let magnitude = rng.random_range(1..=step.max(1)) as i64;
    let sign = if rng.random_bool(0.5) { 1 } else { -1 };
    let shifted = |s: i64| (value as i64 + s * magnitude).clamp(lo as i64, hi as i64) as usize;
    let moved = shifted(sign);
    if moved == value {
        // pinned at a bound: try the other direction
        shifted(-sign)
    } else {
        moved
    }
}

fn perturb_width(arch: &mut Architecture, step: usize, space: &SearchSpace, rng: &mut impl Rng) {
    let layers = arch.hidden_layers_mut();
    let k = rng.random_range(0..layers.len());
    layers[k] = perturb(layers[k], step, space.min_neurons, space.max_neurons, rng);
}

fn perturb_look_back(
    arch: &mut Architecture,
    step: usize,
    space: &SearchSpace,
    rng: &mut impl Rng,
) {
    let lb = perturb(
        arch.look_back(),
        step,
        space.min_look_back,
        space.max_look_back,
        rng,
    );
    arch.set_look_back(lb);
}

fn add_layer(arch: &mut Architecture, space: &SearchSpace, rng: &mut impl Rng) {
    if arch.depth() < space.max_layers {
        let width = rng.random_range(space.min_neurons..=space.max_neurons);
        let at = rng.random_range(0..=arch.depth());
        arch.hidden_layers_mut().insert(at, width);
    }
}

fn remove_layer(arch: &mut Architecture, rng: &mut impl Rng) {
    if arch.depth() > 1 {
        let at = rng.random_range(0..arch.depth());
        arch.hidden_layers_mut().remove(at);
    }
}

/// Offspring genotype of `parent`.
///
/// Operators fire independently in the order width, add-layer, remove-layer,
/// look-back. If the result equals the parent a change is forced, preferring a
/// width move; only a space with a single feasible genotype yields a copy.
pub fn mutate(
    parent: &Architecture,
    space: &SearchSpace,
    rates: &MutationRates,
    steps: &StepSizes,
    rng: &mut impl Rng,
) -> Architecture {
    let mut child = parent.clone();
    if rng.random_bool(rates.width) {
        perturb_width(&mut child, steps.width, space, rng);
    }
    if rng.random_bool(rates.add_layer) {
        add_layer(&mut child, space, rng);
    }
    if rng.random_bool(rates.remove_layer) {
        remove_layer(&mut child, rng);
    }
    if rng.random_bool(rates.look_back) {
        perturb_look_back(&mut child, steps.look_back, space, rng);
    }

    if child == *parent {
        if space.max_neurons > space.min_neurons {
            perturb_width(&mut child, steps.width, space, rng);
        } else if space.max_look_back > space.min_look_back {
            perturb_look_back(&mut child, steps.look_back, space, rng);
        } else if child.depth() < space.max_layers {
            add_layer(&mut child, space, rng);
        } else {
            remove_layer(&mut child, rng);
        }
    }
    debug_assert!(space.contains(&child) || !space.contains(parent));
    child
}

/// The `parents.len()` best of parents ∪ offspring.
///
/// Ties go to fewer weights, then to parents over offspring, then to the earlier
/// position.
pub fn replace(parents: Vec<Individual>, offspring: Vec<Individual>) -> Result<Vec<Individual>> {
    let mu = parents.len();
    let mut pool: Vec<(f64, Individual)> = parents
        .into_iter()
        .chain(offspring)
        .map(|ind| Ok((ind.expect_fitness()?, ind)))
        .collect::<Result<_>>()?;
    pool.sort_by(|(fa, a), (fb, b)| rank(a, *fa, b, *fb));
    pool.truncate(mu);
    Ok(pool.into_iter().map(|(_, ind)| ind).collect())
}

fn scale_step(step: usize, factor: f64, cap: usize) -> usize {
    let scaled = (step as f64 * factor + 0.5).floor() as usize;
    scaled.clamp(1, cap.max(1))
}

/// 1/5-success rule over one window of offspring outcomes.
///
/// Steps grow by `up_factor` when more than the target fraction of offspring
/// survived, shrink by `down_factor` when fewer did, and never drop below 1 or
/// exceed the width of their range in `space`.
pub fn self_adjust(
    history: &[bool],
    steps: StepSizes,
    cfg: &SelfAdjustConfig,
    space: &SearchSpace,
) -> StepSizes {
    if history.is_empty() {
        return steps;
    }
    let success = history.iter().filter(|&&s| s).count() as f64 / history.len() as f64;
    let factor = if success > cfg.target_success + 1e-12 {
        cfg.up_factor
    } else if success < cfg.target_success - 1e-12 {
        cfg.down_factor
    } else {
        return steps;
    };
    StepSizes {
        width: scale_step(steps.width, factor, space.max_neurons - space.min_neurons),
        look_back: scale_step(
            steps.look_back,
            factor,
            space.max_look_back - space.min_look_back,
        ),
    }
}

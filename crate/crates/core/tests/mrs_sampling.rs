//! Random-sampling fitness against straight-line references and statistical bounds.

use proptest::prelude::*;
use rand_distr::{Distribution, Normal};
use resn::data::{generate_sine, window, Segment, SeriesOptions, SineSpec, WindowedSet};
use resn::mrs::{estimate_pt, evaluate, fitness, sample_maes, MrsConfig};
use resn::rnn::Architecture;
use resn::seed::rng_for;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn tiny_instance_matches_straight_line_reference() {
    let arch = Architecture::new(vec![1], 1).unwrap();
    let xs = [0.2, 0.7, 0.4];
    let ys = [0.7, 0.4, 0.9];
    let set = WindowedSet::from_pairs(&xs.map(|x| vec![x]), &ys).unwrap();
    let cfg = MrsConfig {
        num_samples: 3,
        threshold: Some(0.5),
        seed: 42,
        ..Default::default()
    };
    let got = sample_maes(&arch, &set, &cfg).unwrap();

    let normal = Normal::new(0.0, 1.0).unwrap();
    for (s, &g) in got.iter().enumerate() {
        let mut rng = rng_for(42, s as u64);
        let mut w = [0.0; 14];
        for v in w.iter_mut() {
            *v = normal.sample(&mut rng);
        }
        let mut total = 0.0;
        for k in 0..3 {
            let x = xs[k];
            let i = sigmoid(w[0] * x + w[8]);
            let gg = (w[2] * x + w[10]).tanh();
            let o = sigmoid(w[3] * x + w[11]);
            let h = o * (i * gg).tanh();
            total += (w[12] * h + w[13] - ys[k]).abs();
        }
        let want = total / 3.0;
        assert!((g - want).abs() <= 1e-12, "sample {s}: {g} vs {want}");
    }
}

fn sine_train(look_back: usize) -> WindowedSet {
    let ds = generate_sine(&SineSpec::new(500, 50.0), &SeriesOptions::default()).unwrap();
    window(&ds, look_back, Segment::Train).unwrap()
}

fn empirical(maes: &[f64], t: f64) -> f64 {
    maes.iter().filter(|&&m| m <= t).count() as f64 / maes.len() as f64
}

fn percentile(maes: &[f64], q: f64) -> f64 {
    let mut sorted = maes.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

#[test]
fn fitted_probability_tracks_empirical_fraction() {
    let arch = Architecture::new(vec![2], 3).unwrap();
    let train = sine_train(3);
    let cfg = MrsConfig {
        num_samples: 1000,
        ..Default::default()
    };
    let maes = sample_maes(&arch, &train, &cfg).unwrap();
    for q in [0.1, 0.5, 0.9] {
        let t = percentile(&maes, q);
        let p = estimate_pt(&maes, t).unwrap();
        assert!((p - empirical(&maes, t)).abs() <= 0.15, "q={q}: p_t {p}");
    }
}

#[test]
fn seed_changes_samples_but_not_the_estimate() {
    let arch = Architecture::new(vec![3], 4).unwrap();
    let train = sine_train(4);
    let results: Vec<_> = [1, 2, 3]
        .iter()
        .map(|&seed| {
            let cfg = MrsConfig {
                num_samples: 500,
                threshold: Some(0.3),
                seed,
                ..Default::default()
            };
            evaluate(&arch, &train, &cfg).unwrap()
        })
        .collect();
    assert_ne!(results[0].maes, results[1].maes);
    for r in &results[1..] {
        assert!((r.p_t - results[0].p_t).abs() <= 0.1);
    }
}

#[test]
fn fitness_saturates_for_huge_threshold_and_composes() {
    let arch = Architecture::new(vec![2, 2], 3).unwrap();
    let train = sine_train(3);
    let base = MrsConfig {
        num_samples: 50,
        seed: 9,
        ..Default::default()
    };
    let r = evaluate(&arch, &train, &base).unwrap();
    assert!(r.maes.iter().all(|&m| m >= 0.0));
    let big = r.maes.iter().cloned().fold(0.0, f64::max) + 10.0 * r.sd_mae;
    let f = fitness(
        &arch,
        &train,
        &MrsConfig {
            threshold: Some(big),
            ..base
        },
    )
    .unwrap();
    assert!((f - 1.0).abs() <= 1e-6);
    assert_eq!(r.p_t, estimate_pt(&r.maes, r.threshold).unwrap());
    assert_eq!(sample_maes(&arch, &train, &base).unwrap(), r.maes);
}

proptest! {
    #[test]
    fn estimate_is_a_monotone_probability(
        maes in prop::collection::vec(0.0..5.0_f64, 2..40),
        t1 in 1e-6..6.0_f64,
        t2 in 1e-6..6.0_f64,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let p_lo = estimate_pt(&maes, lo).unwrap();
        let p_hi = estimate_pt(&maes, hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&p_lo));
        prop_assert!((0.0..=1.0).contains(&p_hi));
        prop_assert!(p_lo <= p_hi + 1e-15);
    }
}

//! Forward pass against a scalar, hand-unrolled LSTM.

use resn::data::WindowedSet;
use resn::rnn::{forward, predict_series, Architecture, WeightVector};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One-unit LSTM over `window`, weights in the canonical order
/// `[wi wf wg wo | ui uf ug uo | bi bf bg bo | dense_w | dense_b]`.
fn scalar_lstm(w: &[f64; 14], window: &[f64]) -> f64 {
    let (mut h, mut c) = (0.0_f64, 0.0_f64);
    for &x in window {
        let i = sigmoid(w[0] * x + w[4] * h + w[8]);
        let f = sigmoid(w[1] * x + w[5] * h + w[9]);
        let g = (w[2] * x + w[6] * h + w[10]).tanh();
        let o = sigmoid(w[3] * x + w[7] * h + w[11]);
        c = f * c + i * g;
        h = o * c.tanh();
    }
    w[12] * h + w[13]
}

const WEIGHTS: [f64; 14] = [
    0.5, -0.3, 0.8, 0.1, -0.7, 0.4, 0.25, -0.6, 0.05, 0.9, -0.2, 0.3, 1.7, -0.4,
];

#[test]
fn single_step_matches_scalar_oracle() {
    let arch = Architecture::new(vec![1], 1).unwrap();
    assert_eq!(arch.weight_count(), 14);
    let w = WeightVector::from(WEIGHTS.to_vec());
    for x in [-1.5, 0.0, 0.37, 2.0] {
        let got = forward(&arch, &w, &[x]).unwrap();
        let want = scalar_lstm(&WEIGHTS, &[x]);
        assert!((got - want).abs() <= 1e-12, "x={x}: {got} vs {want}");
    }
}

#[test]
fn unrolled_sequence_matches_scalar_oracle() {
    let arch = Architecture::new(vec![1], 5).unwrap();
    let w = WeightVector::from(WEIGHTS.to_vec());
    let window = [0.1, 0.9, -0.4, 0.3, 0.75];
    let got = forward(&arch, &w, &window).unwrap();
    assert!((got - scalar_lstm(&WEIGHTS, &window)).abs() <= 1e-12);
}

fn pseudo_weights(n: usize, salt: f64) -> WeightVector {
    (0..n)
        .map(|k| ((k as f64 + 1.0) * 0.618_033_988_7 + salt).sin() * 0.8)
        .collect::<Vec<_>>()
        .into()
}

#[test]
fn readout_is_linear() {
    let arch = Architecture::new(vec![3, 2], 4).unwrap();
    let w = pseudo_weights(arch.weight_count(), 0.3);
    let mut doubled = w.clone();
    let n = doubled.len();
    doubled.as_mut_slice()[n - 3..]
        .iter_mut()
        .for_each(|v| *v *= 2.0);
    let window = [0.2, 0.4, 0.1, 0.9];
    let a = forward(&arch, &w, &window).unwrap();
    let b = forward(&arch, &doubled, &window).unwrap();
    assert!((b - 2.0 * a).abs() <= 1e-12, "{b} vs 2·{a}");
}

#[test]
fn dense_bias_alone_is_the_prediction() {
    let arch = Architecture::new(vec![4, 3], 3).unwrap();
    let mut w = pseudo_weights(arch.weight_count(), 1.1);
    let n = w.len();
    // zero every recurrent and input weight, keep biases and readout
    let mut offset = 0;
    let mut input = 1;
    for &h in arch.hidden_layers() {
        let slice = &mut w.as_mut_slice()[offset..offset + 4 * h * (input + h)];
        slice.fill(0.0);
        offset += 4 * h * (input + h) + 4 * h;
        input = h;
    }
    w.as_mut_slice()[n - 4..n - 1].fill(0.0);
    w.as_mut_slice()[n - 1] = 0.4321;
    let windows: Vec<Vec<f64>> = vec![vec![0.1, 0.2, 0.3], vec![0.9, -0.5, 0.0]];
    let set = WindowedSet::from_pairs(&windows, &[0.0, 0.0]).unwrap();
    for p in predict_series(&arch, &w, &set).unwrap() {
        assert_eq!(p, 0.4321);
    }
}

#[test]
fn forward_is_pure() {
    let arch = Architecture::new(vec![5, 2, 3], 6).unwrap();
    let w = pseudo_weights(arch.weight_count(), 2.0);
    let window = [0.3, 0.1, 0.8, 0.5, 0.5, 0.2];
    let first = forward(&arch, &w, &window).unwrap();
    for _ in 0..5 {
        assert_eq!(
            forward(&arch, &w, &window).unwrap().to_bits(),
            first.to_bits()
        );
    }
}

#[test]
fn every_weight_is_consumed() {
    let arch = Architecture::new(vec![2, 2], 3).unwrap();
    let w = pseudo_weights(arch.weight_count(), 0.7);
    let window = [0.5, 0.1, 0.6];
    let base = forward(&arch, &w, &window).unwrap();
    let mut bumped = w.clone();
    let last = bumped.len() - 1;
    bumped.as_mut_slice()[last] += 0.1;
    assert_ne!(forward(&arch, &bumped, &window).unwrap(), base);

    let mut longer = w.into_inner();
    longer.push(0.0);
    assert!(forward(&arch, &longer.into(), &window).is_err());
}

#[test]
fn batched_prediction_equals_single_windows() {
    let arch = Architecture::new(vec![6, 3], 4).unwrap();
    let w = pseudo_weights(arch.weight_count(), 0.05);
    let series: Vec<f64> = (0..40)
        .map(|k| (k as f64 * 0.3).sin() * 0.5 + 0.5)
        .collect();
    let set = WindowedSet::from_series(&series, 4).unwrap();
    let batched = predict_series(&arch, &w, &set).unwrap();
    assert_eq!(batched.len(), set.len());
    for (k, p) in batched.iter().enumerate() {
        let single = forward(&arch, &w, set.input(k)).unwrap();
        assert!((p - single).abs() <= 1e-12);
    }
}

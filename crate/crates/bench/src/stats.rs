//! Summary statistics and the two-sided Wilcoxon rank-sum test.

use resn::mrs::normal_cdf;

use crate::error::{BenchError, Result};

/// Combined sample sizes up to this use exact enumeration.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(BenchError::InvalidArgument(
            "cannot summarize an empty group".into(),
        ));
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let sd = if n > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Summary {
        n,
        mean,
        median,
        max: sorted[n - 1],
        min: sorted[0],
        sd,
    })
}

/// Midranks (1-based) of `values`, plus the tie-group sizes.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// Two-sided p-value of the rank-sum test of `a` against `b`.
///
/// With `|a| + |b| ≤ 12` every assignment of the pooled midranks to a group of size
/// `|a|` is enumerated; larger samples use the normal approximation with tie and
/// continuity corrections.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() + b.len() <= EXACT_LIMIT {
        rank_sum_exact(a, b)
    } else {
        rank_sum_normal(a, b)
    }
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(BenchError::InvalidArgument(
            "both samples need at least one value".into(),
        ));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(BenchError::InvalidArgument(
            "samples must not contain NaN".into(),
        ));
    }
    Ok(())
}

/// Pooled midranks, tie-group sizes and the rank sum of `a`.
fn rank_sum(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let w = ranks[..a.len()].iter().sum();
    (ranks, ties, w)
}

/// Exact permutation p-value; at most 20 values in total.
pub fn rank_sum_exact(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    let total = a.len() + b.len();
    if total > 20 {
        return Err(BenchError::InvalidArgument(format!(
            "exact enumeration is limited to 20 values, got {total}"
        )));
    }
    let (ranks, _, w) = rank_sum(a, b);
    let n = a.len();
    let expected = n as f64 * (total as f64 + 1.0) / 2.0;
    let observed = (w - expected).abs();
    let (mut extreme, mut count) = (0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let sum: f64 = (0..total)
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| ranks[k])
            .sum();
        count += 1;
        if (sum - expected).abs() >= observed - 1e-9 {
            extreme += 1;
        }
    }
    Ok(extreme as f64 / count as f64)
}

/// Normal approximation of the p-value with tie and continuity corrections.
pub fn rank_sum_normal(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    let (_, ties, w) = rank_sum(a, b);
    let (nf, mf) = (a.len() as f64, b.len() as f64);
    let total = nf + mf;
    let u = w - nf * (nf + 1.0) / 2.0;
    let mean = nf * mf / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = nf * mf / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if !(var > 0.0) {
        return Ok(1.0);
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok((2.0 * normal_cdf(-z)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_examples() {
        let s = summarize(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            (s.mean, s.median, s.sd, s.max, s.min),
            (2.0, 2.0, 1.0, 3.0, 1.0)
        );
        assert_eq!(summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        let single = summarize(&[0.7]).unwrap();
        assert_eq!((single.mean, single.median, single.sd), (0.7, 0.7, 0.0));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn midranks_share_tied_positions() {
        let (ranks, ties) = midranks(&[5.0, 1.0, 5.0, 3.0]);
        assert_eq!(ranks, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(ties, vec![1, 1, 2]);
    }

    #[test]
    fn identical_samples_give_one() {
        assert_eq!(
            wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            1.0
        );
        assert_eq!(wilcoxon_rank_sum(&[4.0; 3], &[4.0; 3]).unwrap(), 1.0);
        assert_eq!(wilcoxon_rank_sum(&[4.0; 10], &[4.0; 10]).unwrap(), 1.0);
    }

    #[test]
    fn large_shift_is_significant() {
        let a: Vec<f64> = (0..30).map(|k| k as f64 * 0.01).collect();
        let b: Vec<f64> = (0..30).map(|k| 1.0 + k as f64 * 0.01).collect();
        assert!(wilcoxon_rank_sum(&a, &b).unwrap() < 1e-9);
        assert!(wilcoxon_rank_sum(&[], &b).is_err());
    }
}

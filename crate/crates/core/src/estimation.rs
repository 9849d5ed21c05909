//! Statistical layer: empirical distributions, goodness-of-fit, moments
//! with autocorrelation-aware error bars, and Pareto tail-exponent fits.

use crate::error::{Error, Result};
use serde::Serialize;

/// Default number of batches for the batch-means standard error.
pub const DEFAULT_BATCHES: usize = 50;
/// Default number of uniform histogram bins.
pub const DEFAULT_BINS: usize = 200;
/// Default number of logarithmic bins per decade for tail views.
pub const DEFAULT_LOG_BINS_PER_DECADE: usize = 20;

/// A finalized set of samples.
///
/// Samples are kept in insertion order (time order for a trajectory,
/// replica-index order for merged ensembles) because the batch-means error
/// bar needs it; a sorted copy is kept alongside for CDF-based statistics.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    ordered: Vec<f64>,
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(samples: Vec<f64>) -> Self {
        let mut sorted = samples.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        Self { ordered: samples, sorted }
    }

    /// Merge per-replica buffers, preserving replica-index order.
    pub fn from_parts(parts: Vec<Vec<f64>>) -> Self {
        let total = parts.iter().map(Vec::len).sum();
        let mut ordered = Vec::with_capacity(total);
        for part in parts {
            ordered.extend(part);
        }
        Self::new(ordered)
    }

    pub fn count(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }

    /// Samples in insertion order.
    pub fn samples(&self) -> &[f64] {
        &self.ordered
    }

    /// Non-decreasing view of the samples.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Right-continuous empirical CDF.
    pub fn ecdf(&self, x: f64) -> f64 {
        let n = self.sorted.len();
        if n == 0 {
            return 0.0;
        }
        let idx = self.sorted.partition_point(|&s| s <= x);
        idx as f64 / n as f64
    }

    /// 200 uniform bins on `[min(0, min_sample), 99.5th percentile]`;
    /// samples beyond the range are clamped into the edge bins so counts
    /// always sum to `n`.
    pub fn histogram(&self, bins: usize) -> Histogram {
        assert!(bins >= 1, "histogram needs at least one bin");
        let n = self.sorted.len();
        if n == 0 {
            return Histogram { edges: vec![0.0, 1.0], counts: vec![0] };
        }
        let lo = self.sorted[0].min(0.0);
        let q_idx = (((n as f64) * 0.995).ceil() as usize).clamp(1, n) - 1;
        let mut hi = self.sorted[q_idx];
        if hi <= lo {
            hi = lo + 1.0;
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for &x in &self.ordered {
            let i = (((x - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        Histogram { edges, counts }
    }

    /// Logarithmic bins for heavy-tail views; covers the strictly positive
    /// samples only.
    pub fn log_histogram(&self, bins_per_decade: usize) -> Histogram {
        assert!(bins_per_decade >= 1);
        let pos: Vec<f64> = self.sorted.iter().copied().filter(|&x| x > 0.0).collect();
        if pos.is_empty() {
            return Histogram { edges: vec![1.0, 10.0], counts: vec![0] };
        }
        let lo = pos[0].log10().floor();
        let hi = pos[pos.len() - 1].log10();
        let bins = (((hi - lo) * bins_per_decade as f64).ceil() as usize).max(1);
        let step = 1.0 / bins_per_decade as f64;
        let mut counts = vec![0u64; bins];
        for &x in &pos {
            let i = (((x.log10() - lo) / step) as usize).min(bins - 1);
            counts[i] += 1;
        }
        let edges = (0..=bins).map(|i| 10f64.powf(lo + step * i as f64)).collect();
        Histogram { edges, counts }
    }
}

/// Binned view of an empirical distribution.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    /// Bin edges, length `counts.len() + 1`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Normalized densities: `count / (n * bin_width)`.
    pub fn densities(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| if n > 0.0 { c as f64 / (n * (e[1] - e[0])) } else { 0.0 })
            .collect()
    }
}

/// Two-sided Kolmogorov-Smirnov distance between samples and a reference CDF.
///
/// The reference values are checked for monotonicity and range along the way;
/// a misbehaving reference is reported rather than silently clamped.
pub fn ks_distance<F: Fn(f64) -> f64>(emp: &EmpiricalDistribution, cdf: F) -> Result<f64> {
    let xs = emp.sorted();
    let n = xs.len();
    if n == 0 {
        return Err(Error::Domain("ks_distance needs at least one sample".into()));
    }
    let nf = n as f64;
    let mut sup: f64 = 0.0;
    let mut prev_f = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if !(-1e-9..=1.0 + 1e-9).contains(&f) {
            return Err(Error::Reference(format!("cdf({x}) = {f} outside [0, 1]")));
        }
        if f < prev_f - 1e-12 {
            return Err(Error::Reference(format!(
                "cdf not monotone: value {f} after {prev_f} at x = {x}"
            )));
        }
        prev_f = f;
        let below = (f - i as f64 / nf).abs();
        let above = ((i + 1) as f64 / nf - f).abs();
        sup = sup.max(below).max(above);
    }
    Ok(sup.min(1.0))
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("ks_two_sample needs non-empty samples".into()));
    }
    let (xs, ys) = (a.sorted(), b.sorted());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let (x, y) = (xs[i], ys[j]);
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(sup)
}

/// Result of a Hill tail fit: density exponent `gamma` in `P(w) ~ w^-gamma`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailFitResult {
    pub gamma_hat: f64,
    pub std_err: f64,
    /// Number of top order statistics used.
    pub k: usize,
    /// Fit threshold (the `(k+1)`-th largest sample).
    pub w_min: f64,
}

/// Hill maximum-likelihood estimator of the tail index, reported as the
/// density exponent `gamma = 1 + alpha`.
///
/// `k` defaults to the top decile, `n / 10`.
pub fn tail_exponent(emp: &EmpiricalDistribution, k: Option<usize>) -> Result<TailFitResult> {
    let xs = emp.sorted();
    let n = xs.len();
    if n < 100 {
        return Err(Error::Domain(format!("tail_exponent needs n >= 100, got {n}")));
    }
    let k = k.unwrap_or(n / 10);
    if k < 1 || k >= n {
        return Err(Error::Domain(format!("tail window k = {k} outside 1..{n}")));
    }
    let w_min = xs[n - 1 - k];
    if !(w_min > 0.0) {
        return Err(Error::Domain(format!(
            "non-positive sample {w_min} in the tail window"
        )));
    }
    let sum_log: f64 = xs[n - k..].iter().map(|&w| (w / w_min).ln()).sum();
    if !(sum_log > 0.0) {
        return Err(Error::Domain("zero log-spacings in the tail window".into()));
    }
    let alpha = k as f64 / sum_log;
    Ok(TailFitResult { gamma_hat: 1.0 + alpha, std_err: alpha / (k as f64).sqrt(), k, w_min })
}

/// Mean, standard deviation and a batch-means standard error of the mean.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    /// Standard error of the mean from batch means; accounts for
    /// autocorrelation in trajectory output.
    pub se_mean: f64,
    pub batches: usize,
}

pub fn moments(emp: &EmpiricalDistribution) -> Result<Moments> {
    moments_with_batches(emp, DEFAULT_BATCHES)
}

pub fn moments_with_batches(emp: &EmpiricalDistribution, batches: usize) -> Result<Moments> {
    let xs = emp.samples();
    let n = xs.len();
    if n < 10 || batches < 2 {
        return Err(Error::Domain(format!(
            "moments needs at least 10 samples and 2 batches, got n = {n}, batches = {batches}"
        )));
    }
    let b = batches.min(n);
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;

    let mut acc = BatchMeans::new(n as u64, b);
    for &x in xs {
        acc.push(x);
    }
    let se = acc.se_mean();
    Ok(Moments { mean, std: var.sqrt(), se_mean: se, batches: b })
}

/// Streaming batch-means accumulator over a known-length stream.
///
/// The stream is split into `batches` contiguous batches (the remainder is
/// folded into the last batch); the standard error of the mean is the
/// spread of the batch means over `sqrt(batches)`.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    batch_len: u64,
    batches: usize,
    seen: u64,
    total: f64,
    cur_sum: f64,
    cur_count: u64,
    means: Vec<f64>,
}

impl BatchMeans {
    pub fn new(stream_len: u64, batches: usize) -> Self {
        let batches = batches.max(1).min(stream_len.max(1) as usize);
        let batch_len = (stream_len / batches as u64).max(1);
        Self {
            batch_len,
            batches,
            seen: 0,
            total: 0.0,
            cur_sum: 0.0,
            cur_count: 0,
            means: Vec::with_capacity(batches),
        }
    }

    pub fn push(&mut self, x: f64) {
        self.seen += 1;
        self.total += x;
        self.cur_sum += x;
        self.cur_count += 1;
        if self.cur_count == self.batch_len && self.means.len() < self.batches - 1 {
            self.means.push(self.cur_sum / self.cur_count as f64);
            self.cur_sum = 0.0;
            self.cur_count = 0;
        }
    }

    pub fn count(&self) -> u64 {
        self.seen
    }

    /// Arithmetic mean over every pushed value.
    pub fn mean(&self) -> f64 {
        if self.seen == 0 {
            0.0
        } else {
            self.total / self.seen as f64
        }
    }

    pub fn se_mean(&self) -> f64 {
        let mut means = self.means.clone();
        if self.cur_count > 0 {
            means.push(self.cur_sum / self.cur_count as f64);
        }
        let b = means.len();
        if b < 2 {
            return 0.0;
        }
        let grand = means.iter().sum::<f64>() / b as f64;
        let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (b - 1) as f64;
        (var / b as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use rand::Rng;
    use rand_distr::Exp1;

    fn exp_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = replica_rng(seed, 0);
        (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect()
    }

    #[test]
    fn ks_on_null_samples_scales_like_inverse_sqrt_n() {
        let emp = EmpiricalDistribution::new(exp_samples(1_000_000, 1));
        let d = ks_distance(&emp, |x| 1.0 - (-x).exp()).unwrap();
        // 1.63/sqrt(n) is the 1% critical value; allow 1.5x headroom.
        assert!(d < 1.63 / 1000.0 * 1.5, "ks = {d}");
        assert!(d < 0.003);
    }

    #[test]
    fn ks_single_sample_at_median_is_half() {
        let emp = EmpiricalDistribution::new(vec![0.0]);
        let d = ks_distance(&emp, |_| 0.5).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ks_separates_exponential_from_gamma2() {
        // sup_x |CDF_exp - CDF_gamma2| = max_x x e^-x = 1/e at x = 1.
        let emp = EmpiricalDistribution::new(exp_samples(1_000_000, 2));
        let gamma2_cdf = |x: f64| 1.0 - (1.0 + x) * (-x).exp();
        let d = ks_distance(&emp, gamma2_cdf).unwrap();
        let expected = (-1.0f64).exp();
        assert!((d - expected).abs() < 0.01, "ks = {d}, expected ~{expected}");
        assert!(d > 0.15);
    }

    #[test]
    fn ks_is_invariant_under_monotone_reparameterization() {
        // Mapping samples and reference through the same strictly
        // increasing function leaves every ECDF/CDF pair untouched.
        let xs = exp_samples(10_000, 9);
        let direct = EmpiricalDistribution::new(xs.clone());
        let d1 = ks_distance(&direct, |x| 1.0 - (-x).exp()).unwrap();
        let transformed = EmpiricalDistribution::new(xs.iter().map(|x| x.sqrt()).collect());
        let d2 = ks_distance(&transformed, |y| 1.0 - (-(y * y)).exp()).unwrap();
        assert!((d1 - d2).abs() < 1e-12, "{d1} vs {d2}");
    }

    #[test]
    fn ks_rejects_non_monotone_reference() {
        let emp = EmpiricalDistribution::new(vec![0.0, 1.0, 2.0]);
        let err = ks_distance(&emp, |x| if x > 1.5 { 0.2 } else { 0.8 * x.max(0.0) });
        assert!(matches!(err, Err(Error::Reference(_))));
    }

    #[test]
    fn ks_two_sample_identical_is_zero() {
        let a = EmpiricalDistribution::new(vec![1.0, 2.0, 3.0, 4.0]);
        let b = EmpiricalDistribution::new(vec![4.0, 3.0, 2.0, 1.0]);
        assert_eq!(ks_two_sample(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn ks_two_sample_known_value() {
        let a = EmpiricalDistribution::new(vec![1.0, 1.0, 4.0, 4.0]);
        let b = EmpiricalDistribution::new(vec![1.0, 1.0, 1.0, 4.0]);
        assert!((ks_two_sample(&a, &b).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn hill_recovers_exact_pareto_exponent() {
        // Inverse-CDF oracle: w = 1/u has density 1/w^2 on w >= 1.
        let mut rng = replica_rng(3, 0);
        let ws: Vec<f64> = (0..1_000_000).map(|_| 1.0 / (1.0 - rng.random::<f64>())).collect();
        let fit = tail_exponent(&EmpiricalDistribution::new(ws), None).unwrap();
        assert!((fit.gamma_hat - 2.0).abs() < 0.01, "gamma = {}", fit.gamma_hat);
        assert!(fit.gamma_hat > 1.0);
        assert_eq!(fit.k, 100_000);
    }

    #[test]
    fn hill_is_scale_invariant() {
        let mut rng = replica_rng(4, 0);
        let ws: Vec<f64> = (0..10_000).map(|_| 1.0 / (1.0 - rng.random::<f64>())).collect();
        let scaled: Vec<f64> = ws.iter().map(|w| w * 137.0).collect();
        let a = tail_exponent(&EmpiricalDistribution::new(ws), Some(500)).unwrap();
        let b = tail_exponent(&EmpiricalDistribution::new(scaled), Some(500)).unwrap();
        assert!((a.gamma_hat - b.gamma_hat).abs() < 1e-9);
    }

    #[test]
    fn hill_rejects_degenerate_input() {
        let emp = EmpiricalDistribution::new(vec![1.0; 1000]);
        assert!(matches!(tail_exponent(&emp, None), Err(Error::Domain(_))));
        let emp = EmpiricalDistribution::new(vec![-1.0; 1000]);
        assert!(matches!(tail_exponent(&emp, None), Err(Error::Domain(_))));
    }

    #[test]
    fn moments_of_iid_exponential() {
        let emp = EmpiricalDistribution::new(exp_samples(1_000_000, 5));
        let m = moments(&emp).unwrap();
        assert!((m.mean - 1.0).abs() < 0.004, "mean = {}", m.mean);
        assert!((m.std - 1.0).abs() < 0.01);
        // iid: batch-means se should be close to std/sqrt(n) = 1e-3
        assert!(m.se_mean > 0.5e-3 && m.se_mean < 2.0e-3, "se = {}", m.se_mean);
    }

    #[test]
    fn moments_of_constant_samples() {
        let emp = EmpiricalDistribution::new(vec![3.0; 1000]);
        let m = moments(&emp).unwrap();
        assert_eq!(m.std, 0.0);
        assert_eq!(m.se_mean, 0.0);
        assert_eq!(m.mean, 3.0);
    }

    #[test]
    fn batch_se_inflates_for_autocorrelated_ar_trajectory() {
        // AR(1) with lambda = 0.5: asymptotic se inflation is
        // sqrt((1+lambda)/(1-lambda)) = sqrt(3) ~ 1.73 over the iid se.
        let lambda = 0.5;
        let mut rng = replica_rng(6, 0);
        let mut x = 2.0;
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                x = lambda * x + rng.sample::<f64, _>(Exp1);
                x
            })
            .collect();
        let emp = EmpiricalDistribution::new(xs);
        let m = moments(&emp).unwrap();
        assert!((m.mean - 2.0).abs() < 0.05, "mean = {}", m.mean);
        let iid_se = m.std / (n as f64).sqrt();
        let ratio = m.se_mean / iid_se;
        assert!((1.2..3.0).contains(&ratio), "se ratio = {ratio}");
    }

    #[test]
    fn batch_count_changes_error_bar_not_mean() {
        let emp = EmpiricalDistribution::new(exp_samples(10_000, 7));
        let a = moments_with_batches(&emp, 20).unwrap();
        let b = moments_with_batches(&emp, 100).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_ne!(a.se_mean, b.se_mean);
    }

    #[test]
    fn histogram_counts_sum_to_n() {
        let emp = EmpiricalDistribution::new(exp_samples(100_000, 8));
        let h = emp.histogram(DEFAULT_BINS);
        assert_eq!(h.total(), 100_000);
        assert_eq!(h.counts.len(), DEFAULT_BINS);
        assert_eq!(h.edges.len(), DEFAULT_BINS + 1);
        // densities integrate to ~1 (exact up to the clamped overflow bin)
        let integral: f64 = h
            .densities()
            .iter()
            .zip(h.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum();
        assert!((integral - 1.0).abs() < 1e-9);
    }

    #[test]
    fn log_histogram_covers_positive_range() {
        let emp = EmpiricalDistribution::new(vec![1.0, 10.0, 100.0, 999.0]);
        let h = emp.log_histogram(DEFAULT_LOG_BINS_PER_DECADE);
        assert_eq!(h.total(), 4);
        assert!(h.edges[0] <= 1.0 && *h.edges.last().unwrap() >= 999.0);
    }

    #[test]
    fn sorted_view_is_non_decreasing() {
        let emp = EmpiricalDistribution::new(vec![3.0, -1.0, 2.0, 2.0]);
        assert!(emp.sorted().windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(emp.samples(), &[3.0, -1.0, 2.0, 2.0]);
        assert_eq!(emp.ecdf(2.0), 0.75);
    }
}

//! One-sample Kolmogorov-Smirnov distance and its asymptotic p-value.

use crate::special::kolmogorov_sf;

/// sup |F_n(x) - F(x)| for the empirical CDF of `samples` against `cdf`.
///
/// NaN samples are ignored. Returns 0 for an empty sample.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|v| !v.is_nan()).collect();
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// KS distance to the uniform distribution on [0, 1].
pub fn ks_uniform(samples: &[f64]) -> f64 {
    ks_statistic(samples, |x| x.clamp(0.0, 1.0))
}

/// KS distance to the exponential distribution with the given mean.
pub fn ks_exponential(samples: &[f64], mean: f64) -> f64 {
    ks_statistic(
        samples,
        |x| if x <= 0.0 { 0.0 } else { -(-x / mean).exp_m1() },
    )
}

/// Asymptotic p-value of a KS distance `d` from `n` samples, with the
/// Stephens small-sample adjustment.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let sn = (n as f64).sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

//! Distribution helpers: chi-square tail, Kolmogorov-Smirnov distances, and
//! replicate summaries.

use statrs::function::gamma::{gamma_lr, gamma_ur};

/// Upper tail `P(chi2(df) >= stat)`, i.e. `Q(df/2, stat/2)`.
///
/// Returns 1 for `stat <= 0` and for `df = 0`.
pub fn chi_square_sf(stat: f64, df: usize) -> f64 {
    if df == 0 || stat <= 0.0 || stat.is_nan() {
        return 1.0;
    }
    if stat.is_infinite() {
        return 0.0;
    }
    gamma_ur(df as f64 / 2.0, stat / 2.0).clamp(0.0, 1.0)
}

pub fn chi_square_cdf(stat: f64, df: usize) -> f64 {
    if df == 0 || stat <= 0.0 {
        return 0.0;
    }
    if stat.is_infinite() {
        return 1.0;
    }
    gamma_lr(df as f64 / 2.0, stat / 2.0).clamp(0.0, 1.0)
}

/// Two-sided KS distance between the sample and a continuous cdf.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn ks_uniform_distance(p_values: &[f64]) -> f64 {
    ks_distance(p_values, |p| p.clamp(0.0, 1.0))
}

/// Asymptotic one-sample KS critical value at level `alpha`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Mean and standard error (sample standard deviation over `sqrt(len)`).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Fraction of p-values at or below `alpha`.
pub fn rejection_rate(p_values: &[f64], alpha: f64) -> f64 {
    p_values.iter().filter(|&&p| p <= alpha).count() as f64 / p_values.len() as f64
}

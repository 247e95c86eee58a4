//! Chain summaries: moments and effective sample size.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with denominator `n - 1`.
pub fn variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

fn autocovariance(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for t in 0..n - lag {
        s += (x[t] - m) * (x[t + lag] - m);
    }
    s / n as f64
}

/// Effective sample size by Geyer's initial monotone sequence estimator.
///
/// Autocorrelations are paired (`Γ_k = ρ_{2k} + ρ_{2k+1}`), truncated at the
/// first non-positive pair and forced to be non-increasing. The result is
/// capped at `n log10(n)` to keep antithetic chains from reporting absurd
/// values.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let m = mean(x);
    let c0 = autocovariance(x, m, 0);
    if !(c0 > 0.0) {
        return n as f64;
    }
    let mut pairs: Vec<f64> = Vec::new();
    let mut k = 0;
    while 2 * k + 1 < n {
        let g = (autocovariance(x, m, 2 * k) + autocovariance(x, m, 2 * k + 1)) / c0;
        if g <= 0.0 {
            break;
        }
        let g = match pairs.last() {
            Some(&prev) if g > prev => prev,
            _ => g,
        };
        pairs.push(g);
        k += 1;
    }
    let tau = (-1.0 + 2.0 * pairs.iter().sum::<f64>()).max(1.0 / (n as f64).log10());
    n as f64 / tau
}

/// Monte Carlo standard error of the mean accounting for autocorrelation.
pub fn mcse(x: &[f64]) -> f64 {
    (variance(x) / effective_sample_size(x)).sqrt()
}

/// Quantile by linear interpolation between order statistics (type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngdist::std_normal;
    use crate::RngStream;

    #[test]
    fn iid_ess_near_n() {
        let mut rng = RngStream::new(1, 0);
        let x: Vec<f64> = (0..20_000).map(|_| std_normal(&mut rng)).collect();
        let ess = effective_sample_size(&x);
        assert!(ess > 17_000.0 && ess < 23_000.0, "{ess}");
    }

    #[test]
    fn ar1_ess_matches_theory() {
        let mut rng = RngStream::new(2, 0);
        let phi: f64 = 0.9;
        let mut x = Vec::with_capacity(100_000);
        let mut v = 0.0;
        for _ in 0..100_000 {
            v = phi * v + std_normal(&mut rng);
            x.push(v);
        }
        let expected = 100_000.0 * (1.0 - phi) / (1.0 + phi);
        let ess = effective_sample_size(&x);
        assert!((ess / expected - 1.0).abs() < 0.2, "{ess} vs {expected}");
    }

    #[test]
    fn quantile_endpoints() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 1.0), 4.0);
        assert_eq!(quantile(&s, 0.5), 2.5);
    }
}

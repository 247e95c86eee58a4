//! Closed-form and quadrature-based laws used as references.

use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::quad::PositiveDensity;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// GIG(p, a, b): density ∝ x^{p-1} exp(-(a x + b/x)/2).
pub fn gig(p: f64, a: f64, b: f64) -> PositiveDensity<impl Fn(f64) -> f64> {
    PositiveDensity::new(move |x: f64| (p - 1.0) * x.ln() - 0.5 * (a * x + b / x))
}

/// Inverse gamma with density ∝ x^{-shape-1} exp(-rate/x).
pub fn inverse_gamma(shape: f64, rate: f64) -> PositiveDensity<impl Fn(f64) -> f64> {
    PositiveDensity::new(move |x: f64| (-shape - 1.0) * x.ln() - rate / x)
}

pub fn inverse_gamma_cdf(shape: f64, rate: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_ur(shape, rate / x)
    }
}

/// Gamma(shape, rate) truncated to `[lo, hi]`.
pub fn truncated_gamma(shape: f64, rate: f64, lo: f64, hi: f64) -> PositiveDensity<impl Fn(f64) -> f64> {
    PositiveDensity::new(move |x: f64| {
        if x < lo || x > hi {
            f64::NEG_INFINITY
        } else {
            (shape - 1.0) * x.ln() - rate * x
        }
    })
}

/// Inverse Gaussian CDF with mean `m` and shape `s`.
pub fn inverse_gaussian_cdf(m: f64, s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let r = (s / x).sqrt();
    let a = normal_cdf(r * (x / m - 1.0));
    // exp(2s/m) Φ(-r(x/m + 1)), combined in log space.
    let z = -r * (x / m + 1.0);
    let tail = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
    let b = if tail > 0.0 { (2.0 * s / m + tail.ln()).exp() } else { 0.0 };
    (a + b).clamp(0.0, 1.0)
}

/// Student-t log density with location and scale, written out directly.
pub fn student_t_logpdf(x: f64, dof: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof * std::f64::consts::PI).ln() - scale.ln()
        - 0.5 * (dof + 1.0) * (z * z / dof).ln_1p()
}

pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean) * (x - mean) / var)
}

/// Student-t quantile by bisection on the quadrature CDF of the density.
pub fn student_t_quantile(dof: f64, p: f64) -> f64 {
    let cdf = |q: f64| {
        let f = |x: f64| student_t_logpdf(x, dof, 0.0, 1.0).exp();
        // symmetric: integrate from 0 to |q|
        let half = crate::quad::integrate(f, 0.0, q.abs(), 2000);
        if q >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    };
    let (mut lo, mut hi) = (-200.0, 200.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mean of `log χ²₁` by quadrature over the χ²₁ density.
pub fn log_chi2_1_mean() -> f64 {
    let d = PositiveDensity::new(|x: f64| -0.5 * x.ln() - 0.5 * x);
    d.expect(f64::ln)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_gamma_cdf_matches_quadrature() {
        let d = inverse_gamma(2.5, 4.0);
        for x in [0.5, 1.0, 2.6, 10.0] {
            assert!((d.cdf(x) - inverse_gamma_cdf(2.5, 4.0, x)).abs() < 1e-9);
        }
        assert!((d.mean() - 4.0 / 1.5).abs() < 1e-9);
    }

    #[test]
    fn inverse_gaussian_cdf_matches_gig_quadrature() {
        let (m, s) = (0.7, 1.3);
        let d = gig(-0.5, s / (m * m), s);
        for x in [0.1, 0.5, 0.7, 2.0, 5.0] {
            assert!((d.cdf(x) - inverse_gaussian_cdf(m, s, x)).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn log_chi2_mean_is_digamma_identity() {
        // ψ(1/2) + ln 2
        assert!((log_chi2_1_mean() + 1.270_362_845_461_478).abs() < 1e-8);
    }

    #[test]
    fn t_quantile_median_and_cauchy() {
        assert!(student_t_quantile(5.0, 0.5).abs() < 1e-9);
        assert!((student_t_quantile(1.0, 0.75) - 1.0).abs() < 1e-6);
    }
}

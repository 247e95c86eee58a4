//! Student-t errors as Gaussian scale mixtures: auxiliary scale draws and the
//! degrees-of-freedom updates.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::math::{digamma, ln_gamma, normal_cdf, normal_quantile, trigamma};
use crate::rngdist::{draw_inverse_gamma, std_normal, uniform};
use crate::{Error, Result};

/// Gamma(shape, rate) prior on a degrees-of-freedom parameter, truncated to
/// `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofPrior {
    pub shape: f64,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Default for DofPrior {
    fn default() -> Self {
        DofPrior {
            shape: 1.0,
            rate: 0.1,
            lower: 2.0,
            upper: 50.0,
        }
    }
}

impl DofPrior {
    pub fn validate(&self) -> Result<()> {
        if self.shape > 0.0 && self.rate > 0.0 && self.lower > 0.0 && self.lower < self.upper && self.upper.is_finite() {
            Ok(())
        } else {
            Err(Error::param(alloc::format!("invalid degrees-of-freedom prior {self:?}")))
        }
    }

    pub fn contains(&self, nu: f64) -> bool {
        nu >= self.lower && nu <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofState {
    pub nu: f64,
    pub kappa: Vec<f64>,
}

/// `τ_t ~ IG((ν+1)/2, (ν + ε_t² e^{-h_t})/2)`.
pub fn draw_obs_scales<R: Rng + ?Sized>(resid: &[f64], h: &[f64], nu: f64, rng: &mut R) -> Result<Vec<f64>> {
    if resid.len() != h.len() {
        return Err(Error::dim("observation scales: residuals vs log-variances"));
    }
    resid
        .iter()
        .zip(h)
        .map(|(e, h)| draw_inverse_gamma(0.5 * (nu + 1.0), 0.5 * (nu + e * e * (-h).exp()), rng))
        .collect()
}

/// `ξ_t ~ IG((κ+1)/2, (κ + Δb_t²)/2)`.
pub fn draw_state_scales<R: Rng + ?Sized>(increments: &[f64], kappa: f64, rng: &mut R) -> Result<Vec<f64>> {
    increments
        .iter()
        .map(|d| draw_inverse_gamma(0.5 * (kappa + 1.0), 0.5 * (kappa + d * d), rng))
        .collect()
}

/// Sufficient statistic `Σ(log s + 1/s)` of a vector of IG(ν/2, ν/2) scales.
pub fn scale_statistic(scales: &[f64]) -> f64 {
    scales.iter().map(|s| s.ln() + 1.0 / s).sum()
}

/// Log-likelihood of `ν` given `n` IG(ν/2, ν/2) scales, up to a constant.
pub fn dof_loglik(n: usize, stat: f64, nu: f64) -> f64 {
    let n = n as f64;
    0.5 * n * nu * (0.5 * nu).ln() - n * ln_gamma(0.5 * nu) - 0.5 * nu * stat
}

/// Likelihood plus the Gamma log-prior (the truncation enters via bounds only).
pub fn dof_logdensity(scales: &[f64], nu: f64, prior: &DofPrior) -> f64 {
    dof_target(scales.len(), scale_statistic(scales), nu, prior)
}

fn dof_target(n: usize, stat: f64, nu: f64, prior: &DofPrior) -> f64 {
    dof_loglik(n, stat, nu) + (prior.shape - 1.0) * nu.ln() - prior.rate * nu
}

fn dof_gradient(n: usize, stat: f64, nu: f64, prior: &DofPrior) -> f64 {
    let n = n as f64;
    0.5 * n * (0.5 * nu).ln() + 0.5 * n - 0.5 * n * digamma(0.5 * nu) - 0.5 * stat + (prior.shape - 1.0) / nu - prior.rate
}

fn dof_hessian(n: usize, nu: f64, prior: &DofPrior) -> f64 {
    let n = n as f64;
    0.5 * n / nu - 0.25 * n * trigamma(0.5 * nu) - (prior.shape - 1.0) / (nu * nu)
}

const MODE_TOL: f64 = 1e-8;

/// Maximizer of the conditional on `[lower, upper]` by safeguarded Newton.
/// `None` if the iteration fails to converge.
pub fn dof_mode(n: usize, stat: f64, prior: &DofPrior) -> Option<f64> {
    let (mut lo, mut hi) = (prior.lower, prior.upper);
    let g_lo = dof_gradient(n, stat, lo, prior);
    let g_hi = dof_gradient(n, stat, hi, prior);
    if !g_lo.is_finite() || !g_hi.is_finite() {
        return None;
    }
    if g_lo <= 0.0 {
        return Some(lo);
    }
    if g_hi >= 0.0 {
        return Some(hi);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = dof_gradient(n, stat, x, prior);
        if g.abs() < MODE_TOL {
            return Some(x);
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let hess = dof_hessian(n, x, prior);
        let newton = x - g / hess;
        x = if hess < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-14 * hi {
            return Some(x);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofDraw {
    pub value: f64,
    pub accepted: bool,
}

/// Independence Metropolis-Hastings with a Gaussian proposal centred at the
/// conditional mode, variance from the observed information there, truncated
/// to the prior bounds. The truncation normalizer is the same for both
/// directions of the move and cancels.
pub fn update_dof<R: Rng + ?Sized>(scales: &[f64], current: f64, prior: &DofPrior, rng: &mut R) -> DofDraw {
    let n = scales.len();
    let stat = scale_statistic(scales);
    let keep = DofDraw {
        value: current,
        accepted: false,
    };
    let Some(mode) = dof_mode(n, stat, prior) else {
        log::warn!("degrees-of-freedom mode search did not converge; keeping {current}");
        return keep;
    };
    let width = prior.upper - prior.lower;
    let info = (-dof_hessian(n, mode, prior)).max(1.0 / (width * width));
    if !info.is_finite() {
        log::warn!("degrees-of-freedom information not finite; keeping {current}");
        return keep;
    }
    let sd = info.sqrt().recip();
    let proposal = truncated_normal(mode, sd, prior.lower, prior.upper, rng);
    let log_q = |x: f64| -0.5 * ((x - mode) / sd).powi(2);
    let log_ratio = dof_target(n, stat, proposal, prior) - dof_target(n, stat, current, prior) + log_q(current)
        - log_q(proposal);
    if uniform(rng).ln() < log_ratio {
        DofDraw {
            value: proposal,
            accepted: true,
        }
    } else {
        keep
    }
}

/// `N(mean, sd²)` restricted to `[lower, upper]`, by inversion.
pub fn truncated_normal<R: Rng + ?Sized>(mean: f64, sd: f64, lower: f64, upper: f64, rng: &mut R) -> f64 {
    let (a, b) = ((lower - mean) / sd, (upper - mean) / sd);
    // Invert in whichever tail keeps the CDF values away from 1.
    let (a, b, flip) = if a > 0.0 { (-b, -a, true) } else { (a, b, false) };
    let (pa, pb) = (normal_cdf(a), normal_cdf(b));
    let z = if pb - pa > 0.0 {
        normal_quantile(pa + uniform(rng) * (pb - pa)).clamp(a, b)
    } else {
        // Interval too deep in a tail to invert; a uniform draw stays valid
        // as a proposal only in this degenerate limit.
        a + (b - a) * uniform(rng)
    };
    let z = if flip { -z } else { z };
    (mean + sd * z).clamp(lower, upper)
}

/// Prior draw from the truncated Gamma by rejection.
pub fn draw_dof_prior<R: Rng + ?Sized>(prior: &DofPrior, rng: &mut R) -> Result<f64> {
    prior.validate()?;
    for _ in 0..100_000 {
        let x = crate::rngdist::draw_gamma(prior.shape, prior.rate, rng)?;
        if prior.contains(x) {
            return Ok(x);
        }
    }
    Err(Error::param("degrees-of-freedom prior has negligible mass on its bounds"))
}

/// Student-t variate with `dof` degrees of freedom through its scale mixture.
pub fn draw_student_t<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> Result<f64> {
    if dof.is_infinite() {
        return Ok(std_normal(rng));
    }
    let tau = draw_inverse_gamma(0.5 * dof, 0.5 * dof, rng)?;
    Ok(tau.sqrt() * std_normal(rng))
}

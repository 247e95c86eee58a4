//! Log-volatility path and AR(1) parameters via the 10-component auxiliary
//! mixture for `log χ²₁`, with ancillarity-sufficiency interweaving.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::linalg;
use crate::math::{ln_gamma, normal_logpdf};
use crate::rngdist::{draw_beta, draw_gamma, draw_gig, std_normal, uniform, GigParams};
use crate::{Error, Result};

/// Mixture approximation of the `log χ²₁` density (Omori, Chib, Shephard &
/// Nakajima, 2007): weights, means and variances.
pub const MIX_WEIGHTS: [f64; 10] = [
    0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115,
];
pub const MIX_MEANS: [f64; 10] = [
    1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000,
];
pub const MIX_VARS: [f64; 10] = [
    0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342,
];

/// Added to squared residuals before taking logs so exact zeros stay finite.
pub const DEFAULT_LOG_OFFSET: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvParams {
    pub mu: f64,
    pub rho: f64,
    pub sigma2: f64,
}

impl SvParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() < 1.0) || !(self.sigma2 >= 0.0) || !self.mu.is_finite() || !self.sigma2.is_finite() {
            return Err(Error::param(alloc::format!(
                "SV parameters need |rho| < 1 and sigma2 >= 0, got {:?}",
                self
            )));
        }
        Ok(())
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma2 / (1.0 - self.rho * self.rho)
    }
}

/// `μ ~ N(mu_mean, mu_sd²)`, `(ρ+1)/2 ~ Beta(rho_a, rho_b)`,
/// `σ²_h ~ Gamma(sigma2_shape, rate sigma2_rate)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvPriors {
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub rho_a: f64,
    pub rho_b: f64,
    pub sigma2_shape: f64,
    pub sigma2_rate: f64,
}

impl Default for SvPriors {
    fn default() -> Self {
        SvPriors {
            mu_mean: 0.0,
            mu_sd: 10.0,
            rho_a: 25.0,
            rho_b: 5.0,
            sigma2_shape: 0.5,
            sigma2_rate: 0.5,
        }
    }
}

impl SvPriors {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mu_mean.is_finite()
            && self.mu_sd > 0.0
            && self.rho_a > 0.0
            && self.rho_b > 0.0
            && self.sigma2_shape > 0.0
            && self.sigma2_rate > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::param("SV prior hyperparameters must be positive"))
        }
    }

    fn rho_log_prior(&self, rho: f64) -> f64 {
        (self.rho_a - 1.0) * (0.5 * (1.0 + rho)).ln() + (self.rho_b - 1.0) * (0.5 * (1.0 - rho)).ln()
    }

    /// Non-centered σ ~ N(0, 1/(2·rate)) matches the Gamma prior only for shape 1/2.
    fn supports_interweaving(&self) -> bool {
        self.sigma2_shape == 0.5
    }

    pub fn mean_rho(&self) -> f64 {
        2.0 * self.rho_a / (self.rho_a + self.rho_b) - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvConfig {
    pub priors: SvPriors,
    pub log_offset: f64,
    pub interweave: bool,
}

impl Default for SvConfig {
    fn default() -> Self {
        SvConfig {
            priors: SvPriors::default(),
            log_offset: DEFAULT_LOG_OFFSET,
            interweave: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvState {
    /// `h_0, …, h_T`.
    pub h: Vec<f64>,
    pub params: SvParams,
    pub indicators: Vec<u8>,
}

impl SvState {
    pub fn constant(t_len: usize, level: f64, params: SvParams) -> Self {
        SvState {
            h: vec![level; t_len + 1],
            params,
            indicators: vec![4; t_len],
        }
    }

    /// `h_1, …, h_T`, aligned with observations.
    pub fn path(&self) -> &[f64] {
        &self.h[1..]
    }

    pub fn last(&self) -> f64 {
        *self.h.last().expect("h has at least h_0")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SvStats {
    pub level_persistence_accepted: bool,
}

/// Posterior component probabilities of one transformed observation.
pub fn indicator_probabilities(y_star: f64, h: f64) -> [f64; 10] {
    let mut lp = [0.0; 10];
    for j in 0..10 {
        lp[j] = MIX_WEIGHTS[j].ln() + normal_logpdf(y_star, h + MIX_MEANS[j], MIX_VARS[j]);
    }
    let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in lp.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in lp.iter_mut() {
        *v /= sum;
    }
    lp
}

fn draw_indicators<R: Rng + ?Sized>(y_star: &[f64], h: &[f64], out: &mut [u8], rng: &mut R) {
    for t in 0..y_star.len() {
        let probs = indicator_probabilities(y_star[t], h[t]);
        let u = uniform(rng);
        let mut acc = 0.0;
        let mut pick = 9;
        for (j, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = j;
                break;
            }
        }
        out[t] = pick as u8;
    }
}

/// Tridiagonal posterior precision and linear term of `h_0..h_T` given
/// Gaussian pseudo-observations `y_adj_t = h_t + N(0, obs_var_t)`, t = 1..T.
fn log_vol_system(y_adj: &[f64], obs_var: &[f64], params: &SvParams) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = y_adj.len() + 1;
    let SvParams { mu, rho, sigma2 } = *params;
    let inv = 1.0 / sigma2;
    let mut diag = vec![(1.0 + rho * rho) * inv; n];
    diag[0] = inv;
    if n > 1 {
        diag[n - 1] = inv;
    }
    let off = vec![-rho * inv; n - 1];
    // prior linear term Q (μ 1)
    let mut lin: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = diag[i] * mu;
            if i > 0 {
                s += off[i - 1] * mu;
            }
            if i + 1 < n {
                s += off[i] * mu;
            }
            s
        })
        .collect();
    for t in 1..n {
        diag[t] += 1.0 / obs_var[t - 1];
        lin[t] += y_adj[t - 1] / obs_var[t - 1];
    }
    (diag, off, lin)
}

/// Conditional mean of `h_0..h_T` given Gaussian pseudo-observations.
pub fn log_vol_posterior_mean(y_adj: &[f64], obs_var: &[f64], params: &SvParams) -> Result<Vec<f64>> {
    let (diag, off, mut lin) = log_vol_system(y_adj, obs_var, params);
    let (ld, ls) = linalg::tridiag_cholesky(&diag, &off).map_err(|i| Error::Numerical {
        context: "log-volatility precision",
        index: i,
    })?;
    linalg::tridiag_solve_lower(&ld, &ls, &mut lin);
    linalg::tridiag_solve_upper(&ld, &ls, &mut lin);
    Ok(lin)
}

/// Joint draw of `h_0..h_T` given Gaussian pseudo-observations.
pub fn draw_log_vol<R: Rng + ?Sized>(
    y_adj: &[f64],
    obs_var: &[f64],
    params: &SvParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if y_adj.len() != obs_var.len() {
        return Err(Error::dim("log-volatility pseudo-observations and variances"));
    }
    let (diag, off, mut lin) = log_vol_system(y_adj, obs_var, params);
    let (ld, ls) = linalg::tridiag_cholesky(&diag, &off).map_err(|i| Error::Numerical {
        context: "log-volatility precision",
        index: i,
    })?;
    linalg::tridiag_solve_lower(&ld, &ls, &mut lin);
    for v in lin.iter_mut() {
        *v += std_normal(rng);
    }
    linalg::tridiag_solve_upper(&ld, &ls, &mut lin);
    Ok(lin)
}

/// One update of `(h, μ, ρ, σ²_h)` given `scaled_resid_t ~ N(0, e^{h_t})`.
pub fn draw_sv_block<R: Rng + ?Sized>(
    scaled_resid: &[f64],
    state: &mut SvState,
    config: &SvConfig,
    rng: &mut R,
) -> Result<SvStats> {
    let t_len = scaled_resid.len();
    if t_len == 0 {
        return Err(Error::param("stochastic volatility needs at least one observation"));
    }
    if state.h.len() != t_len + 1 || state.indicators.len() != t_len {
        return Err(Error::dim(alloc::format!(
            "SV state holds {} log-variances for {} observations",
            state.h.len(),
            t_len
        )));
    }
    let priors = &config.priors;
    let y_star: Vec<f64> = scaled_resid
        .iter()
        .map(|e| (e * e + config.log_offset).max(f64::MIN_POSITIVE).ln())
        .collect();

    draw_indicators(&y_star, &state.h[1..], &mut state.indicators, rng);
    let comp_var: Vec<f64> = state.indicators.iter().map(|&r| MIX_VARS[r as usize]).collect();
    let y_adj: Vec<f64> = y_star
        .iter()
        .zip(&state.indicators)
        .map(|(y, &r)| y - MIX_MEANS[r as usize])
        .collect();

    state.h = draw_log_vol(&y_adj, &comp_var, &state.params, rng)?;

    // Centered parameterization.
    state.params.sigma2 = draw_sigma2_centered(&state.h, &state.params, priors, rng)?;
    let accepted = update_level_persistence(&state.h, &mut state.params, priors, rng);

    // Non-centered parameterization: (μ, σ) | h̃, y*, r is bivariate Gaussian.
    if config.interweave && priors.supports_interweaving() {
        interweave_level_scale(&y_adj, &comp_var, state, priors, rng)?;
    }

    Ok(SvStats {
        level_persistence_accepted: accepted,
    })
}

fn ar_sum_of_squares(h: &[f64], p: &SvParams) -> f64 {
    let mut ss = (1.0 - p.rho * p.rho) * (h[0] - p.mu) * (h[0] - p.mu);
    for t in 1..h.len() {
        let e = h[t] - p.mu - p.rho * (h[t - 1] - p.mu);
        ss += e * e;
    }
    ss
}

fn draw_sigma2_centered<R: Rng + ?Sized>(
    h: &[f64],
    params: &SvParams,
    priors: &SvPriors,
    rng: &mut R,
) -> Result<f64> {
    let n = h.len() as f64;
    let ss = ar_sum_of_squares(h, params).max(1e-300);
    let gig = GigParams::new(priors.sigma2_shape - 0.5 * n, 2.0 * priors.sigma2_rate, ss)?;
    Ok(draw_gig(gig, rng).max(1e-300))
}

const PROPOSAL_PRIOR_VAR: f64 = 1e4;

/// Independence MH for `(μ, ρ)`: propose `(γ, ρ)` = `(μ(1-ρ), ρ)` from the
/// Gaussian AR(1) regression of `h_t` on `(1, h_{t-1})`; the stationary
/// initial term, both priors and the Jacobian `1/(1-ρ)` enter the ratio.
fn update_level_persistence<R: Rng + ?Sized>(
    h: &[f64],
    params: &mut SvParams,
    priors: &SvPriors,
    rng: &mut R,
) -> bool {
    let sigma2 = params.sigma2;
    let (mut s1, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in 1..h.len() {
        s1 += 1.0;
        sx += h[t - 1];
        sxx += h[t - 1] * h[t - 1];
        sy += h[t];
        sxy += h[t - 1] * h[t];
    }
    let p00 = s1 / sigma2 + 1.0 / PROPOSAL_PRIOR_VAR;
    let p01 = sx / sigma2;
    let p11 = sxx / sigma2 + 1.0 / PROPOSAL_PRIOR_VAR;
    let det = p00 * p11 - p01 * p01;
    if !(det > 0.0) || !det.is_finite() {
        return false;
    }
    let (c00, c01, c11) = (p11 / det, -p01 / det, p00 / det);
    let (b0, b1) = (sy / sigma2, sxy / sigma2);
    let mean = (c00 * b0 + c01 * b1, c01 * b0 + c11 * b1);
    let l00 = c00.sqrt();
    let l10 = c01 / l00;
    let l11 = (c11 - l10 * l10).max(0.0).sqrt();
    let (z0, z1) = (std_normal(rng), std_normal(rng));
    let gamma_new = mean.0 + l00 * z0;
    let rho_new = mean.1 + l10 * z0 + l11 * z1;
    if !(rho_new.abs() < 1.0) {
        return false;
    }
    let mu_new = gamma_new / (1.0 - rho_new);

    let log_weight = |mu: f64, rho: f64| {
        let gamma = mu * (1.0 - rho);
        normal_logpdf(h[0], mu, sigma2 / (1.0 - rho * rho))
            + normal_logpdf(mu, priors.mu_mean, priors.mu_sd * priors.mu_sd)
            + priors.rho_log_prior(rho)
            - (1.0 - rho).ln()
            - normal_logpdf(gamma, 0.0, PROPOSAL_PRIOR_VAR)
            - normal_logpdf(rho, 0.0, PROPOSAL_PRIOR_VAR)
    };
    let log_ratio = log_weight(mu_new, rho_new) - log_weight(params.mu, params.rho);
    if uniform(rng).ln() < log_ratio {
        params.mu = mu_new;
        params.rho = rho_new;
        true
    } else {
        false
    }
}

fn interweave_level_scale<R: Rng + ?Sized>(
    y_adj: &[f64],
    comp_var: &[f64],
    state: &mut SvState,
    priors: &SvPriors,
    rng: &mut R,
) -> Result<()> {
    let SvParams { mu, sigma2, .. } = state.params;
    let sigma = sigma2.sqrt();
    let h_tilde: Vec<f64> = state.h.iter().map(|h| (h - mu) / sigma).collect();
    // Regress y_adj_t on (1, h̃_t) with precision weights 1/comp_var_t.
    let sigma_prior_var = 0.5 / priors.sigma2_rate;
    let mut p00 = 1.0 / (priors.mu_sd * priors.mu_sd);
    let mut p01 = 0.0;
    let mut p11 = 1.0 / sigma_prior_var;
    let mut b0 = priors.mu_mean / (priors.mu_sd * priors.mu_sd);
    let mut b1 = 0.0;
    for t in 0..y_adj.len() {
        let w = 1.0 / comp_var[t];
        let x = h_tilde[t + 1];
        p00 += w;
        p01 += w * x;
        p11 += w * x * x;
        b0 += w * y_adj[t];
        b1 += w * x * y_adj[t];
    }
    let det = p00 * p11 - p01 * p01;
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Numerical {
            context: "non-centered level/scale precision",
            index: 0,
        });
    }
    let (c00, c01, c11) = (p11 / det, -p01 / det, p00 / det);
    let mean = (c00 * b0 + c01 * b1, c01 * b0 + c11 * b1);
    let l00 = c00.sqrt();
    let l10 = c01 / l00;
    let l11 = (c11 - l10 * l10).max(0.0).sqrt();
    let (z0, z1) = (std_normal(rng), std_normal(rng));
    let mu_new = mean.0 + l00 * z0;
    let sigma_new = mean.1 + l10 * z0 + l11 * z1;
    let sigma2_new = sigma_new * sigma_new;
    if !(sigma2_new > 0.0) || !sigma2_new.is_finite() {
        return Ok(());
    }
    for (h, ht) in state.h.iter_mut().zip(&h_tilde) {
        *h = mu_new + sigma_new * ht;
    }
    state.params.mu = mu_new;
    state.params.sigma2 = sigma2_new;
    Ok(())
}

/// `h_{T+1} ~ N(μ + ρ(h_T − μ), σ²_h)`.
pub fn sv_forecast<R: Rng + ?Sized>(h_last: f64, params: &SvParams, rng: &mut R) -> f64 {
    let mean = params.mu + params.rho * (h_last - params.mu);
    if params.sigma2 == 0.0 {
        mean
    } else {
        mean + params.sigma2.sqrt() * std_normal(rng)
    }
}

/// Draw `(μ, ρ, σ²_h)` from the prior.
pub fn draw_sv_params<R: Rng + ?Sized>(priors: &SvPriors, rng: &mut R) -> Result<SvParams> {
    let mu = priors.mu_mean + priors.mu_sd * std_normal(rng);
    let rho = 2.0 * draw_beta(priors.rho_a, priors.rho_b, rng)? - 1.0;
    let sigma2 = draw_gamma(priors.sigma2_shape, priors.sigma2_rate, rng)?;
    Ok(SvParams {
        mu,
        rho: rho.clamp(-1.0 + 1e-12, 1.0 - 1e-12),
        sigma2: sigma2.max(1e-300),
    })
}

/// Simulate `h_0..h_T` from the stationary AR(1) law.
pub fn simulate_log_vol<R: Rng + ?Sized>(t_len: usize, params: &SvParams, rng: &mut R) -> Vec<f64> {
    let mut h = Vec::with_capacity(t_len + 1);
    h.push(params.mu + params.stationary_variance().sqrt() * std_normal(rng));
    for t in 1..=t_len {
        let prev = h[t - 1];
        h.push(sv_forecast(prev, params, rng));
    }
    h
}

/// Log of the Beta(ρ_a, ρ_b) normalizing constant; exposed for tests that
/// compare prior moments.
pub fn rho_prior_log_norm(priors: &SvPriors) -> f64 {
    ln_gamma(priors.rho_a) + ln_gamma(priors.rho_b) - ln_gamma(priors.rho_a + priors.rho_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;

    #[test]
    fn mixture_weights_sum_to_one() {
        let s: f64 = MIX_WEIGHTS.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indicator_probabilities_normalize() {
        for &(y, h) in &[(-20.0, 0.0), (0.0, 0.0), (3.0, -5.0), (-1.2704, 1.0)] {
            let p = indicator_probabilities(y, h);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn forecast_without_noise_is_deterministic() {
        let p = SvParams {
            mu: -1.0,
            rho: 0.9,
            sigma2: 0.0,
        };
        let mut rng = RngStream::new(0, 0);
        assert_eq!(sv_forecast(0.5, &p, &mut rng), -1.0 + 0.9 * 1.5);
    }

    #[test]
    fn degenerate_state_equation_pins_path_to_level() {
        let params = SvParams {
            mu: -2.0,
            rho: 0.0,
            sigma2: 1e-14,
        };
        let y_adj = [3.0, -4.0, 0.5, 1.0];
        let m = log_vol_posterior_mean(&y_adj, &[1.0; 4], &params).unwrap();
        assert!(m.iter().all(|h| (h + 2.0).abs() < 1e-6), "{m:?}");
    }

    #[test]
    fn block_rejects_empty_input() {
        let mut state = SvState::constant(
            0,
            0.0,
            SvParams {
                mu: 0.0,
                rho: 0.5,
                sigma2: 0.1,
            },
        );
        let mut rng = RngStream::new(0, 0);
        assert!(draw_sv_block(&[], &mut state, &SvConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn block_keeps_parameters_in_support() {
        let mut rng = RngStream::new(11, 0);
        let params = SvParams {
            mu: -1.0,
            rho: 0.95,
            sigma2: 0.05,
        };
        let h = simulate_log_vol(60, &params, &mut rng);
        let y: Vec<f64> = h[1..].iter().map(|h| (h / 2.0).exp() * std_normal(&mut rng)).collect();
        let mut state = SvState::constant(60, -1.0, params);
        for _ in 0..500 {
            draw_sv_block(&y, &mut state, &SvConfig::default(), &mut rng).unwrap();
            assert!(state.params.rho.abs() < 1.0);
            assert!(state.params.sigma2 > 0.0);
            assert!(state.h.iter().all(|x| x.is_finite()));
        }
    }
}

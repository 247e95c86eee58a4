//! Dirichlet-Laplace prior on the static coefficients `α = (β₀', √v')'`.
//!
//! Hierarchy: `α_j | ψ, φ, λ ~ N(0, ψ_j φ_j² λ²)`, `ψ_j ~ Exp(1/2)`,
//! `φ ~ Dir(a, …, a)`, `λ ~ Gamma(n a, rate 1/2)`.
//!
//! The scale updates are run as a blocked draw of `(φ, λ, ψ) | α`: first
//! `φ | α` with `ψ, λ` integrated out, then `λ | α, φ` with `ψ` integrated
//! out, then `ψ | α, φ, λ`. That order is what makes the collapsed
//! conditionals legitimate.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::linalg::{self, Mat};
use crate::rngdist::{draw_dirichlet, draw_gamma, draw_gig, std_normal, GigParams};
use crate::{Error, Result};

/// Stand-in for `|α_j|` when a coefficient is exactly zero, so every GIG
/// parameter stays positive. Nonzero values are used as they are: clamping
/// small ones would cut off the near-zero mass the DL prior is built to hold.
pub const ALPHA_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DlState {
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    pub lambda: f64,
    pub a: f64,
}

impl DlState {
    /// Neutral starting point: equal allocation, unit local and global scales.
    pub fn new(n: usize, a: f64) -> Self {
        DlState {
            psi: vec![1.0; n],
            phi: vec![1.0 / n as f64; n],
            lambda: 1.0,
            a,
        }
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// Prior variances `ψ_j φ_j² λ²`.
    pub fn prior_var(&self) -> Vec<f64> {
        self.psi
            .iter()
            .zip(&self.phi)
            .map(|(psi, phi)| psi * phi * phi * self.lambda * self.lambda)
            .collect()
    }
}

/// Linear model `response = design · α + N(0, diag(noise_var))`.
#[derive(Debug, Clone, Copy)]
pub struct WeightedRegression<'a> {
    pub response: &'a [f64],
    pub design: &'a Mat,
    pub noise_var: &'a [f64],
}

impl WeightedRegression<'_> {
    fn validate(&self) -> Result<()> {
        let t = self.response.len();
        if self.design.rows() != t || self.noise_var.len() != t {
            return Err(Error::dim(alloc::format!(
                "regression with {} responses, {}x{} design, {} variances",
                t,
                self.design.rows(),
                self.design.cols(),
                self.noise_var.len()
            )));
        }
        if let Some(i) = self.noise_var.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::param(alloc::format!("noise variance at row {i} is not positive")));
        }
        Ok(())
    }

    /// `S X'WX S + I` and `S X'W y` for `S = diag(scale)`.
    fn scaled_system(&self, scale: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.design.cols();
        let mut prec = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for t in 0..self.response.len() {
            let row = self.design.row(t);
            let w = 1.0 / self.noise_var[t];
            for i in 0..n {
                let xi = row[i] * scale[i] * w;
                if xi == 0.0 {
                    continue;
                }
                rhs[i] += xi * self.response[t];
                for j in 0..=i {
                    prec[i * n + j] += xi * row[j] * scale[j];
                }
            }
        }
        for i in 0..n {
            prec[i * n + i] += 1.0;
            for j in 0..i {
                prec[j * n + i] = prec[i * n + j];
            }
        }
        (prec, rhs)
    }
}

fn prior_scales(prior_var: &[f64]) -> Result<Vec<f64>> {
    prior_var
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            if v >= 0.0 && v.is_finite() {
                Ok(v.sqrt())
            } else {
                Err(Error::param(alloc::format!("prior variance {j} is {v}")))
            }
        })
        .collect()
}

/// Gaussian posterior mean of `α` (exposed for oracle comparisons).
pub fn alpha_posterior_mean(reg: &WeightedRegression<'_>, prior_var: &[f64]) -> Result<Vec<f64>> {
    reg.validate()?;
    let n = reg.design.cols();
    if prior_var.len() != n {
        return Err(Error::dim("prior variances vs design columns"));
    }
    let scale = prior_scales(prior_var)?;
    let (mut prec, mut rhs) = reg.scaled_system(&scale);
    linalg::cholesky(&mut prec, n).map_err(|i| Error::Numerical {
        context: "coefficient posterior precision",
        index: i,
    })?;
    linalg::solve_lower(&prec, n, &mut rhs);
    linalg::solve_lower_transpose(&prec, n, &mut rhs);
    Ok(rhs.iter().zip(&scale).map(|(z, s)| z * s).collect())
}

/// Exact draw from the Gaussian conditional of `α`.
///
/// Works in the prior-standardized coordinates `α = S z`, `S = diag(√prior_var)`,
/// so the precision `S X'WX S + I` stays well conditioned when some prior
/// variances are tiny (or exactly zero, which pins that coefficient at zero).
pub fn draw_alpha<R: Rng + ?Sized>(
    reg: &WeightedRegression<'_>,
    prior_var: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    reg.validate()?;
    let n = reg.design.cols();
    if prior_var.len() != n {
        return Err(Error::dim("prior variances vs design columns"));
    }
    let scale = prior_scales(prior_var)?;
    let (mut prec, mut z) = reg.scaled_system(&scale);
    linalg::cholesky(&mut prec, n).map_err(|i| Error::Numerical {
        context: "coefficient posterior precision",
        index: i,
    })?;
    linalg::solve_lower(&prec, n, &mut z);
    for v in z.iter_mut() {
        *v += std_normal(rng);
    }
    linalg::solve_lower_transpose(&prec, n, &mut z);
    Ok(z.iter().zip(&scale).map(|(z, s)| z * s).collect())
}

#[inline]
fn floored(x: f64) -> f64 {
    if x == 0.0 {
        ALPHA_FLOOR
    } else {
        x.abs()
    }
}

/// `ψ_j = 1/r_j` with `r_j ~ iG(φ_j λ / |α_j|, 1)`.
///
/// Drawn in the equivalent form `ψ_j ~ GIG(1/2, 1, (α_j / φ_j λ)²)`, which
/// stays well conditioned when `|α_j|` is tiny and the inverse-Gaussian mean
/// overflows. When even `(α_j / φ_j λ)²` overflows the law has relative spread
/// below 1e-77 around `|α_j| / φ_j λ`, which is returned instead.
pub fn draw_local_scales<R: Rng + ?Sized>(
    alpha: &[f64],
    phi: &[f64],
    lambda: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if alpha.len() != phi.len() {
        return Err(Error::dim("local scales: alpha vs phi"));
    }
    alpha
        .iter()
        .zip(phi)
        .map(|(&al, &ph)| {
            let ratio = floored(al) / (ph * lambda);
            let b = ratio * ratio;
            if !b.is_finite() {
                return Ok(ratio.min(f64::MAX));
            }
            let params = GigParams::new(0.5, 1.0, b)?;
            Ok(draw_gig(params, rng).min(f64::MAX))
        })
        .collect()
}

/// `λ ~ GIG(n(a − 1), 1, 2 Σ|α_j|/φ_j)`.
pub fn draw_global_scale<R: Rng + ?Sized>(alpha: &[f64], phi: &[f64], a: f64, rng: &mut R) -> Result<f64> {
    let params = global_scale_params(alpha, phi, a)?;
    Ok(draw_gig(params, rng).max(f64::MIN_POSITIVE))
}

pub fn global_scale_params(alpha: &[f64], phi: &[f64], a: f64) -> Result<GigParams> {
    if alpha.len() != phi.len() {
        return Err(Error::dim("global scale: alpha vs phi"));
    }
    let n = alpha.len() as f64;
    let b: f64 = alpha.iter().zip(phi).map(|(al, ph)| floored(*al) / ph).sum();
    GigParams::new(n * (a - 1.0), 1.0, 2.0 * b)
}

/// `φ = T / ΣT` with independent `T_j ~ GIG(a − 1, 1, 2|α_j|)`.
pub fn draw_phi<R: Rng + ?Sized>(alpha: &[f64], a: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut t = alpha
        .iter()
        .map(|&al| GigParams::new(a - 1.0, 1.0, 2.0 * floored(al)).map(|p| draw_gig(p, rng)))
        .collect::<Result<Vec<_>>>()?;
    let sum: f64 = t.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::Numerical {
            context: "Dirichlet allocation normalizer",
            index: 0,
        });
    }
    for v in t.iter_mut() {
        *v = (*v / sum).max(f64::MIN_POSITIVE);
    }
    Ok(t)
}

/// Blocked update of `(φ, λ, ψ)` given `α`.
pub fn update_dl<R: Rng + ?Sized>(alpha: &[f64], state: &mut DlState, rng: &mut R) -> Result<()> {
    state.phi = draw_phi(alpha, state.a, rng)?;
    state.lambda = draw_global_scale(alpha, &state.phi, state.a, rng)?;
    state.psi = draw_local_scales(alpha, &state.phi, state.lambda, rng)?;
    Ok(())
}

/// Ancestral draw of `(ψ, φ, λ)` and `α` from the prior.
pub fn draw_dl_prior<R: Rng + ?Sized>(n: usize, a: f64, rng: &mut R) -> Result<(DlState, Vec<f64>)> {
    if n == 0 || !(a > 0.0) {
        return Err(Error::param("DL prior needs n >= 1 and a > 0"));
    }
    let phi = draw_dirichlet(&vec![a; n], rng)?;
    let lambda = draw_gamma(n as f64 * a, 0.5, rng)?.max(f64::MIN_POSITIVE);
    let psi = (0..n).map(|_| draw_gamma(1.0, 0.5, rng)).collect::<Result<Vec<_>>>()?;
    let state = DlState { psi, phi, lambda, a };
    let alpha = state
        .prior_var()
        .iter()
        .map(|v| v.sqrt() * std_normal(rng))
        .collect();
    Ok((state, alpha))
}

//! Forward filtering, backward sampling for the non-centered coefficient paths.
//!
//! Observation: `obs_t = Σ_j loadings_tj b_tj + e_t`, `e_t ~ N(0, obs_var_t)`.
//! State: `b_t = b_{t-1} + η_t`, `η_t ~ N(0, diag(state_var_t))`, `b_0 = 0`.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::linalg::{self, Mat};
use crate::math::LN_2PI;
use crate::rngdist::{draw_gig, std_normal, GigParams};
use crate::{Error, Result};

const PSD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct SsmInputs<'a> {
    pub obs: &'a [f64],
    /// T×K, row t holds `√v_j X_jt`.
    pub loadings: &'a Mat,
    pub obs_var: &'a [f64],
    /// T×K innovation variances.
    pub state_var: &'a Mat,
}

impl SsmInputs<'_> {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.loadings.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.obs.len();
        let k = self.loadings.cols();
        if self.loadings.rows() != t
            || self.obs_var.len() != t
            || self.state_var.rows() != t
            || self.state_var.cols() != k
        {
            return Err(Error::dim(alloc::format!(
                "state-space inputs: obs {t}, loadings {}x{}, obs_var {}, state_var {}x{}",
                self.loadings.rows(),
                k,
                self.obs_var.len(),
                self.state_var.rows(),
                self.state_var.cols()
            )));
        }
        if let Some(i) = self.obs_var.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::param(alloc::format!("observation variance at t={i} is not positive")));
        }
        if let Some(i) = self.state_var.as_slice().iter().position(|&q| !(q > 0.0 && q.is_finite())) {
            return Err(Error::param(alloc::format!("state variance at t={} is not positive", i / k.max(1))));
        }
        Ok(())
    }
}

/// Filtered means and covariances `m_t`, `C_t` plus the log-likelihood.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub mean: Mat,
    /// `T` blocks of `K×K`, row-major.
    pub cov: Vec<f64>,
    pub loglik: f64,
}

impl Filtered {
    pub fn cov_at(&self, t: usize) -> &[f64] {
        let k = self.mean.cols();
        &self.cov[t * k * k..(t + 1) * k * k]
    }
}

/// Kalman filter in covariance form with per-step symmetrization.
pub fn filter(inputs: &SsmInputs<'_>) -> Result<Filtered> {
    inputs.validate()?;
    let t_len = inputs.len();
    let k = inputs.dim();
    let mut mean = Mat::zeros(t_len, k);
    let mut cov = vec![0.0; t_len * k * k];
    let mut m_prev = vec![0.0; k];
    let mut c_prev = vec![0.0; k * k];
    let mut p = vec![0.0; k * k];
    let mut pl = vec![0.0; k];
    let mut loglik = 0.0;

    for t in 0..t_len {
        p.copy_from_slice(&c_prev);
        let q = inputs.state_var.row(t);
        for j in 0..k {
            p[j * k + j] += q[j];
        }
        let l = inputs.loadings.row(t);
        for i in 0..k {
            pl[i] = linalg::dot(&p[i * k..(i + 1) * k], l);
        }
        let f = linalg::dot(l, &pl) + inputs.obs_var[t];
        let e = inputs.obs[t] - linalg::dot(l, &m_prev);
        if !(f > 0.0 && f.is_finite() && e.is_finite()) {
            return Err(Error::Numerical {
                context: "Kalman filter innovation variance",
                index: t,
            });
        }
        loglik += -0.5 * (LN_2PI + f.ln() + e * e / f);
        let m_t = mean.row_mut(t);
        for i in 0..k {
            m_t[i] = m_prev[i] + pl[i] * e / f;
        }
        let c_t = &mut cov[t * k * k..(t + 1) * k * k];
        for i in 0..k {
            for j in 0..k {
                c_t[i * k + j] = p[i * k + j] - pl[i] * pl[j] / f;
            }
        }
        linalg::symmetrize(c_t, k);
        if c_t.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical {
                context: "Kalman filter covariance",
                index: t,
            });
        }
        m_prev.copy_from_slice(m_t);
        c_prev.copy_from_slice(c_t);
    }
    Ok(Filtered { mean, cov, loglik })
}

/// `log p(obs | loadings, variances)` by prediction-error decomposition.
pub fn marginal_loglik(inputs: &SsmInputs<'_>) -> Result<f64> {
    Ok(filter(inputs)?.loglik)
}

/// One exact joint draw of `b_{1:T}` given the inputs. Returns a `T×K` path.
pub fn ffbs_draw<R: Rng + ?Sized>(inputs: &SsmInputs<'_>, rng: &mut R) -> Result<Mat> {
    let filtered = filter(inputs)?;
    backward_sample(inputs, &filtered, rng)
}

/// Backward pass: `b_t | b_{t+1} ~ N(m_t + G(b_{t+1} - m_t), C_t - G C_t)`
/// with `G = C_t (C_t + Q_{t+1})^{-1}`.
pub fn backward_sample<R: Rng + ?Sized>(
    inputs: &SsmInputs<'_>,
    filtered: &Filtered,
    rng: &mut R,
) -> Result<Mat> {
    let t_len = inputs.len();
    let k = inputs.dim();
    let mut path = Mat::zeros(t_len, k);
    if t_len == 0 || k == 0 {
        return Ok(path);
    }
    let mut z = vec![0.0; k];
    let mut scratch = vec![0.0; k * k];
    let mut noise = vec![0.0; k];

    // b_T ~ N(m_T, C_T)
    scratch.copy_from_slice(filtered.cov_at(t_len - 1));
    linalg::cholesky_psd(&mut scratch, k, PSD_TOL).map_err(|_| Error::Numerical {
        context: "terminal filtered covariance",
        index: t_len - 1,
    })?;
    z.iter_mut().for_each(|zi| *zi = std_normal(rng));
    linalg::lower_mul(&scratch, k, &z, &mut noise);
    for (j, out) in path.row_mut(t_len - 1).iter_mut().enumerate() {
        *out = filtered.mean.get(t_len - 1, j) + noise[j];
    }

    let mut p_chol = vec![0.0; k * k];
    let mut gain_t = vec![0.0; k * k];
    let mut diff = vec![0.0; k];
    let mut col = vec![0.0; k];
    let mut mean = vec![0.0; k];
    for t in (0..t_len - 1).rev() {
        let c = filtered.cov_at(t);
        let m = filtered.mean.row(t);
        p_chol.copy_from_slice(c);
        let q = inputs.state_var.row(t + 1);
        for j in 0..k {
            p_chol[j * k + j] += q[j];
        }
        linalg::cholesky(&mut p_chol, k).map_err(|_| Error::Numerical {
            context: "predicted state covariance",
            index: t + 1,
        })?;
        // gain_t = P^{-1} C, column by column (= G' since both are symmetric)
        for j in 0..k {
            for i in 0..k {
                col[i] = c[i * k + j];
            }
            linalg::solve_lower(&p_chol, k, &mut col);
            linalg::solve_lower_transpose(&p_chol, k, &mut col);
            for i in 0..k {
                gain_t[i * k + j] = col[i];
            }
        }
        let next = path.row(t + 1);
        for i in 0..k {
            diff[i] = next[i] - m[i];
        }
        // mean_i = m_i + Σ_l G_il diff_l, G_il = gain_t[l][i]
        mean.copy_from_slice(m);
        for i in 0..k {
            for l in 0..k {
                mean[i] += gain_t[l * k + i] * diff[l];
            }
        }
        // cov = C - G C = C - (P^{-1} C)' C
        for i in 0..k {
            for j in 0..k {
                let mut s = c[i * k + j];
                for l in 0..k {
                    s -= gain_t[l * k + i] * c[l * k + j];
                }
                scratch[i * k + j] = s;
            }
        }
        linalg::symmetrize(&mut scratch, k);
        linalg::cholesky_psd(&mut scratch, k, PSD_TOL).map_err(|_| Error::Numerical {
            context: "smoothing covariance",
            index: t,
        })?;
        z.iter_mut().for_each(|zi| *zi = std_normal(rng));
        linalg::lower_mul(&scratch, k, &z, &mut noise);
        for (j, out) in path.row_mut(t).iter_mut().enumerate() {
            *out = mean[j] + noise[j];
        }
    }
    Ok(path)
}

/// Interweaving step for the static part of the coefficients.
///
/// Moves to the centered paths `β_t = β₀ + √v ∘ b_t`, redraws `v_j` and then
/// `β₀_j` given the centered path, and maps back to the non-centered `b`. The
/// centered path, and so the fit to the data, is unchanged; only the split
/// into `(β₀, √v, b)` moves. The sign of `√v_j` is kept. `alpha` is
/// `(β₀', √v')'` and `prior_var` holds the prior variances of its entries.
///
/// A coefficient whose scale is exactly zero, or whose update would leave the
/// representable range, is left as it is.
pub fn interweave_states<R: Rng + ?Sized>(
    b: &mut Mat,
    alpha: &mut [f64],
    state_var: &Mat,
    prior_var: &[f64],
    rng: &mut R,
) -> Result<()> {
    let (t_len, k) = (b.rows(), b.cols());
    if alpha.len() != 2 * k || prior_var.len() != 2 * k || state_var.rows() != t_len || state_var.cols() != k {
        return Err(Error::dim("interweaving inputs do not match the state dimensions"));
    }
    if t_len == 0 {
        return Ok(());
    }
    for j in 0..k {
        let (beta0, scale) = (alpha[j], alpha[k + j]);
        if scale == 0.0 || !scale.is_finite() {
            continue;
        }
        // Σ w_t² / ξ_t over the centered increments w_t = √v (b_t − b_{t−1}).
        let mut sum = 0.0;
        let mut prev = 0.0;
        for t in 0..t_len {
            let w = scale * (b.get(t, j) - prev);
            sum += w * w / state_var.get(t, j);
            prev = b.get(t, j);
        }
        let rate = 1.0 / prior_var[k + j];
        if !(sum > 0.0) || !sum.is_finite() || !rate.is_finite() {
            continue;
        }
        let params = GigParams::new(0.5 * (1.0 - t_len as f64), rate, sum)?;
        let v = draw_gig(params, rng);
        // β₀ enters the centered path only through the first increment.
        let first = beta0 + scale * b.get(0, j);
        let noise = v * state_var.get(0, j);
        let precision = 1.0 / prior_var[j] + 1.0 / noise;
        let new_beta0 = first / noise / precision + std_normal(rng) / precision.sqrt();
        let new_scale = scale.signum() * v.sqrt();
        if !(new_scale.abs() > 0.0) || !new_scale.is_finite() || !new_beta0.is_finite() {
            continue;
        }
        let path: Vec<f64> = (0..t_len)
            .map(|t| (beta0 + scale * b.get(t, j) - new_beta0) / new_scale)
            .collect();
        if path.iter().any(|x| !x.is_finite()) {
            continue;
        }
        for (t, x) in path.into_iter().enumerate() {
            b.set(t, j, x);
        }
        alpha[j] = new_beta0;
        alpha[k + j] = new_scale;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;

    #[test]
    fn single_step_conjugate_update() {
        let (l, r, q, y) = (0.7, 0.4, 1.3, 2.0);
        let obs = [y];
        let loadings = Mat::from_vec(1, 1, vec![l]);
        let state_var = Mat::from_vec(1, 1, vec![q]);
        let inputs = SsmInputs {
            obs: &obs,
            loadings: &loadings,
            obs_var: &[r],
            state_var: &state_var,
        };
        let f = filter(&inputs).unwrap();
        let denom = l * l * q + r;
        assert!((f.mean.get(0, 0) - q * l * y / denom).abs() < 1e-14);
        assert!((f.cov_at(0)[0] - q * r / denom).abs() < 1e-14);
        let expected = -0.5 * (LN_2PI + denom.ln() + y * y / denom);
        assert!((f.loglik - expected).abs() < 1e-14);
    }

    #[test]
    fn zero_loadings_give_independent_gaussian_loglik() {
        let obs = [0.3, -1.2, 0.8];
        let obs_var = [0.5, 2.0, 1.1];
        let loadings = Mat::zeros(3, 2);
        let state_var = Mat::filled(3, 2, 0.7);
        let inputs = SsmInputs {
            obs: &obs,
            loadings: &loadings,
            obs_var: &obs_var,
            state_var: &state_var,
        };
        let expected: f64 = obs
            .iter()
            .zip(&obs_var)
            .map(|(y, r)| crate::math::normal_logpdf(*y, 0.0, *r))
            .sum();
        assert!((marginal_loglik(&inputs).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_inconsistent_dimensions_and_variances() {
        let loadings = Mat::zeros(2, 1);
        let state_var = Mat::filled(2, 1, 1.0);
        let bad = SsmInputs {
            obs: &[1.0],
            loadings: &loadings,
            obs_var: &[1.0, 1.0],
            state_var: &state_var,
        };
        assert!(matches!(filter(&bad), Err(Error::Dimension(_))));
        let bad = SsmInputs {
            obs: &[1.0, 2.0],
            loadings: &loadings,
            obs_var: &[1.0, 0.0],
            state_var: &state_var,
        };
        assert!(matches!(filter(&bad), Err(Error::Parameter(_))));
    }

    #[test]
    fn draw_is_deterministic_per_stream() {
        let obs = [0.1, 0.2, -0.3, 0.4];
        let loadings = Mat::from_fn(4, 2, |t, j| 0.5 + 0.1 * (t + j) as f64);
        let state_var = Mat::filled(4, 2, 0.3);
        let inputs = SsmInputs {
            obs: &obs,
            loadings: &loadings,
            obs_var: &[1.0; 4],
            state_var: &state_var,
        };
        let a = ffbs_draw(&inputs, &mut RngStream::new(9, 1)).unwrap();
        let b = ffbs_draw(&inputs, &mut RngStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
    }
}

//! Dense Gaussian conditioning for small state-space and regression problems.

use nalgebra::{DMatrix, DVector};

/// Joint prior covariance of the stacked random-walk states
/// `(b_1', …, b_T')'` with `b_0 = 0` and innovation variances `state_var[t][j]`.
pub fn random_walk_covariance(state_var: &[Vec<f64>]) -> DMatrix<f64> {
    let t_len = state_var.len();
    let k = state_var.first().map_or(0, Vec::len);
    let mut cov = DMatrix::zeros(t_len * k, t_len * k);
    for s in 0..t_len {
        for t in 0..t_len {
            for j in 0..k {
                let c: f64 = (0..=s.min(t)).map(|r| state_var[r][j]).sum();
                cov[(s * k + j, t * k + j)] = c;
            }
        }
    }
    cov
}

fn loading_matrix(loadings: &[Vec<f64>]) -> DMatrix<f64> {
    let t_len = loadings.len();
    let k = loadings.first().map_or(0, Vec::len);
    let mut z = DMatrix::zeros(t_len, t_len * k);
    for t in 0..t_len {
        for j in 0..k {
            z[(t, t * k + j)] = loadings[t][j];
        }
    }
    z
}

/// Posterior mean and covariance of the stacked states given observations.
pub fn state_posterior(
    obs: &[f64],
    loadings: &[Vec<f64>],
    obs_var: &[f64],
    state_var: &[Vec<f64>],
) -> (DVector<f64>, DMatrix<f64>) {
    let p = random_walk_covariance(state_var);
    let z = loading_matrix(loadings);
    let r = DMatrix::from_diagonal(&DVector::from_column_slice(obs_var));
    let s = &z * &p * z.transpose() + r;
    let s_inv = s.try_inverse().expect("innovation covariance invertible");
    let gain = &p * z.transpose() * &s_inv;
    let y = DVector::from_column_slice(obs);
    let mean = &gain * y;
    let cov = &p - &gain * &z * &p;
    (mean, cov)
}

/// `log N(obs; 0, Z P Z' + R)`.
pub fn marginal_loglik(obs: &[f64], loadings: &[Vec<f64>], obs_var: &[f64], state_var: &[Vec<f64>]) -> f64 {
    let p = random_walk_covariance(state_var);
    let z = loading_matrix(loadings);
    let r = DMatrix::from_diagonal(&DVector::from_column_slice(obs_var));
    let s = &z * &p * z.transpose() + r;
    mvn_logpdf(&DVector::from_column_slice(obs), &s)
}

pub fn mvn_logpdf(x: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let n = x.len() as f64;
    let chol = cov.clone().cholesky().expect("covariance positive definite");
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let sol = chol.solve(x);
    -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + logdet + x.dot(&sol))
}

/// Posterior of `α` in `y = Xα + e`, `e ~ N(0, diag(noise))`, `α ~ N(0, diag(prior))`,
/// from the normal equations.
pub fn regression_posterior(
    design: &[Vec<f64>],
    y: &[f64],
    noise: &[f64],
    prior: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let n = prior.len();
    let x = DMatrix::from_fn(design.len(), n, |i, j| design[i][j]);
    let w = DMatrix::from_diagonal(&DVector::from_iterator(noise.len(), noise.iter().map(|v| 1.0 / v)));
    let prec = x.transpose() * &w * &x + DMatrix::from_diagonal(&DVector::from_iterator(n, prior.iter().map(|v| 1.0 / v)));
    let cov = prec.try_inverse().expect("posterior precision invertible");
    let mean = &cov * x.transpose() * &w * DVector::from_column_slice(y);
    (mean, cov)
}

/// Weighted least squares estimate.
pub fn gls(design: &[Vec<f64>], y: &[f64], noise: &[f64]) -> DVector<f64> {
    let n = design[0].len();
    let x = DMatrix::from_fn(design.len(), n, |i, j| design[i][j]);
    let w = DMatrix::from_diagonal(&DVector::from_iterator(noise.len(), noise.iter().map(|v| 1.0 / v)));
    let xtwx = x.transpose() * &w * &x;
    xtwx.try_inverse().expect("full column rank") * x.transpose() * &w * DVector::from_column_slice(y)
}

/// Posterior mean of `h_0..h_T` for a stationary AR(1) prior observed as
/// `y_t = h_t + N(0, obs_var_t)`, `t = 1..T`, by covariance-form conditioning.
pub fn ar1_posterior_mean(y: &[f64], obs_var: &[f64], mu: f64, rho: f64, sigma2: f64) -> DVector<f64> {
    let n = y.len() + 1;
    let stat = sigma2 / (1.0 - rho * rho);
    let p = DMatrix::from_fn(n, n, |i, j| stat * rho.powi((i as i32 - j as i32).abs()));
    let mut z = DMatrix::zeros(y.len(), n);
    for t in 0..y.len() {
        z[(t, t + 1)] = 1.0;
    }
    let r = DMatrix::from_diagonal(&DVector::from_column_slice(obs_var));
    let s = &z * &p * z.transpose() + r;
    let gain = &p * z.transpose() * s.try_inverse().expect("invertible");
    let resid = DVector::from_iterator(y.len(), y.iter().map(|v| v - mu));
    DVector::from_element(n, mu) + gain * resid
}

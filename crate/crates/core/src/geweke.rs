//! Joint-distribution ("getting it right") test of the Gibbs sampler.
//!
//! Two simulators of `p(θ, y)` are compared: independent prior draws with
//! data generated from them, and a chain that alternates one Gibbs sweep with
//! regenerating `y` from the current parameters. If every block targets its
//! conditional correctly, both produce the prior marginal of `θ`.

use alloc::string::String;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::diagnostics::{effective_sample_size, mean, variance};
use crate::linalg::Mat;
use crate::model::{ChainData, ModelFlags, Priors};
use crate::rngdist::std_normal;
use crate::sampler::{draw_prior_state, gibbs_sweep, simulate_response, ChainState};
use crate::{Result, RngStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GewekeConfig {
    pub t_len: usize,
    /// Number of regressors; the first is a constant.
    pub k: usize,
    pub flags: ModelFlags,
    pub priors: Priors,
    pub n_cycles: usize,
    pub seed: u64,
    /// Magnitude of every regressor. Small values make the simulated data
    /// weakly informative, which the chain needs to roam heavy-tailed priors
    /// such as the DL in a feasible number of cycles.
    pub design_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GewekeCheck {
    pub quantity: String,
    /// 1 for the mean, 2 for the raw second moment.
    pub moment: u8,
    pub prior_value: f64,
    pub chain_value: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GewekeReport {
    pub checks: Vec<GewekeCheck>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }

    pub fn failures(&self, threshold: f64) -> Vec<&GewekeCheck> {
        self.checks.iter().filter(|c| !(c.z.abs() < threshold)).collect()
    }

    pub fn passed(&self, threshold: f64) -> bool {
        self.failures(threshold).is_empty()
    }

    /// Checks whose quantity name starts with `prefix`.
    pub fn for_quantity<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a GewekeCheck> + 'a {
        self.checks.iter().filter(move |c| c.quantity.starts_with(prefix))
    }
}

/// Scalar functionals of a state that the test tracks.
///
/// Under the DL prior the coefficients have very heavy tails and most mass
/// near zero, so their raw moments are dominated by rare draws. There the
/// test tracks `log|α_j|`, whose moments are well estimated.
pub fn tracked_quantities(state: &ChainState, flags: ModelFlags) -> Vec<(String, f64)> {
    let k = state.k();
    let mut out = Vec::new();
    let coef = |name: &str, j: usize, v: f64| {
        if flags.dl {
            (alloc::format!("log_abs_{name}[{j}]"), v.abs().max(f64::MIN_POSITIVE).ln())
        } else {
            (alloc::format!("{name}[{j}]"), v)
        }
    };
    for j in 0..k {
        out.push(coef("beta0", j, state.alpha[j]));
    }
    if flags.tvp {
        for j in 0..k {
            out.push(coef("sqrt_v", j, state.alpha[k + j]));
        }
    }
    if flags.t_obs {
        out.push(("nu".into(), state.dof.nu));
    }
    if flags.t_state && flags.tvp {
        for j in 0..k {
            out.push((alloc::format!("kappa[{j}]"), state.dof.kappa[j]));
        }
    }
    let p = state.sv.params;
    out.push(("mu".into(), p.mu));
    out.push(("rho".into(), p.rho));
    out.push(("sigma2".into(), p.sigma2));
    let t = state.len();
    if t >= 4 {
        for idx in [t / 4, t / 2, 3 * t / 4] {
            out.push((alloc::format!("h[{idx}]"), state.sv.path()[idx]));
        }
    }
    out
}

/// Fixed regressors: a constant followed by standard normals, all multiplied
/// by `scale`.
pub fn geweke_design(t_len: usize, k: usize, scale: f64, seed: u64) -> Mat {
    let mut rng = RngStream::new(seed, u64::MAX);
    Mat::from_fn(t_len, k, |_, j| scale * if j == 0 { 1.0 } else { std_normal(&mut rng) })
}

pub fn run_geweke(config: &GewekeConfig) -> Result<GewekeReport> {
    config.flags.validate()?;
    config.priors.validate()?;
    let x = geweke_design(config.t_len, config.k, config.design_scale, config.seed);

    let mut marginal = RngStream::new(config.seed, 0);
    let mut prior_series: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for _ in 0..config.n_cycles {
        let state = draw_prior_state(config.t_len, config.k, config.flags, &config.priors, &mut marginal)?;
        let q = tracked_quantities(&state, config.flags);
        if names.is_empty() {
            names = q.iter().map(|(n, _)| n.clone()).collect();
            prior_series = alloc::vec![Vec::with_capacity(config.n_cycles); q.len()];
        }
        for (s, (_, v)) in prior_series.iter_mut().zip(q) {
            s.push(v);
        }
    }

    let mut chain_rng = RngStream::new(config.seed, 1);
    let mut state = draw_prior_state(config.t_len, config.k, config.flags, &config.priors, &mut chain_rng)?;
    let mut data = ChainData::new(simulate_response(&state, &x, &mut chain_rng), x.clone())?;
    let mut chain_series: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(config.n_cycles); names.len()];
    for _ in 0..config.n_cycles {
        gibbs_sweep(&mut state, &data, config.flags, &config.priors, &mut chain_rng)?;
        data.y = simulate_response(&state, &x, &mut chain_rng);
        for (s, (_, v)) in chain_series.iter_mut().zip(tracked_quantities(&state, config.flags)) {
            s.push(v);
        }
    }

    let mut checks = Vec::new();
    for (i, name) in names.iter().enumerate() {
        for moment in [1u8, 2] {
            let f = |v: &f64| if moment == 1 { *v } else { v * v };
            let a: Vec<f64> = prior_series[i].iter().map(f).collect();
            let b: Vec<f64> = chain_series[i].iter().map(f).collect();
            let se_a = variance(&a) / a.len() as f64;
            let se_b = variance(&b) / effective_sample_size(&b);
            let (ma, mb) = (mean(&a), mean(&b));
            checks.push(GewekeCheck {
                quantity: name.clone(),
                moment,
                prior_value: ma,
                chain_value: mb,
                z: (mb - ma) / (se_a + se_b).sqrt(),
            });
        }
    }
    Ok(GewekeReport { checks })
}

//! Gibbs orchestration, retained-draw storage, one-step-ahead predictive
//! densities and synthetic data generation.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::diagnostics;
use crate::heavytails::{draw_dof_prior, draw_obs_scales, draw_state_scales, update_dof, DofState};
use crate::linalg::Mat;
use crate::math::log_sum_exp;
use crate::model::{ChainData, ModelFlags, Priors, SamplerConfig};
use crate::rngdist::{draw_inverse_gamma, std_normal, student_t_logpdf};
use crate::shrinkage::{draw_alpha, draw_dl_prior, update_dl, DlState, WeightedRegression};
use crate::state_space::{ffbs_draw, interweave_states, SsmInputs};
use crate::stochvol::{draw_sv_block, draw_sv_params, simulate_log_vol, sv_forecast, SvParams, SvState};
use crate::{Block, Error, Result, RngStream};

/// One state of the Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Non-centered coefficient paths `b_1..b_T`, `T×K`.
    pub b: Mat,
    /// `(β₀', √v')'`, length `2K`.
    pub alpha: Vec<f64>,
    /// Shrinkage scales for the active part of `alpha`.
    pub dl: DlState,
    pub sv: SvState,
    pub tau: Vec<f64>,
    /// State scales `ξ_jt`, `T×K`.
    pub xi: Mat,
    pub dof: DofState,
}

/// Number of coefficients that are sampled (the rest stay at zero).
pub fn n_active(k: usize, flags: ModelFlags) -> usize {
    if flags.tvp {
        2 * k
    } else {
        k
    }
}

fn log_sample_variance(y: &[f64]) -> f64 {
    let v = diagnostics::variance(y);
    if v.is_finite() && v > 0.0 {
        v.ln()
    } else {
        0.0
    }
}

impl ChainState {
    /// Neutral starting values.
    pub fn initial(data: &ChainData, flags: ModelFlags, priors: &Priors) -> Self {
        let (t, k) = (data.len(), data.k());
        let level = log_sample_variance(&data.y);
        let n = n_active(k, flags);
        let gaussian = f64::INFINITY;
        ChainState {
            b: Mat::zeros(t, k),
            alpha: vec![0.0; 2 * k],
            dl: DlState::new(n, priors.dl_intensity(n)),
            sv: SvState::constant(
                t,
                level,
                SvParams {
                    mu: level,
                    rho: 0.9,
                    sigma2: 0.1,
                },
            ),
            tau: vec![1.0; t],
            xi: Mat::filled(t, k, 1.0),
            dof: DofState {
                nu: if flags.t_obs { 10.0 } else { gaussian },
                kappa: vec![if flags.t_state { 10.0 } else { gaussian }; k],
            },
        }
    }

    pub fn k(&self) -> usize {
        self.b.cols()
    }

    pub fn len(&self) -> usize {
        self.b.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.b.rows() == 0
    }

    pub fn beta0(&self) -> &[f64] {
        &self.alpha[..self.k()]
    }

    pub fn sqrt_v(&self) -> &[f64] {
        &self.alpha[self.k()..]
    }

    /// `β_t = β₀ + √v ∘ b_t`.
    pub fn beta_at(&self, t: usize) -> Vec<f64> {
        let k = self.k();
        (0..k).map(|j| self.alpha[j] + self.alpha[k + j] * self.b.get(t, j)).collect()
    }

    /// Conditional mean of every observation.
    pub fn fitted(&self, x: &Mat) -> Vec<f64> {
        let k = self.k();
        (0..self.len())
            .map(|t| {
                let row = x.row(t);
                let b = self.b.row(t);
                (0..k).map(|j| (self.alpha[j] + self.alpha[k + j] * b[j]) * row[j]).sum()
            })
            .collect()
    }

    fn check(&self, data: &ChainData) -> Result<()> {
        let (t, k) = (data.len(), data.k());
        let ok = self.b.rows() == t
            && self.b.cols() == k
            && self.alpha.len() == 2 * k
            && self.sv.h.len() == t + 1
            && self.tau.len() == t
            && self.xi.rows() == t
            && self.xi.cols() == k
            && self.dof.kappa.len() == k;
        if ok {
            Ok(())
        } else {
            Err(Error::dim(alloc::format!("chain state does not match data with T={t}, K={k}")))
        }
    }
}

/// Metropolis-Hastings outcomes of one sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub obs_dof_accepted: bool,
    pub state_dof_accepted: usize,
    pub sv_accepted: bool,
}

fn wrap(block: Block) -> impl FnOnce(Error) -> Error {
    move |e| e.in_block(block)
}

/// One full Gibbs cycle. Disabled blocks draw no random numbers, so a model
/// with a block switched off reproduces the smaller model draw for draw.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &ChainData,
    flags: ModelFlags,
    priors: &Priors,
    rng: &mut R,
) -> Result<SweepStats> {
    state.check(data)?;
    let (t_len, k) = (data.len(), data.k());
    let x = &data.x;
    let mut stats = SweepStats::default();
    let obs_var: Vec<f64> = state
        .tau
        .iter()
        .zip(state.sv.path())
        .map(|(tau, h)| tau * h.exp())
        .collect();

    if flags.tvp && k > 0 {
        let obs: Vec<f64> = (0..t_len)
            .map(|t| data.y[t] - crate::linalg::dot(x.row(t), state.beta0()))
            .collect();
        let sqrt_v = state.sqrt_v().to_vec();
        let loadings = Mat::from_fn(t_len, k, |t, j| sqrt_v[j] * x.get(t, j));
        let inputs = SsmInputs {
            obs: &obs,
            loadings: &loadings,
            obs_var: &obs_var,
            state_var: &state.xi,
        };
        state.b = ffbs_draw(&inputs, rng).map_err(wrap(Block::StatePath))?;
    }

    let n = n_active(k, flags);
    if n > 0 {
        let design = Mat::from_fn(t_len, n, |t, j| {
            if j < k {
                x.get(t, j)
            } else {
                state.b.get(t, j - k) * x.get(t, j - k)
            }
        });
        let prior_var = if flags.dl {
            state.dl.prior_var()
        } else {
            vec![priors.fixed_prior_var; n]
        };
        let reg = WeightedRegression {
            response: &data.y,
            design: &design,
            noise_var: &obs_var,
        };
        let active = draw_alpha(&reg, &prior_var, rng).map_err(wrap(Block::Coefficients))?;
        state.alpha[..n].copy_from_slice(&active);
        if flags.tvp && priors.state_interweave {
            interweave_states(&mut state.b, &mut state.alpha, &state.xi, &prior_var, rng)
                .map_err(wrap(Block::Coefficients))?;
        }
        if flags.dl {
            update_dl(&state.alpha[..n], &mut state.dl, rng).map_err(wrap(Block::Shrinkage))?;
        }
    }

    let fitted = state.fitted(x);
    let resid: Vec<f64> = data.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();

    if flags.t_obs {
        state.tau =
            draw_obs_scales(&resid, state.sv.path(), state.dof.nu, rng).map_err(wrap(Block::ObsScales))?;
    }
    if flags.t_state && flags.tvp {
        for j in 0..k {
            let inc: Vec<f64> = (0..t_len)
                .map(|t| state.b.get(t, j) - if t == 0 { 0.0 } else { state.b.get(t - 1, j) })
                .collect();
            let xi = draw_state_scales(&inc, state.dof.kappa[j], rng).map_err(wrap(Block::StateScales))?;
            for (t, v) in xi.into_iter().enumerate() {
                state.xi.set(t, j, v);
            }
        }
    }
    if flags.t_obs {
        let d = update_dof(&state.tau, state.dof.nu, &priors.obs_dof, rng);
        state.dof.nu = d.value;
        stats.obs_dof_accepted = d.accepted;
    }
    if flags.t_state && flags.tvp {
        for j in 0..k {
            let d = update_dof(&state.xi.column(j), state.dof.kappa[j], &priors.state_dof, rng);
            state.dof.kappa[j] = d.value;
            stats.state_dof_accepted += d.accepted as usize;
        }
    }

    let scaled: Vec<f64> = resid.iter().zip(&state.tau).map(|(e, tau)| e / tau.sqrt()).collect();
    let sv = draw_sv_block(&scaled, &mut state.sv, &priors.sv, rng).map_err(wrap(Block::Volatility))?;
    stats.sv_accepted = sv.level_persistence_accepted;
    Ok(stats)
}

/// Retained posterior draws plus what the predictive step needs.
///
/// Per-draw arrays are stored row-major, one row per retained draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore {
    pub k: usize,
    pub t_len: usize,
    pub flags: ModelFlags,
    pub beta0: Vec<f64>,
    pub sqrt_v: Vec<f64>,
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub nu: Vec<f64>,
    pub kappa: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `b_T` for every draw (`K` per row).
    pub b_last: Vec<f64>,
    /// `h_T` for every draw.
    pub h_last: Vec<f64>,
    /// Posterior mean of `h_1..h_T`.
    pub h_mean: Vec<f64>,
    /// Posterior mean of `β_1..β_T`, `T×K` row-major.
    pub beta_mean: Vec<f64>,
    /// Acceptance rates: observation dof, state dof, SV level/persistence.
    pub acceptance: [f64; 3],
}

/// Named view of one stored array.
#[derive(Debug, Clone, Copy)]
pub struct DrawArray<'a> {
    pub name: &'static str,
    pub width: usize,
    pub data: &'a [f64],
}

impl DrawStore {
    pub const ARRAY_NAMES: [&'static str; 13] = [
        "beta0",
        "sqrt_v",
        "mu",
        "rho",
        "sigma2",
        "nu",
        "kappa",
        "lambda",
        "b_last",
        "h_last",
        "h_mean",
        "beta_mean",
        "acceptance",
    ];

    pub fn empty(k: usize, t_len: usize, flags: ModelFlags) -> Self {
        DrawStore {
            k,
            t_len,
            flags,
            beta0: Vec::new(),
            sqrt_v: Vec::new(),
            mu: Vec::new(),
            rho: Vec::new(),
            sigma2: Vec::new(),
            nu: Vec::new(),
            kappa: Vec::new(),
            lambda: Vec::new(),
            b_last: Vec::new(),
            h_last: Vec::new(),
            h_mean: vec![0.0; t_len],
            beta_mean: vec![0.0; t_len * k],
            acceptance: [0.0; 3],
        }
    }

    pub fn n_draws(&self) -> usize {
        self.h_last.len()
    }

    fn width_of(&self, name: &str) -> usize {
        match name {
            "beta0" | "sqrt_v" | "kappa" | "b_last" => self.k,
            "h_mean" => self.t_len,
            "beta_mean" => self.t_len * self.k,
            "acceptance" => 3,
            _ => 1,
        }
    }

    pub fn arrays(&self) -> Vec<DrawArray<'_>> {
        Self::ARRAY_NAMES
            .iter()
            .map(|&name| DrawArray {
                name,
                width: self.width_of(name),
                data: self.array(name).expect("listed name"),
            })
            .collect()
    }

    pub fn array(&self, name: &str) -> Option<&[f64]> {
        Some(match name {
            "beta0" => &self.beta0,
            "sqrt_v" => &self.sqrt_v,
            "mu" => &self.mu,
            "rho" => &self.rho,
            "sigma2" => &self.sigma2,
            "nu" => &self.nu,
            "kappa" => &self.kappa,
            "lambda" => &self.lambda,
            "b_last" => &self.b_last,
            "h_last" => &self.h_last,
            "h_mean" => &self.h_mean,
            "beta_mean" => &self.beta_mean,
            "acceptance" => &self.acceptance,
            _ => return None,
        })
    }

    /// Replace one array, checking its width against the store dimensions.
    pub fn set_array(&mut self, name: &str, width: usize, data: Vec<f64>) -> Result<()> {
        let expected = self.width_of(name);
        if width != expected || (width > 0 && data.len() % width != 0) {
            return Err(Error::dim(alloc::format!(
                "array '{name}' has width {width}, expected {expected}"
            )));
        }
        let slot = match name {
            "beta0" => &mut self.beta0,
            "sqrt_v" => &mut self.sqrt_v,
            "mu" => &mut self.mu,
            "rho" => &mut self.rho,
            "sigma2" => &mut self.sigma2,
            "nu" => &mut self.nu,
            "kappa" => &mut self.kappa,
            "lambda" => &mut self.lambda,
            "b_last" => &mut self.b_last,
            "h_last" => &mut self.h_last,
            "h_mean" => &mut self.h_mean,
            "beta_mean" => &mut self.beta_mean,
            "acceptance" => {
                if data.len() != 3 {
                    return Err(Error::dim("acceptance array must hold three rates"));
                }
                self.acceptance.copy_from_slice(&data);
                return Ok(());
            }
            _ => return Err(Error::param(alloc::format!("unknown draw array '{name}'"))),
        };
        *slot = data;
        Ok(())
    }

    /// Check that every per-draw array holds `n_draws` rows.
    pub fn validate(&self) -> Result<()> {
        let m = self.n_draws();
        for a in self.arrays() {
            let rows = match a.name {
                "h_mean" | "beta_mean" | "acceptance" => 1,
                _ => m,
            };
            if a.data.len() != rows * a.width {
                return Err(Error::dim(alloc::format!(
                    "array '{}' holds {} values, expected {}",
                    a.name,
                    a.data.len(),
                    rows * a.width
                )));
            }
        }
        Ok(())
    }

    fn push(&mut self, state: &ChainState) {
        let k = self.k;
        self.beta0.extend_from_slice(state.beta0());
        self.sqrt_v.extend_from_slice(state.sqrt_v());
        self.mu.push(state.sv.params.mu);
        self.rho.push(state.sv.params.rho);
        self.sigma2.push(state.sv.params.sigma2);
        self.nu.push(state.dof.nu);
        self.kappa.extend_from_slice(&state.dof.kappa);
        self.lambda.push(if self.flags.dl { state.dl.lambda } else { f64::NAN });
        if self.t_len > 0 {
            self.b_last.extend_from_slice(state.b.row(self.t_len - 1));
        }
        self.h_last.push(state.sv.last());
        for (acc, h) in self.h_mean.iter_mut().zip(state.sv.path()) {
            *acc += h;
        }
        for t in 0..self.t_len {
            let beta = state.beta_at(t);
            for j in 0..k {
                self.beta_mean[t * k + j] += beta[j];
            }
        }
    }

    /// Column `j` of a per-draw array of width `K`.
    pub fn column(&self, name: &str, j: usize) -> Option<Vec<f64>> {
        let data = self.array(name)?;
        let w = self.width_of(name);
        (j < w).then(|| data.iter().skip(j).step_by(w).copied().collect())
    }

    /// Effective sample size of every scalar parameter series.
    pub fn ess(&self) -> Vec<(alloc::string::String, f64)> {
        let mut out = Vec::new();
        for name in ["mu", "rho", "sigma2"] {
            out.push((name.into(), diagnostics::effective_sample_size(self.array(name).unwrap())));
        }
        if self.flags.t_obs {
            out.push(("nu".into(), diagnostics::effective_sample_size(&self.nu)));
        }
        for j in 0..self.k {
            let b = self.column("beta0", j).unwrap();
            out.push((alloc::format!("beta0[{j}]"), diagnostics::effective_sample_size(&b)));
            if self.flags.tvp {
                let v = self.column("sqrt_v", j).unwrap();
                out.push((alloc::format!("sqrt_v[{j}]"), diagnostics::effective_sample_size(&v)));
            }
            if self.flags.t_state {
                let kp = self.column("kappa", j).unwrap();
                out.push((alloc::format!("kappa[{j}]"), diagnostics::effective_sample_size(&kp)));
            }
        }
        out
    }
}

/// Run a chain from the neutral initial state with the stream `(seed, 0)`.
pub fn run_chain(data: &ChainData, priors: &Priors, config: &SamplerConfig) -> Result<DrawStore> {
    let mut rng = RngStream::new(config.seed, 0);
    run_chain_with(data, priors, config, &mut rng)
}

pub fn run_chain_with<R: Rng + ?Sized>(
    data: &ChainData,
    priors: &Priors,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<DrawStore> {
    config.validate()?;
    priors.validate()?;
    let mut state = ChainState::initial(data, config.flags, priors);
    let mut store = DrawStore::empty(data.k(), data.len(), config.flags);
    let mut accepted = [0usize; 3];
    for i in 0..config.n_iter {
        let stats = gibbs_sweep(&mut state, data, config.flags, priors, rng).map_err(|e| Error::Iteration {
            iteration: i,
            source: Box::new(e),
        })?;
        accepted[0] += stats.obs_dof_accepted as usize;
        accepted[1] += stats.state_dof_accepted;
        accepted[2] += stats.sv_accepted as usize;
        if config.retains(i) {
            store.push(&state);
        }
    }
    let m = store.n_draws().max(1) as f64;
    for v in store.h_mean.iter_mut().chain(store.beta_mean.iter_mut()) {
        *v /= m;
    }
    let n = config.n_iter as f64;
    store.acceptance = [
        accepted[0] as f64 / n,
        accepted[1] as f64 / (n * data.k().max(1) as f64),
        accepted[2] as f64 / n,
    ];
    Ok(store)
}

/// Per-draw parameters of the one-step-ahead predictive mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDensity {
    pub location: Vec<f64>,
    pub log_var: Vec<f64>,
    /// Degrees of freedom; `f64::INFINITY` for Gaussian draws.
    pub dof: Vec<f64>,
}

impl PredictiveDensity {
    pub fn len(&self) -> usize {
        self.location.len()
    }

    pub fn is_empty(&self) -> bool {
        self.location.is_empty()
    }

    /// Predictive mean (the point forecast).
    pub fn mean(&self) -> f64 {
        diagnostics::mean(&self.location)
    }
}

/// Propagate every retained draw one month ahead given next month's regressors.
pub fn one_step_predictive<R: Rng + ?Sized>(
    draws: &DrawStore,
    x_next: &[f64],
    rng: &mut R,
) -> Result<PredictiveDensity> {
    let k = draws.k;
    if x_next.len() != k {
        return Err(Error::dim(alloc::format!(
            "next-period regressors have length {}, model has {k}",
            x_next.len()
        )));
    }
    draws.validate()?;
    let m = draws.n_draws();
    let mut out = PredictiveDensity {
        location: Vec::with_capacity(m),
        log_var: Vec::with_capacity(m),
        dof: Vec::with_capacity(m),
    };
    for d in 0..m {
        let params = SvParams {
            mu: draws.mu[d],
            rho: draws.rho[d],
            sigma2: draws.sigma2[d],
        };
        out.log_var.push(sv_forecast(draws.h_last[d], &params, rng));
        let mut loc = 0.0;
        for j in 0..k {
            let mut b = 0.0;
            if draws.flags.tvp {
                let xi = if draws.flags.t_state {
                    let kappa = draws.kappa[d * k + j];
                    draw_inverse_gamma(0.5 * kappa, 0.5 * kappa, rng)?
                } else {
                    1.0
                };
                b = draws.b_last[d * k + j] + xi.sqrt() * std_normal(rng);
            }
            loc += (draws.beta0[d * k + j] + draws.sqrt_v[d * k + j] * b) * x_next[j];
        }
        out.location.push(loc);
        out.dof.push(if draws.flags.t_obs { draws.nu[d] } else { f64::INFINITY });
    }
    Ok(out)
}

/// `log( (1/M) Σ_m t_{ν_m}(y; loc_m, e^{h_m/2}) )`, by log-sum-exp.
pub fn log_predictive_score(pd: &PredictiveDensity, realized: f64) -> f64 {
    let terms: Vec<f64> = (0..pd.len())
        .map(|m| student_t_logpdf(realized, pd.dof[m], pd.location[m], (0.5 * pd.log_var[m]).exp()))
        .collect();
    log_sum_exp(&terms) - (pd.len() as f64).ln()
}

/// Ancestral draw of a full chain state from the prior, for regressors with
/// `t_len` rows and `k` columns.
pub fn draw_prior_state<R: Rng + ?Sized>(
    t_len: usize,
    k: usize,
    flags: ModelFlags,
    priors: &Priors,
    rng: &mut R,
) -> Result<ChainState> {
    flags.validate()?;
    let n = n_active(k, flags);
    let mut alpha = vec![0.0; 2 * k];
    let mut dl = DlState::new(n, priors.dl_intensity(n));
    if n > 0 {
        if flags.dl {
            let (s, a) = draw_dl_prior(n, priors.dl_intensity(n), rng)?;
            dl = s;
            alpha[..n].copy_from_slice(&a);
        } else {
            for a in alpha[..n].iter_mut() {
                *a = priors.fixed_prior_var.sqrt() * std_normal(rng);
            }
        }
    }
    let nu = if flags.t_obs {
        draw_dof_prior(&priors.obs_dof, rng)?
    } else {
        f64::INFINITY
    };
    let tau = if flags.t_obs {
        (0..t_len)
            .map(|_| draw_inverse_gamma(0.5 * nu, 0.5 * nu, rng))
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![1.0; t_len]
    };
    let mut kappa = vec![f64::INFINITY; k];
    let mut xi = Mat::filled(t_len, k, 1.0);
    let mut b = Mat::zeros(t_len, k);
    if flags.tvp {
        for j in 0..k {
            if flags.t_state {
                kappa[j] = draw_dof_prior(&priors.state_dof, rng)?;
                for t in 0..t_len {
                    xi.set(t, j, draw_inverse_gamma(0.5 * kappa[j], 0.5 * kappa[j], rng)?);
                }
            }
            let mut level = 0.0;
            for t in 0..t_len {
                level += xi.get(t, j).sqrt() * std_normal(rng);
                b.set(t, j, level);
            }
        }
    }
    let params = draw_sv_params(&priors.sv.priors, rng)?;
    let h = simulate_log_vol(t_len, &params, rng);
    Ok(ChainState {
        b,
        alpha,
        dl,
        sv: SvState {
            h,
            params,
            indicators: vec![4; t_len],
        },
        tau,
        xi,
        dof: DofState { nu, kappa },
    })
}

/// Draw responses from the observation equation given a full state.
pub fn simulate_response<R: Rng + ?Sized>(state: &ChainState, x: &Mat, rng: &mut R) -> Vec<f64> {
    let fitted = state.fitted(x);
    fitted
        .iter()
        .zip(&state.tau)
        .zip(state.sv.path())
        .map(|((f, tau), h)| f + (tau * h.exp()).sqrt() * std_normal(rng))
        .collect()
}

/// Data-generating parameters for synthetic experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpTruth {
    pub beta0: Vec<f64>,
    /// State innovation variances `v_j` (zero for constant coefficients).
    pub v: Vec<f64>,
    /// Stochastic volatility parameters; `None` gives constant variance `e^{log_var}`.
    pub sv: Option<SvParams>,
    pub log_var: f64,
    /// Observation dof; `None` means Gaussian.
    pub nu: Option<f64>,
    /// Per-coefficient state dof; `None` means Gaussian.
    pub kappa: Option<Vec<f64>>,
    /// First regressor is a constant.
    pub intercept: bool,
}

impl DgpTruth {
    fn validate(&self) -> Result<()> {
        let k = self.beta0.len();
        if self.v.len() != k || self.kappa.as_ref().is_some_and(|kp| kp.len() != k) {
            return Err(Error::dim("truth vectors must all have length K"));
        }
        if self.v.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::param("state variances must be non-negative"));
        }
        if let Some(sv) = &self.sv {
            sv.validate()?;
        }
        Ok(())
    }
}

/// Synthetic sample together with the latent quantities that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub data: ChainData,
    /// True coefficient paths, `T×K`.
    pub beta: Mat,
    pub h: Vec<f64>,
    pub tau: Vec<f64>,
    pub xi: Mat,
}

pub fn simulate_dgp(truth: &DgpTruth, t_len: usize, seed: u64) -> Result<Simulated> {
    truth.validate()?;
    let k = truth.beta0.len();
    let mut rng = RngStream::new(seed, 0);
    let x = Mat::from_fn(t_len, k, |_, j| {
        if truth.intercept && j == 0 {
            1.0
        } else {
            std_normal(&mut rng)
        }
    });
    let h = match &truth.sv {
        Some(p) => simulate_log_vol(t_len, p, &mut rng)[1..].to_vec(),
        None => vec![truth.log_var; t_len],
    };
    let tau = match truth.nu {
        Some(nu) => (0..t_len)
            .map(|_| draw_inverse_gamma(0.5 * nu, 0.5 * nu, &mut rng))
            .collect::<Result<Vec<_>>>()?,
        None => vec![1.0; t_len],
    };
    let mut xi = Mat::filled(t_len, k, 1.0);
    let mut beta = Mat::zeros(t_len, k);
    for j in 0..k {
        let mut level = truth.beta0[j];
        for t in 0..t_len {
            if let Some(kappa) = &truth.kappa {
                xi.set(t, j, draw_inverse_gamma(0.5 * kappa[j], 0.5 * kappa[j], &mut rng)?);
            }
            level += (truth.v[j] * xi.get(t, j)).sqrt() * std_normal(&mut rng);
            beta.set(t, j, level);
        }
    }
    let y = (0..t_len)
        .map(|t| {
            let mean = crate::linalg::dot(beta.row(t), x.row(t));
            mean + (tau[t] * h[t].exp()).sqrt() * std_normal(&mut rng)
        })
        .collect();
    Ok(Simulated {
        data: ChainData::new(y, x)?,
        beta,
        h,
        tau,
        xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelId;

    fn toy() -> ChainData {
        let truth = DgpTruth {
            beta0: vec![0.1, 0.5],
            v: vec![0.0, 0.01],
            sv: Some(SvParams {
                mu: -2.0,
                rho: 0.9,
                sigma2: 0.05,
            }),
            log_var: 0.0,
            nu: None,
            kappa: None,
            intercept: true,
        };
        simulate_dgp(&truth, 40, 7).unwrap().data
    }

    #[test]
    fn counting_and_pinned_blocks() {
        let data = toy();
        let cfg = SamplerConfig::new(10, 5, ModelId::RegSv.flags());
        let store = run_chain(&data, &Priors::default(), &cfg).unwrap();
        assert_eq!(store.n_draws(), 5);
        assert!(store.sqrt_v.iter().all(|v| *v == 0.0));
        assert!(store.nu.iter().all(|v| v.is_infinite()));
        store.validate().unwrap();
    }

    #[test]
    fn sweep_is_deterministic() {
        let data = toy();
        let priors = Priors::default();
        let flags = ModelId::TTvpSvDl3.flags();
        let mut a = ChainState::initial(&data, flags, &priors);
        let mut b = a.clone();
        let mut r1 = RngStream::new(3, 1);
        let mut r2 = RngStream::new(3, 1);
        for _ in 0..5 {
            gibbs_sweep(&mut a, &data, flags, &priors, &mut r1).unwrap();
            gibbs_sweep(&mut b, &data, flags, &priors, &mut r2).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn t_flags_off_reproduce_gaussian_model() {
        let data = toy();
        let priors = Priors::default();
        let mut flags = ModelId::TTvpSvDl3.flags();
        flags.t_obs = false;
        flags.t_state = false;
        let a = run_chain(&data, &priors, &SamplerConfig { seed: 9, ..SamplerConfig::new(30, 10, flags) }).unwrap();
        let b = run_chain(
            &data,
            &priors,
            &SamplerConfig {
                seed: 9,
                ..SamplerConfig::new(30, 10, ModelId::TvpSvDl.flags())
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_random_walk_predictive() {
        let mut store = DrawStore::empty(0, 3, ModelId::RwSv.flags());
        store.mu = vec![0.0; 4];
        store.rho = vec![0.999_999; 4];
        store.sigma2 = vec![0.0; 4];
        store.nu = vec![f64::INFINITY; 4];
        store.lambda = vec![f64::NAN; 4];
        store.h_last = vec![-1.0, 0.0, 1.0, 2.0];
        let mut rng = RngStream::new(0, 0);
        let pd = one_step_predictive(&store, &[], &mut rng).unwrap();
        assert!(pd.location.iter().all(|l| *l == 0.0));
        assert!(pd.dof.iter().all(|d| d.is_infinite()));
        for (lv, h) in pd.log_var.iter().zip(&store.h_last) {
            assert!((lv - h * 0.999_999).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_normal_score() {
        let pd = PredictiveDensity {
            location: vec![0.0],
            log_var: vec![0.0],
            dof: vec![f64::INFINITY],
        };
        assert!((log_predictive_score(&pd, 0.0) + 0.918_938_533_204_672_7).abs() < 1e-12);
        let many = PredictiveDensity {
            location: vec![0.0; 7],
            log_var: vec![0.0; 7],
            dof: vec![f64::INFINITY; 7],
        };
        assert!((log_predictive_score(&many, 0.0) - log_predictive_score(&pd, 0.0)).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_in_predictive() {
        let store = DrawStore::empty(2, 3, ModelId::RegSv.flags());
        let mut rng = RngStream::new(0, 0);
        assert!(one_step_predictive(&store, &[1.0], &mut rng).is_err());
    }
}

//! Model catalogue: which blocks are active, what the design looks like, and
//! the prior/sampler settings shared by every variant.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::data::Dataset;
use crate::heavytails::DofPrior;
use crate::linalg::Mat;
use crate::stochvol::SvConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    MeanSv,
    RegSv,
    Ar1Sv,
    RwSv,
    TvpSvDl,
    TTvpSvDl1,
    TTvpSvDl2,
    TTvpSvDl3,
}

impl ModelId {
    pub const ALL: [ModelId; 8] = [
        ModelId::MeanSv,
        ModelId::RegSv,
        ModelId::Ar1Sv,
        ModelId::RwSv,
        ModelId::TvpSvDl,
        ModelId::TTvpSvDl1,
        ModelId::TTvpSvDl2,
        ModelId::TTvpSvDl3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::MeanSv => "mean-sv",
            ModelId::RegSv => "reg-sv",
            ModelId::Ar1Sv => "ar1-sv",
            ModelId::RwSv => "rw-sv",
            ModelId::TvpSvDl => "tvp-sv-dl",
            ModelId::TTvpSvDl1 => "t-tvp-sv-dl-1",
            ModelId::TTvpSvDl2 => "t-tvp-sv-dl-2",
            ModelId::TTvpSvDl3 => "t-tvp-sv-dl-3",
        }
    }

    /// Stable numeric code used in binary files.
    pub fn code(self) -> u32 {
        ModelId::ALL.iter().position(|m| *m == self).unwrap() as u32
    }

    pub fn from_code(code: u32) -> Option<Self> {
        ModelId::ALL.get(code as usize).copied()
    }

    pub fn flags(self) -> ModelFlags {
        let tvp = |t_obs, t_state| ModelFlags {
            tvp: true,
            t_obs,
            t_state,
            dl: true,
        };
        match self {
            ModelId::MeanSv | ModelId::RegSv | ModelId::Ar1Sv | ModelId::RwSv => ModelFlags::CONSTANT,
            ModelId::TvpSvDl => tvp(false, false),
            ModelId::TTvpSvDl1 => tvp(true, false),
            ModelId::TTvpSvDl2 => tvp(false, true),
            ModelId::TTvpSvDl3 => tvp(true, true),
        }
    }

    pub fn design(self) -> Design {
        match self {
            ModelId::MeanSv => Design::Intercept,
            ModelId::Ar1Sv => Design::Ar1,
            ModelId::RwSv => Design::Zero,
            _ => Design::Predictors,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', ' ', '(', ')'], "-");
        ModelId::ALL
            .into_iter()
            .find(|m| m.name() == norm || m.name().replace('-', "") == norm.replace('-', ""))
            .ok_or_else(|| Error::param(alloc::format!("unknown model '{s}'")))
    }
}

/// Which sampler blocks are active. Disabled blocks keep their variables at
/// the degenerate value (`v = 0`, `τ = ξ = 1`, fixed Gaussian prior on `α`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelFlags {
    pub tvp: bool,
    pub t_obs: bool,
    pub t_state: bool,
    pub dl: bool,
}

impl ModelFlags {
    pub const CONSTANT: ModelFlags = ModelFlags {
        tvp: false,
        t_obs: false,
        t_state: false,
        dl: false,
    };

    pub fn validate(&self) -> Result<()> {
        if self.t_state && !self.tvp {
            return Err(Error::param("t-distributed state innovations require time-varying parameters"));
        }
        Ok(())
    }

    pub fn bits(&self) -> u32 {
        self.tvp as u32 | (self.t_obs as u32) << 1 | (self.t_state as u32) << 2 | (self.dl as u32) << 3
    }

    pub fn from_bits(bits: u32) -> Self {
        ModelFlags {
            tvp: bits & 1 != 0,
            t_obs: bits & 2 != 0,
            t_state: bits & 4 != 0,
            dl: bits & 8 != 0,
        }
    }
}

/// Regressor set of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// Constant only.
    Intercept,
    /// Constant (if enabled) plus every dataset predictor.
    Predictors,
    /// Constant and the previous month's response.
    Ar1,
    /// No regressors: zero conditional mean.
    Zero,
}

/// Response and regressors for one estimation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainData {
    pub y: Vec<f64>,
    pub x: Mat,
}

impl ChainData {
    pub fn new(y: Vec<f64>, x: Mat) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::dim(alloc::format!("{} responses but {} regressor rows", y.len(), x.rows())));
        }
        if y.is_empty() {
            return Err(Error::param("empty estimation sample"));
        }
        Ok(ChainData { y, x })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn k(&self) -> usize {
        self.x.cols()
    }
}

impl Design {
    /// Number of regressors given the dataset's predictor count.
    pub fn width(self, n_predictors: usize, intercept: bool) -> usize {
        match self {
            Design::Intercept => 1,
            Design::Predictors => n_predictors + intercept as usize,
            Design::Ar1 => 2,
            Design::Zero => 0,
        }
    }

    /// Regressor row for dataset row `t`. `None` when the row lacks a lag.
    pub fn row(self, data: &Dataset, t: usize, intercept: bool) -> Option<Vec<f64>> {
        match self {
            Design::Intercept => Some(vec![1.0]),
            Design::Zero => Some(Vec::new()),
            Design::Ar1 => (t > 0).then(|| vec![1.0, data.y[t - 1]]),
            Design::Predictors => {
                let mut row = Vec::with_capacity(data.n_predictors() + 1);
                if intercept {
                    row.push(1.0);
                }
                row.extend_from_slice(data.x.row(t));
                Some(row)
            }
        }
    }

    /// First dataset row usable from `start` on.
    pub fn first_row(self, start: usize) -> usize {
        match self {
            Design::Ar1 => start.max(1),
            _ => start,
        }
    }

    /// Estimation sample made of dataset rows `start..=end`.
    pub fn chain_data(self, data: &Dataset, start: usize, end: usize, intercept: bool) -> Result<ChainData> {
        let first = self.first_row(start);
        if end >= data.len() || first > end {
            return Err(Error::Schedule(alloc::format!(
                "estimation window {start}..={end} not inside a dataset of {} rows",
                data.len()
            )));
        }
        let k = self.width(data.n_predictors(), intercept);
        let mut x = Vec::with_capacity((end - first + 1) * k);
        for t in first..=end {
            x.extend(self.row(data, t, intercept).expect("rows after first_row have lags"));
        }
        ChainData::new(data.y[first..=end].to_vec(), Mat::from_vec(end - first + 1, k, x))
    }
}

/// Prior hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priors {
    pub sv: SvConfig,
    pub obs_dof: DofPrior,
    pub state_dof: DofPrior,
    /// Dirichlet intensity; `None` means `1 / (number of shrunk coefficients)`.
    pub dl_a: Option<f64>,
    /// Prior variance of every coefficient when the DL prior is switched off.
    pub fixed_prior_var: f64,
    /// Interweave the centered and non-centered coefficient parameterizations.
    pub state_interweave: bool,
}

impl Default for Priors {
    fn default() -> Self {
        Priors {
            sv: SvConfig::default(),
            obs_dof: DofPrior::default(),
            state_dof: DofPrior::default(),
            dl_a: None,
            fixed_prior_var: 10.0,
            state_interweave: true,
        }
    }
}

impl Priors {
    pub fn validate(&self) -> Result<()> {
        self.sv.priors.validate()?;
        self.obs_dof.validate()?;
        self.state_dof.validate()?;
        if !(self.sv.log_offset >= 0.0) {
            return Err(Error::param("log offset must be non-negative"));
        }
        if let Some(a) = self.dl_a {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::param("DL intensity a must be positive"));
            }
        }
        if !(self.fixed_prior_var > 0.0) || !self.fixed_prior_var.is_finite() {
            return Err(Error::param("fixed prior variance must be positive"));
        }
        Ok(())
    }

    pub fn dl_intensity(&self, n_active: usize) -> f64 {
        self.dl_a.unwrap_or(1.0 / n_active.max(1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub flags: ModelFlags,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(n_iter: usize, n_burn: usize, flags: ModelFlags) -> Self {
        SamplerConfig {
            n_iter,
            n_burn,
            thin: 1,
            flags,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.flags.validate()?;
        if self.n_burn >= self.n_iter {
            return Err(Error::param(alloc::format!(
                "burn-in ({}) must be smaller than the number of sweeps ({})",
                self.n_burn,
                self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(Error::param("thinning interval must be at least 1"));
        }
        Ok(())
    }

    pub fn n_retained(&self) -> usize {
        (self.n_iter - self.n_burn) / self.thin
    }

    /// Whether sweep `i` (0-based) is kept.
    pub fn retains(&self, i: usize) -> bool {
        i >= self.n_burn && (i - self.n_burn + 1) % self.thin == 0
    }
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig::new(30_000, 15_000, ModelId::TTvpSvDl3.flags())
    }
}

/// Everything needed to fit one model variant to a dataset window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub model: ModelId,
    pub intercept: bool,
    pub priors: Priors,
}

impl ModelSpec {
    pub fn new(model: ModelId) -> Self {
        ModelSpec {
            model,
            intercept: true,
            priors: Priors::default(),
        }
    }

    pub fn sampler(&self, n_iter: usize, n_burn: usize, thin: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            n_iter,
            n_burn,
            thin,
            flags: self.model.flags(),
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for m in ModelId::ALL {
            assert_eq!(m.name().parse::<ModelId>().unwrap(), m);
            assert_eq!(ModelId::from_code(m.code()), Some(m));
        }
        assert_eq!("AR(1)-SV".parse::<ModelId>().unwrap(), ModelId::Ar1Sv);
        assert_eq!("t-TVP-SV DL 2".parse::<ModelId>().unwrap(), ModelId::TTvpSvDl2);
        assert!("ttvp".parse::<ModelId>().is_err());
    }

    #[test]
    fn retained_count() {
        let mut c = SamplerConfig::new(10, 5, ModelFlags::CONSTANT);
        assert_eq!((0..10).filter(|&i| c.retains(i)).count(), 5);
        c.thin = 2;
        assert_eq!((0..10).filter(|&i| c.retains(i)).count(), c.n_retained());
        c.n_iter = 11;
        assert_eq!((0..11).filter(|&i| c.retains(i)).count(), 3);
    }

    #[test]
    fn flag_bits_roundtrip() {
        for m in ModelId::ALL {
            assert_eq!(ModelFlags::from_bits(m.flags().bits()), m.flags());
        }
    }
}

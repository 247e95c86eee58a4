//! Run configuration: TOML on disk, profile defaults underneath.
//!
//! Resolution order, later wins: built-in defaults for the chosen profile,
//! the config file, then command-line overrides. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tvpsv_core::data::Month;
use tvpsv_core::evalharness::BacktestSchedule;
use tvpsv_core::heavytails::DofPrior;
use tvpsv_core::model::{ModelId, ModelSpec, Priors, SamplerConfig};
use tvpsv_core::stochvol::{SvConfig, SvPriors};
use tvpsv_core::trading::Thresholds;

use crate::dataset::{ColumnMap, Response};
use crate::report::Format;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 30,000 sweeps, 15,000 burn-in, all 647 origins.
    Paper,
    /// 3,000 sweeps, 1,000 burn-in, last 60 origins.
    Desk,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        }
    }
}

mod model_name {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};
    use tvpsv_core::model::ModelId;

    pub fn serialize<S: Serializer>(m: &ModelId, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(m.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ModelId, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

mod model_names {
    use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};
    use tvpsv_core::model::ModelId;

    pub fn serialize<S: Serializer>(ms: &[ModelId], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(ms.len()))?;
        for m in ms {
            seq.serialize_element(m.name())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<ModelId>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Profile,
    pub seed: u64,
    /// Model fitted by `fit`.
    #[serde(with = "model_name")]
    pub model: ModelId,
    /// Models run by `backtest` and `trade`.
    #[serde(with = "model_names")]
    pub models: Vec<ModelId>,
    /// Reference model for relative metrics.
    #[serde(with = "model_name")]
    pub benchmark: ModelId,
    pub intercept: bool,
    pub sampler: SamplerSection,
    pub schedule: ScheduleSection,
    pub trading: TradingSection,
    pub priors: PriorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSection>,
    pub simulate: SimulateSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    /// yyyymm of the first estimation observation.
    pub sample_start: u32,
    /// yyyymm; the first origin is the month after.
    pub initial_end: u32,
    /// yyyymm of the last forecast target.
    #[serde(rename = "final")]
    pub final_month: u32,
    /// Keep only the last `n` origins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradingSection {
    pub lower: f64,
    pub upper: f64,
    pub periods_per_year: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DofSection {
    pub shape: f64,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub rho_a: f64,
    pub rho_b: f64,
    pub sigma2_shape: f64,
    pub sigma2_rate: f64,
    pub log_offset: f64,
    pub interweave: bool,
    /// Interweaving step for the coefficient paths.
    #[serde(default = "default_true")]
    pub state_interweave: bool,
    pub obs_dof: DofSection,
    pub state_dof: DofSection,
    /// Dirichlet intensity; absent means one over the number of shrunk coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dl_a: Option<f64>,
    pub fixed_prior_var: f64,
}

/// A predictor given either as a bare column name or as `{ name, column }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictorEntry {
    Column(String),
    Renamed { name: String, column: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recessions: Option<PathBuf>,
    #[serde(default = "default_date_column")]
    pub date: String,
    /// Column holding excess returns directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess: Option<String>,
    /// Column of raw index returns; needs `risk_free`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub returns: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_free: Option<String>,
    /// 0/1 recession column, an alternative to the range file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recession_column: Option<String>,
    pub predictors: Vec<PredictorEntry>,
    #[serde(default = "default_true")]
    pub lag_predictors: bool,
}

fn default_date_column() -> String {
    "yyyymm".into()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// yyyymm of the first simulated month.
    pub start: u32,
    /// yyyymm of the last simulated month.
    pub end: u32,
    pub n_predictors: usize,
    /// Starting coefficients, intercept first; length `n_predictors + 1`.
    pub beta0: Vec<f64>,
    /// Random-walk innovation variance of every coefficient.
    pub state_var: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub sv_mu: f64,
    pub sv_rho: f64,
    pub sv_sigma2: f64,
    /// Monthly probability of entering / leaving a simulated recession.
    pub recession_entry: f64,
    pub recession_exit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl RunConfig {
    /// Built-in defaults for a profile.
    pub fn defaults(profile: Profile) -> RunConfig {
        let sv = SvPriors::default();
        let dof = |d: DofPrior| DofSection {
            shape: d.shape,
            rate: d.rate,
            lower: d.lower,
            upper: d.upper,
        };
        let schedule = BacktestSchedule::default();
        let (n_iter, n_burn, last_n) = match profile {
            Profile::Paper => (30_000, 15_000, None),
            Profile::Desk => (3_000, 1_000, Some(60)),
        };
        RunConfig {
            profile,
            seed: 20_110_101,
            model: ModelId::TTvpSvDl3,
            models: ModelId::ALL.to_vec(),
            benchmark: ModelId::MeanSv,
            intercept: true,
            sampler: SamplerSection { n_iter, n_burn, thin: 1 },
            schedule: ScheduleSection {
                sample_start: schedule.sample_start.yyyymm(),
                initial_end: schedule.initial_end.yyyymm(),
                final_month: schedule.final_month.yyyymm(),
                last_n,
            },
            trading: TradingSection {
                lower: Thresholds::default().lower,
                upper: Thresholds::default().upper,
                periods_per_year: 12.0,
            },
            priors: PriorSection {
                mu_mean: sv.mu_mean,
                mu_sd: sv.mu_sd,
                rho_a: sv.rho_a,
                rho_b: sv.rho_b,
                sigma2_shape: sv.sigma2_shape,
                sigma2_rate: sv.sigma2_rate,
                log_offset: SvConfig::default().log_offset,
                interweave: SvConfig::default().interweave,
                state_interweave: Priors::default().state_interweave,
                obs_dof: dof(DofPrior::default()),
                state_dof: dof(DofPrior::default()),
                dl_a: None,
                fixed_prior_var: Priors::default().fixed_prior_var,
            },
            data: None,
            simulate: SimulateSection {
                start: 192_612,
                end: 201_012,
                n_predictors: 2,
                beta0: vec![0.005, 0.002, 0.0],
                state_var: 1e-6,
                nu: Some(5.0),
                kappa: None,
                sv_mu: -6.5,
                sv_rho: 0.97,
                sv_sigma2: 0.02,
                recession_entry: 0.02,
                recession_exit: 0.08,
            },
            output: OutputSection {
                dir: PathBuf::from("out"),
                formats: vec![Format::Csv, Format::Json],
            },
        }
    }

    /// Parse TOML text. `profile` overrides the file's own `profile` key.
    /// Relative data paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, profile: Option<Profile>, base_dir: &Path) -> Result<RunConfig> {
        let file: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let file_profile = match file.get("profile") {
            Some(v) => Some(
                Profile::deserialize(v.clone()).map_err(|e| Error::Config(format!("profile: {e}")))?,
            ),
            None => None,
        };
        let profile = profile.or(file_profile).unwrap_or(Profile::Paper);
        let mut merged = toml::Value::try_from(RunConfig::defaults(profile))
            .map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, toml::Value::Table(file));
        if let toml::Value::Table(t) = &mut merged {
            t.insert("profile".into(), toml::Value::String(profile.name().into()));
        }
        let mut config: RunConfig = merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.resolve_paths(base_dir);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, profile: Option<Profile>) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_toml(&text, profile, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(data) = &mut self.data {
            if data.path.is_relative() {
                data.path = base.join(&data.path);
            }
            if let Some(r) = &mut data.recessions {
                if r.is_relative() {
                    *r = base.join(&*r);
                }
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.sampler_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.priors().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.thresholds().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.schedule()?;
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        if !(self.trading.periods_per_year > 0.0) {
            return bad("trading.periods_per_year must be positive".into());
        }
        if self.output.formats.is_empty() {
            return bad("output.formats must name at least one format".into());
        }
        if let Some(d) = &self.data {
            d.column_map()?;
        }
        let s = &self.simulate;
        month(s.start, "simulate.start")?;
        month(s.end, "simulate.end")?;
        if s.beta0.len() != s.n_predictors + 1 {
            return bad(format!(
                "simulate.beta0 needs {} entries (intercept plus {} predictors)",
                s.n_predictors + 1,
                s.n_predictors
            ));
        }
        if !(s.state_var >= 0.0) || s.nu.is_some_and(|v| !(v > 0.0)) || s.kappa.is_some_and(|v| !(v > 0.0)) {
            return bad("simulate: variances and degrees of freedom must be positive".into());
        }
        for p in [s.recession_entry, s.recession_exit] {
            if !(0.0..=1.0).contains(&p) {
                return bad("simulate: recession probabilities must lie in [0, 1]".into());
            }
        }
        Ok(())
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            n_iter: self.sampler.n_iter,
            n_burn: self.sampler.n_burn,
            thin: self.sampler.thin,
            flags: self.model.flags(),
            seed: self.seed,
        }
    }

    pub fn priors(&self) -> Priors {
        let p = &self.priors;
        let dof = |d: DofSection| DofPrior {
            shape: d.shape,
            rate: d.rate,
            lower: d.lower,
            upper: d.upper,
        };
        Priors {
            sv: SvConfig {
                priors: SvPriors {
                    mu_mean: p.mu_mean,
                    mu_sd: p.mu_sd,
                    rho_a: p.rho_a,
                    rho_b: p.rho_b,
                    sigma2_shape: p.sigma2_shape,
                    sigma2_rate: p.sigma2_rate,
                },
                log_offset: p.log_offset,
                interweave: p.interweave,
            },
            obs_dof: dof(p.obs_dof),
            state_dof: dof(p.state_dof),
            dl_a: p.dl_a,
            fixed_prior_var: p.fixed_prior_var,
            state_interweave: p.state_interweave,
        }
    }

    pub fn spec(&self, model: ModelId) -> ModelSpec {
        ModelSpec {
            model,
            intercept: self.intercept,
            priors: self.priors(),
        }
    }

    pub fn schedule(&self) -> Result<BacktestSchedule> {
        let s = &self.schedule;
        Ok(BacktestSchedule {
            sample_start: month(s.sample_start, "schedule.sample_start")?,
            initial_end: month(s.initial_end, "schedule.initial_end")?,
            final_month: month(s.final_month, "schedule.final")?,
            last_n: s.last_n,
        })
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            lower: self.trading.lower,
            upper: self.trading.upper,
        }
    }

    /// Models for the backtest, benchmark included.
    pub fn backtest_models(&self) -> Vec<ModelId> {
        let mut ms = self.models.clone();
        if !ms.contains(&self.benchmark) {
            ms.insert(0, self.benchmark);
        }
        ms
    }

    /// 64-bit digest of everything that affects sampling output. The output
    /// section is excluded so moving results does not invalidate them.
    pub fn hash(&self) -> u64 {
        let mut c = self.clone();
        c.output = RunConfig::defaults(self.profile).output;
        let json = serde_json::to_vec(&c).expect("configuration serializes");
        let digest = Sha256::digest(&json);
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }

    pub fn data_section(&self) -> Result<&DataSection> {
        self.data
            .as_ref()
            .ok_or_else(|| Error::Config("the [data] section is required for this command".into()))
    }
}

impl DataSection {
    pub fn column_map(&self) -> Result<ColumnMap> {
        let response = match (&self.excess, &self.returns, &self.risk_free) {
            (Some(e), None, rf) => Response::Excess {
                column: e.clone(),
                risk_free: rf.clone(),
            },
            (None, Some(r), Some(rf)) => Response::Raw {
                returns: r.clone(),
                risk_free: rf.clone(),
            },
            (None, Some(_), None) => {
                return Err(Error::Config("data.returns needs data.risk_free to form excess returns".into()))
            }
            (Some(_), Some(_), _) => return Err(Error::Config("give either data.excess or data.returns, not both".into())),
            (None, None, _) => return Err(Error::Config("data needs an `excess` or a `returns` column".into())),
        };
        let predictors = self
            .predictors
            .iter()
            .map(|p| match p {
                PredictorEntry::Column(c) => (c.clone(), c.clone()),
                PredictorEntry::Renamed { name, column } => (name.clone(), column.clone()),
            })
            .collect();
        Ok(ColumnMap {
            date: self.date.clone(),
            response,
            predictors,
            recession: self.recession_column.clone(),
            range: None,
        })
    }
}

fn month(v: u32, key: &str) -> Result<Month> {
    Month::from_yyyymm(v).map_err(|_| Error::Config(format!("{key} = {v} is not a yyyymm month")))
}

/// Recursive table merge; `over` wins on conflicts.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

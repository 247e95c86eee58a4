//! Expanding-window backtest, relative forecast metrics and regime splits.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use core::fmt;

use crate::data::{Dataset, Month};
use crate::model::{ModelId, ModelSpec, SamplerConfig};
use crate::sampler::{log_predictive_score, one_step_predictive, run_chain_with, PredictiveDensity};
use crate::{Error, Result, RngStream};

/// Expanding-window schedule. The first estimation sample runs from
/// `sample_start` to the month after `initial_end`; each later origin adds one
/// month, and the last target is `final_month`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BacktestSchedule {
    pub sample_start: Month,
    pub initial_end: Month,
    pub final_month: Month,
    /// Keep only the last `n` origins.
    pub last_n: Option<usize>,
}

impl Default for BacktestSchedule {
    fn default() -> Self {
        BacktestSchedule {
            sample_start: Month::from_yyyymm(192612).unwrap(),
            initial_end: Month::from_yyyymm(195612).unwrap(),
            final_month: Month::from_yyyymm(201012).unwrap(),
            last_n: None,
        }
    }
}

impl BacktestSchedule {
    /// Origin months, independent of any dataset.
    pub fn origin_months(&self) -> Vec<Month> {
        let n = self.initial_end.months_until(self.final_month) - 1;
        let all: Vec<Month> = (1..=n.max(0)).map(|i| self.initial_end.add(i)).collect();
        match self.last_n {
            Some(k) if k < all.len() => all[all.len() - k..].to_vec(),
            _ => all,
        }
    }

    /// Dataset row of the first estimation observation.
    pub fn start_index(&self, data: &Dataset) -> Result<usize> {
        let first = *data
            .dates
            .first()
            .ok_or_else(|| Error::Schedule("empty dataset".into()))?;
        if self.sample_start < first {
            return Err(Error::Schedule(alloc::format!(
                "sample start {} precedes the first observation {}",
                self.sample_start,
                first
            )));
        }
        data.index_of(self.sample_start)
            .ok_or_else(|| Error::Schedule(alloc::format!("sample start {} is after the data", self.sample_start)))
    }

    /// Dataset rows of every origin; each needs its target row to exist.
    pub fn origins(&self, data: &Dataset) -> Result<Vec<usize>> {
        if self.initial_end >= self.final_month || self.sample_start > self.initial_end {
            return Err(Error::Schedule("schedule dates are out of order".into()));
        }
        let start = self.start_index(data)?;
        let months = self.origin_months();
        if months.is_empty() {
            return Err(Error::Schedule("schedule has no forecast origins".into()));
        }
        months
            .iter()
            .map(|&m| match data.index_of(m) {
                Some(i) if i + 1 < data.len() && i > start => Ok(i),
                _ => Err(Error::Schedule(alloc::format!(
                    "dataset does not cover origin {} and its target {}",
                    m,
                    m.succ()
                ))),
            })
            .collect()
    }
}

/// Outcome of one forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestRecord {
    pub model: ModelId,
    pub origin: Month,
    pub target: Month,
    pub realized: f64,
    pub point: f64,
    pub lps: f64,
    /// Recession flag of the target month.
    pub recession: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OriginForecast {
    pub record: BacktestRecord,
    pub predictive: PredictiveDensity,
}

/// Fit `spec` on rows `start..=origin` and forecast row `origin + 1`.
///
/// The random stream is keyed by the origin month, so the same origin gets
/// the same stream for every model and for any subset of the schedule.
pub fn forecast_origin(
    data: &Dataset,
    spec: &ModelSpec,
    settings: &SamplerConfig,
    start: usize,
    origin: usize,
) -> Result<OriginForecast> {
    if origin + 1 >= data.len() {
        return Err(Error::Schedule(alloc::format!("origin row {origin} has no target")));
    }
    let design = spec.model.design();
    let chain_data = design.chain_data(data, start, origin, spec.intercept)?;
    let config = SamplerConfig {
        flags: spec.model.flags(),
        ..*settings
    };
    let mut rng = RngStream::new(settings.seed, data.dates[origin].yyyymm() as u64);
    let draws = run_chain_with(&chain_data, &spec.priors, &config, &mut rng)?;
    let x_next = design
        .row(data, origin + 1, spec.intercept)
        .expect("target row always has a lag");
    let predictive = one_step_predictive(&draws, &x_next, &mut rng)?;
    let realized = data.y[origin + 1];
    Ok(OriginForecast {
        record: BacktestRecord {
            model: spec.model,
            origin: data.dates[origin],
            target: data.dates[origin + 1],
            realized,
            point: predictive.mean(),
            lps: log_predictive_score(&predictive, realized),
            recession: data.recession[origin + 1],
        },
        predictive,
    })
}

/// Serial expanding-window backtest.
pub fn recursive_backtest(
    data: &Dataset,
    spec: &ModelSpec,
    schedule: &BacktestSchedule,
    settings: &SamplerConfig,
) -> Result<Vec<OriginForecast>> {
    data.validate()?;
    let start = schedule.start_index(data)?;
    schedule
        .origins(data)?
        .into_iter()
        .map(|o| forecast_origin(data, spec, settings, start, o))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Recession,
    Expansion,
    Full,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Recession, Regime::Expansion, Regime::Full];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Recession => "recession",
            Regime::Expansion => "expansion",
            Regime::Full => "full",
        }
    }

    pub fn includes(self, recession: bool) -> bool {
        match self {
            Regime::Recession => recession,
            Regime::Expansion => !recession,
            Regime::Full => true,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Index sets of the recession and expansion origins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegimeGroups {
    pub recession: Vec<usize>,
    pub expansion: Vec<usize>,
}

pub fn regime_split(records: &[BacktestRecord], flags: &[bool]) -> Result<RegimeGroups> {
    if flags.len() != records.len() {
        return Err(Error::Data(alloc::format!(
            "{} recession flags for {} records",
            flags.len(),
            records.len()
        )));
    }
    let (recession, expansion) = (0..records.len()).partition(|&i| flags[i]);
    Ok(RegimeGroups { recession, expansion })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeMetrics {
    pub regime: Regime,
    pub n: usize,
    pub sse: f64,
    pub sse_benchmark: f64,
    /// `RMSE(model) / RMSE(benchmark)`; NaN for an empty regime.
    pub rel_rmse: f64,
    /// `Σ (LPS_model − LPS_benchmark)`.
    pub log_bf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub model: ModelId,
    pub benchmark: ModelId,
    pub regimes: [RegimeMetrics; 3],
}

impl MetricsReport {
    pub fn get(&self, regime: Regime) -> &RegimeMetrics {
        &self.regimes[Regime::ALL.iter().position(|r| *r == regime).unwrap()]
    }
}

fn check_alignment(records: &[BacktestRecord], benchmark: &[BacktestRecord]) -> Result<()> {
    if records.len() != benchmark.len() {
        return Err(Error::Alignment(alloc::format!(
            "{} model records vs {} benchmark records",
            records.len(),
            benchmark.len()
        )));
    }
    for (a, b) in records.iter().zip(benchmark) {
        if a.origin != b.origin || a.realized.to_bits() != b.realized.to_bits() {
            return Err(Error::Alignment(alloc::format!(
                "model origin {} does not match benchmark origin {}",
                a.origin,
                b.origin
            )));
        }
    }
    Ok(())
}

pub fn relative_metrics(records: &[BacktestRecord], benchmark: &[BacktestRecord]) -> Result<MetricsReport> {
    check_alignment(records, benchmark)?;
    let metrics = |regime: Regime| {
        let mut m = RegimeMetrics {
            regime,
            n: 0,
            sse: 0.0,
            sse_benchmark: 0.0,
            rel_rmse: f64::NAN,
            log_bf: 0.0,
        };
        for (a, b) in records.iter().zip(benchmark) {
            if regime.includes(a.recession) {
                m.n += 1;
                m.sse += (a.realized - a.point).powi(2);
                m.sse_benchmark += (b.realized - b.point).powi(2);
                m.log_bf += a.lps - b.lps;
            }
        }
        if m.n > 0 {
            m.rel_rmse = (m.sse / m.sse_benchmark).sqrt();
        }
        m
    };
    Ok(MetricsReport {
        model: records.first().map_or(ModelId::MeanSv, |r| r.model),
        benchmark: benchmark.first().map_or(ModelId::MeanSv, |r| r.model),
        regimes: [metrics(Regime::Recession), metrics(Regime::Expansion), metrics(Regime::Full)],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulativePoint {
    pub origin: Month,
    pub cum_log_bf: f64,
    pub cum_se: f64,
    pub cum_se_benchmark: f64,
}

/// Running sums of log Bayes factors and squared errors over origins.
pub fn cumulative_series(records: &[BacktestRecord], benchmark: &[BacktestRecord]) -> Result<Vec<CumulativePoint>> {
    check_alignment(records, benchmark)?;
    let (mut bf, mut se, mut se_b) = (0.0, 0.0, 0.0);
    Ok(records
        .iter()
        .zip(benchmark)
        .map(|(a, b)| {
            bf += a.lps - b.lps;
            se += (a.realized - a.point).powi(2);
            se_b += (b.realized - b.point).powi(2);
            CumulativePoint {
                origin: a.origin,
                cum_log_bf: bf,
                cum_se: se,
                cum_se_benchmark: se_b,
            }
        })
        .collect())
}

/// Root mean squared error of point forecasts.
pub fn rmse(records: &[BacktestRecord]) -> f64 {
    let n = records.len() as f64;
    (records.iter().map(|r| (r.realized - r.point).powi(2)).sum::<f64>() / n).sqrt()
}

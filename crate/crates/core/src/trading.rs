//! Threshold trading rule on predicted excess returns and Sharpe ratios of the
//! resulting strategy.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::diagnostics::mean;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Position {
    Long,
    Short,
    Bonds,
}

impl Position {
    /// Strategy excess return given the market's excess return.
    pub fn excess_return(self, market_excess: f64) -> f64 {
        match self {
            Position::Long => market_excess,
            Position::Short => -market_excess,
            Position::Bonds => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            lower: -0.01,
            upper: 0.01,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if self.lower < self.upper {
            Ok(())
        } else {
            Err(Error::param("trading thresholds need lower < upper"))
        }
    }
}

/// Long above `upper`, short below `lower`, bonds in between (inclusive).
pub fn signal(predicted: f64, thresholds: Thresholds) -> Position {
    if predicted > thresholds.upper {
        Position::Long
    } else if predicted < thresholds.lower {
        Position::Short
    } else {
        Position::Bonds
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyPerf {
    /// Annualized mean return.
    pub mean_return: f64,
    /// Annualized standard deviation.
    pub sd_return: f64,
    pub sharpe: f64,
}

/// Annualized moments of a return series; Sharpe undefined for zero dispersion.
pub fn return_performance(returns: &[f64], periods_per_year: f64) -> Result<StrategyPerf> {
    if returns.len() < 2 {
        return Err(Error::param("strategy evaluation needs at least two periods"));
    }
    let m = mean(returns);
    let n = returns.len() as f64;
    let sd = (returns.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (n - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(Error::UndefinedSharpe);
    }
    Ok(StrategyPerf {
        mean_return: m * periods_per_year,
        sd_return: sd * periods_per_year.sqrt(),
        sharpe: periods_per_year.sqrt() * m / sd,
    })
}

pub fn strategy_returns(positions: &[Position], realized_excess: &[f64]) -> Result<Vec<f64>> {
    if positions.len() != realized_excess.len() {
        return Err(Error::dim("positions vs realized returns"));
    }
    Ok(positions.iter().zip(realized_excess).map(|(p, y)| p.excess_return(*y)).collect())
}

pub fn strategy_performance(
    positions: &[Position],
    realized_excess: &[f64],
    periods_per_year: f64,
) -> Result<StrategyPerf> {
    return_performance(&strategy_returns(positions, realized_excess)?, periods_per_year)
}

/// Posterior summary of draw-wise strategy performance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpeSummary {
    pub mean_return: f64,
    pub sd_return: f64,
    pub sharpe: f64,
    /// Draws used in the averages.
    pub n_used: usize,
    /// Draws dropped because their Sharpe ratio was undefined.
    pub n_excluded: usize,
}

fn summarize(perfs: &[StrategyPerf], excluded: usize) -> SharpeSummary {
    let n = perfs.len();
    let avg = |f: fn(&StrategyPerf) -> f64| {
        if n == 0 {
            f64::NAN
        } else {
            perfs.iter().map(f).sum::<f64>() / n as f64
        }
    };
    SharpeSummary {
        mean_return: avg(|p| p.mean_return),
        sd_return: avg(|p| p.sd_return),
        sharpe: avg(|p| p.sharpe),
        n_used: n,
        n_excluded: excluded,
    }
}

/// How the monthly positions are formed from the predictive distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalMode {
    /// One position path per retained draw, from that draw's location.
    Draw,
    /// A single position path from the predictive mean.
    Point,
}

impl SignalMode {
    pub fn name(self) -> &'static str {
        match self {
            SignalMode::Draw => "draw",
            SignalMode::Point => "point",
        }
    }
}

/// Optional mapping from excess to total strategy returns.
fn to_total(returns: &mut [f64], risk_free: Option<&[f64]>) {
    if let Some(rf) = risk_free {
        for (r, f) in returns.iter_mut().zip(rf) {
            *r += f;
        }
    }
}

/// Draw-wise Sharpe ratios: `draws[o][m]` is the predicted excess return of
/// draw `m` at origin `o`; every origin must hold the same number of draws.
/// With `risk_free` given, mean and sd refer to total returns instead.
pub fn posterior_sharpe(
    draws: &[Vec<f64>],
    realized_excess: &[f64],
    thresholds: Thresholds,
    periods_per_year: f64,
) -> Result<SharpeSummary> {
    posterior_performance(draws, realized_excess, None, thresholds, periods_per_year)
}

pub fn posterior_performance(
    draws: &[Vec<f64>],
    realized_excess: &[f64],
    risk_free: Option<&[f64]>,
    thresholds: Thresholds,
    periods_per_year: f64,
) -> Result<SharpeSummary> {
    thresholds.validate()?;
    if draws.len() != realized_excess.len() || risk_free.is_some_and(|rf| rf.len() != draws.len()) {
        return Err(Error::dim("predictive draws, realized returns and risk-free rates must align"));
    }
    let m = draws.first().map_or(0, Vec::len);
    if m == 0 || draws.iter().any(|d| d.len() != m) {
        return Err(Error::dim("every origin needs the same, non-zero number of draws"));
    }
    let mut perfs = Vec::with_capacity(m);
    let mut excluded = 0;
    let mut positions = Vec::with_capacity(draws.len());
    for d in 0..m {
        positions.clear();
        positions.extend(draws.iter().map(|o| signal(o[d], thresholds)));
        let mut r = strategy_returns(&positions, realized_excess)?;
        to_total(&mut r, risk_free);
        match return_performance(&r, periods_per_year) {
            Ok(p) => perfs.push(p),
            Err(Error::UndefinedSharpe) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(summarize(&perfs, excluded))
}

/// Performance when positions come from point forecasts.
pub fn point_performance(
    point: &[f64],
    realized_excess: &[f64],
    risk_free: Option<&[f64]>,
    thresholds: Thresholds,
    periods_per_year: f64,
) -> Result<SharpeSummary> {
    let draws: Vec<Vec<f64>> = point.iter().map(|p| alloc::vec![*p]).collect();
    posterior_performance(&draws, realized_excess, risk_free, thresholds, periods_per_year)
}

//! Origin-parallel expanding-window backtest.
//!
//! Every origin draws from its own random stream keyed by the origin month,
//! so the parallel run reproduces the serial one draw for draw regardless of
//! scheduling.

use rayon::prelude::*;
use tvpsv_core::data::Dataset;
use tvpsv_core::evalharness::{forecast_origin, BacktestRecord, BacktestSchedule, OriginForecast};
use tvpsv_core::model::{ModelSpec, SamplerConfig};

use crate::store::PredictiveOrigin;
use crate::Result;

/// All origins of `schedule` in parallel, in origin order.
pub fn parallel_backtest(
    data: &Dataset,
    spec: &ModelSpec,
    schedule: &BacktestSchedule,
    settings: &SamplerConfig,
) -> Result<Vec<OriginForecast>> {
    let (start, origins) = plan(data, schedule)?;
    Ok(origins
        .par_iter()
        .map(|&o| forecast_origin(data, spec, settings, start, o))
        .collect::<tvpsv_core::Result<Vec<_>>>()?)
}

/// Like [`parallel_backtest`], keeping only the per-draw predictive locations
/// to bound memory on long schedules.
pub fn backtest_locations(
    data: &Dataset,
    spec: &ModelSpec,
    schedule: &BacktestSchedule,
    settings: &SamplerConfig,
) -> Result<Vec<(BacktestRecord, PredictiveOrigin)>> {
    let (start, origins) = plan(data, schedule)?;
    let n = origins.len();
    Ok(origins
        .par_iter()
        .enumerate()
        .map(|(i, &o)| {
            let f = forecast_origin(data, spec, settings, start, o)?;
            log::debug!("{} origin {} ({}/{n}) lps {:.4}", spec.model, f.record.origin, i + 1, f.record.lps);
            let rf = data.risk_free.as_ref().map(|rf| rf[o + 1]);
            let p = PredictiveOrigin::from_density(&f.record, &f.predictive, rf);
            Ok((f.record, p))
        })
        .collect::<tvpsv_core::Result<Vec<_>>>()?)
}

fn plan(data: &Dataset, schedule: &BacktestSchedule) -> Result<(usize, Vec<usize>)> {
    data.validate()?;
    Ok((schedule.start_index(data)?, schedule.origins(data)?))
}

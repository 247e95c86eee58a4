//! Tabular reports in CSV or JSON. Numbers are rounded to six significant
//! digits, and columns keep the declaration order of the row structs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize, Serializer};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Round to six significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn ser_sig6<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(sig6(*x))
    } else {
        s.serialize_none()
    }
}

fn ser_opt_sig6<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) if v.is_finite() => s.serialize_f64(sig6(*v)),
        _ => s.serialize_none(),
    }
}

/// One backtest forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub model: String,
    pub origin: u32,
    pub target: u32,
    #[serde(serialize_with = "ser_sig6")]
    pub realized: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub point: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub lps: f64,
    pub recession: bool,
}

/// Relative forecast accuracy by regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub regime: String,
    #[serde(serialize_with = "ser_sig6")]
    pub rel_rmse: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub log_bf: f64,
}

/// Annualized strategy performance by regime. `mu` and `sigma` use excess
/// returns; the `_total` columns add the risk-free rate back when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradingRow {
    pub model: String,
    pub regime: String,
    #[serde(serialize_with = "ser_sig6")]
    pub mu: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub sigma: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub sharpe: f64,
    #[serde(serialize_with = "ser_opt_sig6")]
    pub mu_total: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig6")]
    pub sigma_total: Option<f64>,
    pub n_used: usize,
    pub n_excluded: usize,
}

/// Long-format running sums for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeRow {
    pub origin: u32,
    pub model: String,
    #[serde(serialize_with = "ser_sig6")]
    pub cum_log_bf: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub cum_se: f64,
}

/// Write `rows` to `<stem>.<ext>` inside `dir` and return the path.
pub fn emit_report<T: Serialize>(rows: &[T], format: Format, dir: &Path, stem: &str) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            for r in rows {
                w.serialize(r).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            }
            w.flush().map_err(Error::io(&path))?;
        }
        Format::Json => {
            let mut text = serde_json::to_string_pretty(rows).expect("report rows serialize");
            text.push('\n');
            std::fs::write(&path, text).map_err(Error::io(&path))?;
        }
    }
    Ok(path)
}

/// Read a report back, from either format.
pub fn read_report<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
        }
        _ => {
            let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
            r.deserialize()
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| Error::format(path, e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.966_123_456), 0.966_123);
        assert_eq!(sig6(11.869_04), 11.8690);
        assert_eq!(sig6(-1.234_567_89e-7), -1.234_57e-7);
        assert_eq!(sig6(0.0), 0.0);
    }

    #[test]
    fn csv_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            MetricsRow {
                model: "reg-sv".into(),
                regime: "full".into(),
                rel_rmse: 0.966_049_9,
                log_bf: 11.868_77,
            },
            MetricsRow {
                model: "reg-sv".into(),
                regime: "recession".into(),
                rel_rmse: 1.0 / 3.0,
                log_bf: -2.0,
            },
        ];
        let a = emit_report(&rows, Format::Csv, dir.path(), "m").unwrap();
        let b = emit_report(&rows, Format::Json, dir.path(), "m").unwrap();
        let ra: Vec<MetricsRow> = read_report(&a).unwrap();
        let rb: Vec<MetricsRow> = read_report(&b).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(ra[1].rel_rmse, 0.333_333);
        let header = std::fs::read_to_string(&a).unwrap();
        assert!(header.starts_with("model,regime,rel_rmse,log_bf\n"));
    }
}

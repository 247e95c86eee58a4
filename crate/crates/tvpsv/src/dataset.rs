//! CSV ingestion of monthly return/predictor panels and recession ranges.

use std::collections::HashMap;
use std::path::Path;

use tvpsv_core::data::{Dataset, Month};
use tvpsv_core::linalg::Mat;

use crate::{Error, Result};

/// How the response is obtained from the file.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    /// Excess returns stored directly; an optional risk-free column is kept
    /// for total-return reporting.
    Excess { column: String, risk_free: Option<String> },
    /// `returns − risk_free`.
    Raw { returns: String, risk_free: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    pub date: String,
    pub response: Response,
    /// `(name in the model, column in the file)`, in model order.
    pub predictors: Vec<(String, String)>,
    /// Optional 0/1 recession column.
    pub recession: Option<String>,
    /// Months kept after lagging, inclusive. Cells outside are never read,
    /// apart from the predictor row that feeds the first kept month.
    pub range: Option<(Month, Month)>,
}

struct RawRow {
    line: u64,
    date: Month,
    cells: Vec<Option<f64>>,
}

fn parse_cell(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") || s == "." {
        return None;
    }
    s.parse().ok().filter(|v: &f64| v.is_finite())
}

fn parse_date(s: &str) -> Option<Month> {
    let digits: String = s.trim().chars().filter(|c| c.is_ascii_digit()).collect();
    let v: u32 = digits.get(..6)?.parse().ok()?;
    Month::from_yyyymm(v).ok()
}

/// Load a monthly panel.
///
/// With `lag_predictors` the predictor values of row `t−1` are attached to
/// the response of row `t` and the first row is dropped, so every regressor
/// is known before the month it helps to forecast.
pub fn load_dataset(path: &Path, map: &ColumnMap, lag_predictors: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let col = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Data(format!("{}: unknown column '{name}'", path.display())))
    };

    let date_col = col(&map.date)?;
    let (resp_cols, rf_col) = match &map.response {
        Response::Excess { column, risk_free } => (vec![col(column)?], risk_free.as_deref().map(col).transpose()?),
        Response::Raw { returns, risk_free } => (vec![col(returns)?], Some(col(risk_free)?)),
    };
    let pred_cols = map.predictors.iter().map(|(_, c)| col(c)).collect::<Result<Vec<_>>>()?;
    let rec_col = map.recession.as_deref().map(col).transpose()?;

    // Column layout of RawRow::cells: response, risk-free, recession, predictors.
    let mut wanted: Vec<(usize, String)> = vec![(resp_cols[0], headers[resp_cols[0]].to_string())];
    for c in [rf_col, rec_col].into_iter().flatten() {
        wanted.push((c, headers[c].to_string()));
    }
    for &c in &pred_cols {
        wanted.push((c, headers[c].to_string()));
    }

    let mut rows: Vec<RawRow> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let date = parse_date(&record[date_col]).ok_or_else(|| {
            Error::Data(format!(
                "{} line {line}: '{}' is not a yyyymm date",
                path.display(),
                &record[date_col]
            ))
        })?;
        if let Some(prev) = rows.last() {
            if prev.date == date {
                return Err(Error::Data(format!("{} line {line}: duplicate month {date}", path.display())));
            }
            if prev.date.months_until(date) != 1 {
                return Err(Error::Data(format!(
                    "{} line {line}: dates not consecutive ({} followed by {date})",
                    path.display(),
                    prev.date
                )));
            }
        }
        let cells = wanted.iter().map(|(c, _)| parse_cell(&record[*c])).collect();
        rows.push(RawRow { line, date, cells });
    }

    let n_pred = pred_cols.len();
    let pred_offset = 1 + rf_col.is_some() as usize + rec_col.is_some() as usize;
    let first = lag_predictors as usize;
    let keep = |m: Month| map.range.map_or(true, |(lo, hi)| m >= lo && m <= hi);

    let mut dates = Vec::new();
    let mut y = Vec::new();
    let mut rf_out = Vec::new();
    let mut recession = Vec::new();
    let mut x = Vec::new();
    let mut missing: Vec<String> = Vec::new();
    for t in first..rows.len() {
        let row = &rows[t];
        if !keep(row.date) {
            continue;
        }
        let pred_row = &rows[t - first];
        let mut need = |r: &RawRow, i: usize| -> f64 {
            r.cells[i].unwrap_or_else(|| {
                missing.push(format!("line {} ({}) column '{}'", r.line, r.date, wanted[i].1));
                f64::NAN
            })
        };
        let resp = need(row, 0);
        let rf = rf_col.map(|_| need(row, 1));
        y.push(match (&map.response, rf) {
            (Response::Raw { .. }, Some(rf)) => resp - rf,
            _ => resp,
        });
        if let Some(rf) = rf {
            rf_out.push(rf);
        }
        recession.push(match rec_col {
            Some(_) => need(row, 1 + rf_col.is_some() as usize) != 0.0,
            None => false,
        });
        for j in 0..n_pred {
            x.push(need(pred_row, pred_offset + j));
        }
        dates.push(row.date);
    }
    if !missing.is_empty() {
        let shown = missing.iter().take(10).cloned().collect::<Vec<_>>().join("; ");
        let more = if missing.len() > 10 {
            format!(" and {} more", missing.len() - 10)
        } else {
            String::new()
        };
        return Err(Error::Data(format!("{}: missing cells at {shown}{more}", path.display())));
    }
    if dates.is_empty() {
        return Err(Error::Data(format!("{}: no rows in the requested range", path.display())));
    }
    let data = Dataset {
        x: Mat::from_vec(dates.len(), n_pred, x),
        dates,
        y,
        names: map.predictors.iter().map(|(n, _)| n.clone()).collect(),
        recession,
        risk_free: rf_col.map(|_| rf_out),
    };
    data.validate()?;
    Ok(data)
}

/// Read `(start, end)` yyyymm ranges, inclusive, one per row after a header.
pub fn load_recessions(path: &Path) -> Result<Vec<(Month, Month)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 2 {
            return Err(Error::Data(format!("{} line {line}: expected start,end", path.display())));
        }
        let parse = |s: &str| {
            parse_date(s).ok_or_else(|| Error::Data(format!("{} line {line}: '{s}' is not a yyyymm date", path.display())))
        };
        let (a, b) = (parse(&record[0])?, parse(&record[1])?);
        if b < a {
            return Err(Error::Data(format!("{} line {line}: range ends before it starts", path.display())));
        }
        out.push((a, b));
    }
    Ok(out)
}

/// Flag every month inside one of the ranges.
pub fn apply_recessions(data: &mut Dataset, ranges: &[(Month, Month)]) {
    for (flag, d) in data.recession.iter_mut().zip(&data.dates) {
        *flag = ranges.iter().any(|(a, b)| d >= a && d <= b);
    }
}

/// Write a dataset in the layout `load_dataset` reads back with
/// [`ColumnMap::for_written`] and no lagging.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["yyyymm".to_string(), "excess".into()];
    if data.risk_free.is_some() {
        header.push("risk_free".into());
    }
    header.push("recession".into());
    header.extend(data.names.iter().cloned());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for t in 0..data.len() {
        let mut rec = vec![data.dates[t].yyyymm().to_string(), data.y[t].to_string()];
        if let Some(rf) = &data.risk_free {
            rec.push(rf[t].to_string());
        }
        rec.push((data.recession[t] as u8).to_string());
        rec.extend(data.x.row(t).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(Error::io(path))
}

impl ColumnMap {
    /// Column map matching the output of [`write_dataset`].
    pub fn for_written(data: &Dataset) -> ColumnMap {
        ColumnMap {
            date: "yyyymm".into(),
            response: Response::Excess {
                column: "excess".into(),
                risk_free: data.risk_free.as_ref().map(|_| "risk_free".into()),
            },
            predictors: data.names.iter().map(|n| (n.clone(), n.clone())).collect(),
            recession: Some("recession".into()),
            range: None,
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io {
                path: path.to_path_buf(),
                source: io,
            },
            _ => unreachable!(),
        }
    } else {
        Error::Data(format!("{}: {e}", path.display()))
    }
}

//! Monthly calendar and the aligned dataset consumed by models and backtests.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::Mat;
use crate::{Error, Result};

/// A calendar month stored as `yyyymm`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month(u32);

impl Month {
    pub fn new(year: u32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) || year > 9999 {
            return Err(Error::Data(alloc::format!("invalid month {year}-{month}")));
        }
        Ok(Month(year * 100 + month))
    }

    pub fn from_yyyymm(v: u32) -> Result<Self> {
        Month::new(v / 100, v % 100)
    }

    pub fn yyyymm(self) -> u32 {
        self.0
    }

    pub fn year(self) -> u32 {
        self.0 / 100
    }

    pub fn month(self) -> u32 {
        self.0 % 100
    }

    fn ordinal(self) -> i64 {
        self.year() as i64 * 12 + self.month() as i64 - 1
    }

    fn from_ordinal(o: i64) -> Self {
        Month((o / 12) as u32 * 100 + (o % 12) as u32 + 1)
    }

    pub fn succ(self) -> Self {
        self.add(1)
    }

    pub fn add(self, months: i64) -> Self {
        Month::from_ordinal(self.ordinal() + months)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: Month) -> i64 {
        other.ordinal() - self.ordinal()
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:02}", self.year(), self.month())
    }
}

/// Aligned monthly series. Row `t` of `x` holds predictors known before
/// month `dates[t]` (lagging is done at ingestion).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dates: Vec<Month>,
    pub y: Vec<f64>,
    pub x: Mat,
    pub names: Vec<String>,
    pub recession: Vec<bool>,
    /// Risk-free rate for the same month, when the source provides one.
    pub risk_free: Option<Vec<f64>>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        let t = self.dates.len();
        if self.y.len() != t || self.x.rows() != t || self.recession.len() != t {
            return Err(Error::Data(alloc::format!(
                "series lengths disagree: {} dates, {} responses, {} predictor rows, {} recession flags",
                t,
                self.y.len(),
                self.x.rows(),
                self.recession.len()
            )));
        }
        if self.names.len() != self.x.cols() {
            return Err(Error::Data("predictor names do not match predictor columns".into()));
        }
        if let Some(rf) = &self.risk_free {
            if rf.len() != t {
                return Err(Error::Data("risk-free series length differs from dates".into()));
            }
        }
        for w in self.dates.windows(2) {
            if w[1] == w[0] {
                return Err(Error::Data(alloc::format!("duplicate month {}", w[0])));
            }
            if w[0].months_until(w[1]) != 1 {
                return Err(Error::Data(alloc::format!(
                    "dates not consecutive: {} followed by {}",
                    w[0],
                    w[1]
                )));
            }
        }
        if let Some(i) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(alloc::format!("non-finite response at {}", self.dates[i])));
        }
        if let Some(i) = self.x.as_slice().iter().position(|v| !v.is_finite()) {
            let k = self.x.cols();
            return Err(Error::Data(alloc::format!(
                "non-finite predictor {} at {}",
                self.names[i % k],
                self.dates[i / k]
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_predictors(&self) -> usize {
        self.x.cols()
    }

    pub fn index_of(&self, month: Month) -> Option<usize> {
        let first = *self.dates.first()?;
        let i = first.months_until(month);
        (i >= 0 && (i as usize) < self.len()).then_some(i as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_arithmetic() {
        let m = Month::from_yyyymm(195612).unwrap();
        assert_eq!(m.succ().yyyymm(), 195701);
        assert_eq!(m.add(-12).yyyymm(), 195512);
        assert_eq!(m.months_until(Month::from_yyyymm(201012).unwrap()), 648);
        assert!(Month::from_yyyymm(195613).is_err());
        assert_eq!(alloc::format!("{m}"), "1956:12");
    }

    #[test]
    fn duplicate_month_is_named() {
        let d = Dataset {
            dates: alloc::vec![Month::from_yyyymm(200001).unwrap(); 2],
            y: alloc::vec![0.0; 2],
            x: Mat::zeros(2, 0),
            names: Vec::new(),
            recession: alloc::vec![false; 2],
            risk_free: None,
        };
        let msg = alloc::format!("{}", d.validate().unwrap_err());
        assert!(msg.contains("2000:01"), "{msg}");
    }
}

//! Binary persistence of posterior draws and predictive locations.
//!
//! # Draw file layout (version 1, all integers and floats little-endian)
//!
//! ```text
//! offset  size  field
//! 0       8     magic "TVPSVDRW"
//! 8       4     format version (u32) = 1
//! 12      4     model code (u32)
//! 16      4     active-block flags (u32)
//! 20      8     seed (u64)
//! 28      8     configuration hash (u64)
//! 36      8     K, regressors (u64)
//! 44      8     T, estimation sample length (u64)
//! 52      8     M, retained draws (u64)
//! 60      4     number of arrays A (u32)
//! 64      ...   A descriptors: name length (u16), UTF-8 name, rows (u64), width (u64)
//! ...     ...   A arrays in descriptor order, rows × width f64 values, row-major
//! ```
//!
//! The file size is therefore `64 + Σ(18 + name length) + 8 Σ rows·width`.

use std::io::{Read, Write};
use std::path::Path;

use tvpsv_core::data::Month;
use tvpsv_core::model::{ModelFlags, ModelId};
use tvpsv_core::sampler::{DrawStore, PredictiveDensity};

use crate::{Error, Result};

pub const DRAW_MAGIC: &[u8; 8] = b"TVPSVDRW";
pub const DRAW_VERSION: u32 = 1;
pub const FIXED_HEADER_BYTES: usize = 64;

/// A draw store together with the run that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawFile {
    pub model: ModelId,
    pub seed: u64,
    pub config_hash: u64,
    pub store: DrawStore,
}

/// Rows of every array in a store: one per draw, or one for summaries.
fn array_rows(name: &str, n_draws: usize) -> usize {
    match name {
        "h_mean" | "beta_mean" | "acceptance" => 1,
        _ => n_draws,
    }
}

pub fn encode_draws(file: &DrawFile) -> Result<Vec<u8>> {
    let s = &file.store;
    s.validate()?;
    let arrays = s.arrays();
    let m = s.n_draws();
    let mut buf = Vec::new();
    buf.extend_from_slice(DRAW_MAGIC);
    buf.extend_from_slice(&DRAW_VERSION.to_le_bytes());
    buf.extend_from_slice(&file.model.code().to_le_bytes());
    buf.extend_from_slice(&s.flags.bits().to_le_bytes());
    buf.extend_from_slice(&file.seed.to_le_bytes());
    buf.extend_from_slice(&file.config_hash.to_le_bytes());
    for v in [s.k, s.t_len, m] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    buf.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    for a in &arrays {
        buf.extend_from_slice(&(a.name.len() as u16).to_le_bytes());
        buf.extend_from_slice(a.name.as_bytes());
        buf.extend_from_slice(&(array_rows(a.name, m) as u64).to_le_bytes());
        buf.extend_from_slice(&(a.width as u64).to_le_bytes());
    }
    for a in &arrays {
        for v in a.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

pub fn persist_draws(file: &DrawFile, path: &Path) -> Result<()> {
    let bytes = encode_draws(file)?;
    let mut f = std::fs::File::create(path).map_err(Error::io(path))?;
    f.write_all(&bytes).map_err(Error::io(path))?;
    f.sync_all().map_err(Error::io(path))
}

/// Read a draw file. A differing `expected_hash` only logs a warning: the
/// draws are still valid, just not produced by the current configuration.
pub fn load_draws(path: &Path, expected_hash: Option<u64>) -> Result<DrawFile> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(Error::io(path))?;
    let file = decode_draws(&bytes).map_err(|msg| Error::format(path, msg))?;
    if let Some(h) = expected_hash {
        if h != file.config_hash {
            log::warn!(
                "{}: configuration hash {:016x} differs from the current configuration {:016x}",
                path.display(),
                file.config_hash,
                h
            );
        }
    }
    Ok(file)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| {
            format!(
                "file truncated while reading {what} at byte {} ({} bytes available)",
                self.pos,
                self.bytes.len()
            )
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> std::result::Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn usize(&mut self, what: &str) -> std::result::Result<usize, String> {
        usize::try_from(self.u64(what)?).map_err(|_| format!("{what} does not fit in memory"))
    }

    fn f64s(&mut self, n: usize, what: &str) -> std::result::Result<Vec<f64>, String> {
        let bytes = self.take(n.checked_mul(8).ok_or("array size overflows")?, what)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode_draws(bytes: &[u8]) -> std::result::Result<DrawFile, String> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8, "magic")? != DRAW_MAGIC {
        return Err("not a tvpsv draw file (bad magic)".into());
    }
    let version = c.u32("version")?;
    if version != DRAW_VERSION {
        return Err(format!(
            "unsupported draw file version {version}; this build reads version {DRAW_VERSION}"
        ));
    }
    let code = c.u32("model code")?;
    let model = ModelId::from_code(code).ok_or_else(|| format!("unknown model code {code}"))?;
    let flags = ModelFlags::from_bits(c.u32("flags")?);
    let seed = c.u64("seed")?;
    let config_hash = c.u64("configuration hash")?;
    let k = c.usize("K")?;
    let t_len = c.usize("T")?;
    let m = c.usize("draw count")?;
    let n_arrays = c.u32("array count")? as usize;
    let mut descriptors = Vec::with_capacity(n_arrays.min(64));
    for i in 0..n_arrays {
        let len = c.u16("array name length")? as usize;
        let name = std::str::from_utf8(c.take(len, "array name")?)
            .map_err(|_| format!("array {i} has a non-UTF-8 name"))?
            .to_string();
        let rows = c.usize("array rows")?;
        let width = c.usize("array width")?;
        descriptors.push((name, rows, width));
    }
    let mut store = DrawStore::empty(k, t_len, flags);
    let mut seen = Vec::new();
    for (name, rows, width) in descriptors {
        if rows != array_rows(&name, m) {
            return Err(format!("array '{name}' has {rows} rows, expected {}", array_rows(&name, m)));
        }
        let n = rows.checked_mul(width).ok_or("array size overflows")?;
        let data = c.f64s(n, &format!("array '{name}'"))?;
        store.set_array(&name, width, data).map_err(|e| e.to_string())?;
        seen.push(name);
    }
    for name in DrawStore::ARRAY_NAMES {
        if !seen.iter().any(|s| s == name) {
            return Err(format!("array '{name}' missing"));
        }
    }
    if c.pos != bytes.len() {
        return Err(format!("{} trailing bytes after the last array", bytes.len() - c.pos));
    }
    store.validate().map_err(|e| e.to_string())?;
    Ok(DrawFile {
        model,
        seed,
        config_hash,
        store,
    })
}

pub const PREDICTIVE_MAGIC: &[u8; 8] = b"TVPSVPRD";
pub const PREDICTIVE_VERSION: u32 = 1;

/// Predictive locations of one model at every backtest origin, the input of
/// the trading evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveFile {
    pub model: ModelId,
    pub origins: Vec<PredictiveOrigin>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveOrigin {
    pub origin: Month,
    pub target: Month,
    pub realized: f64,
    /// Risk-free rate of the target month, if known.
    pub risk_free: Option<f64>,
    pub recession: bool,
    /// Per-draw predictive means.
    pub locations: Vec<f64>,
}

impl PredictiveOrigin {
    pub fn from_density(
        record: &tvpsv_core::evalharness::BacktestRecord,
        pd: &PredictiveDensity,
        risk_free: Option<f64>,
    ) -> Self {
        PredictiveOrigin {
            origin: record.origin,
            target: record.target,
            realized: record.realized,
            risk_free,
            recession: record.recession,
            locations: pd.location.clone(),
        }
    }
}

/// Layout: magic, version u32, model code u32, origin count u64, draw count
/// u64, then per origin: origin u32, target u32, realized f64, risk-free f64
/// (NaN when absent), recession u8, draw locations.
pub fn persist_predictive(file: &PredictiveFile, path: &Path) -> Result<()> {
    let m = file.origins.first().map_or(0, |o| o.locations.len());
    if file.origins.iter().any(|o| o.locations.len() != m) {
        return Err(Error::Data("every origin must hold the same number of draws".into()));
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(PREDICTIVE_MAGIC);
    buf.extend_from_slice(&PREDICTIVE_VERSION.to_le_bytes());
    buf.extend_from_slice(&file.model.code().to_le_bytes());
    buf.extend_from_slice(&(file.origins.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(m as u64).to_le_bytes());
    for o in &file.origins {
        buf.extend_from_slice(&o.origin.yyyymm().to_le_bytes());
        buf.extend_from_slice(&o.target.yyyymm().to_le_bytes());
        buf.extend_from_slice(&o.realized.to_le_bytes());
        buf.extend_from_slice(&o.risk_free.unwrap_or(f64::NAN).to_le_bytes());
        buf.push(o.recession as u8);
        for v in &o.locations {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(Error::io(path))
}

pub fn load_predictive(path: &Path) -> Result<PredictiveFile> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    decode_predictive(&bytes).map_err(|msg| Error::format(path, msg))
}

fn decode_predictive(bytes: &[u8]) -> std::result::Result<PredictiveFile, String> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8, "magic")? != PREDICTIVE_MAGIC {
        return Err("not a tvpsv predictive file (bad magic)".into());
    }
    let version = c.u32("version")?;
    if version != PREDICTIVE_VERSION {
        return Err(format!(
            "unsupported predictive file version {version}; this build reads version {PREDICTIVE_VERSION}"
        ));
    }
    let code = c.u32("model code")?;
    let model = ModelId::from_code(code).ok_or_else(|| format!("unknown model code {code}"))?;
    let n = c.usize("origin count")?;
    let m = c.usize("draw count")?;
    let month = |v: u32| Month::from_yyyymm(v).map_err(|_| format!("invalid month {v}"));
    let mut origins = Vec::with_capacity(n.min(100_000));
    for _ in 0..n {
        let origin = month(c.u32("origin")?)?;
        let target = month(c.u32("target")?)?;
        let realized = f64::from_le_bytes(c.take(8, "realized")?.try_into().unwrap());
        let rf = f64::from_le_bytes(c.take(8, "risk-free")?.try_into().unwrap());
        let recession = c.take(1, "recession flag")?[0] != 0;
        let locations = c.f64s(m, "locations")?;
        origins.push(PredictiveOrigin {
            origin,
            target,
            realized,
            risk_free: (!rf.is_nan()).then_some(rf),
            recession,
            locations,
        });
    }
    if c.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - c.pos));
    }
    Ok(PredictiveFile { model, origins })
}

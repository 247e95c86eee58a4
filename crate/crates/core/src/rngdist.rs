//! Random variates and log-densities used by the sampler blocks.
//!
//! GIG convention everywhere: density ∝ x^{p-1} exp(-(a x + b/x) / 2) on x > 0.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};

use crate::math::{ln_gamma, LN_PI};
use crate::{Error, Result};

/// Deterministic random stream keyed by `(seed, stream id)`.
///
/// Distinct stream ids with the same seed give independent sequences, which is
/// how forecast origins and parallel chains get their own generators.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha12Rng,
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream {
            inner,
            seed,
            stream,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A new stream derived from this one's seed; used to fan out sub-tasks.
    pub fn substream(&self, stream: u64) -> Self {
        RngStream::new(self.seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(self.stream + 1), stream)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[inline]
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(alloc::format!("{name} must be positive and finite, got {v}")))
    }
}

/// Gamma variate with the given shape and rate.
pub fn draw_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    positive("gamma shape", shape)?;
    positive("gamma rate", rate)?;
    let g = Gamma::new(shape, 1.0).map_err(|_| Error::param("gamma shape"))?;
    Ok(g.sample(rng) / rate)
}

/// `log` of a Gamma(shape, 1) variate, accurate for tiny shapes where the
/// variate itself underflows.
pub fn draw_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    positive("gamma shape", shape)?;
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).map_err(|_| Error::param("gamma shape"))?;
        return Ok(g.sample(rng).ln());
    }
    // G(a) = G(a + 1) · U^{1/a}
    let g = Gamma::new(shape + 1.0, 1.0).map_err(|_| Error::param("gamma shape"))?;
    Ok(g.sample(rng).ln() + uniform(rng).ln() / shape)
}

/// Inverse-gamma variate: density ∝ x^{-shape-1} exp(-rate / x).
pub fn draw_inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    positive("inverse-gamma shape", shape)?;
    positive("inverse-gamma rate", rate)?;
    let g = Gamma::new(shape, 1.0).map_err(|_| Error::param("gamma shape"))?;
    Ok(rate / g.sample(rng))
}

pub fn draw_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let x = draw_log_gamma(a, rng)?;
    let y = draw_log_gamma(b, rng)?;
    let m = x.max(y);
    let (ex, ey) = ((x - m).exp(), (y - m).exp());
    Ok(ex / (ex + ey))
}

/// Dirichlet variate, computed in log space so tiny concentrations do not
/// collapse to an all-zero vector.
pub fn draw_dirichlet<R: Rng + ?Sized>(conc: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let logs = conc
        .iter()
        .map(|&c| draw_log_gamma(c, rng))
        .collect::<Result<Vec<_>>>()?;
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| (x / s).max(f64::MIN_POSITIVE)).collect())
}

/// Parameters of a generalized inverse Gaussian law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    p: f64,
    a: f64,
    b: f64,
}

impl GigParams {
    pub fn new(p: f64, a: f64, b: f64) -> Result<Self> {
        let ok = p.is_finite()
            && a.is_finite()
            && b.is_finite()
            && a >= 0.0
            && b >= 0.0
            && (p > 0.0 || b > 0.0)
            && (p < 0.0 || a > 0.0);
        if ok {
            Ok(GigParams { p, a, b })
        } else {
            Err(Error::param(alloc::format!("GIG(p={p}, a={a}, b={b}) is not normalizable")))
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Unnormalized log-density.
    pub fn log_kernel(&self, x: f64) -> f64 {
        (self.p - 1.0) * x.ln() - 0.5 * (self.a * x + self.b / x)
    }
}

/// Draw from GIG(p, a, b) with the Hörmann–Leydold rejection schemes:
/// ratio-of-uniforms with mode shift, without shift, or the constant-hat
/// method for small ω = √(ab) and index below one.
pub fn draw_gig<R: Rng + ?Sized>(params: GigParams, rng: &mut R) -> f64 {
    // X ~ GIG(p, a, b)  ⇔  1/X ~ GIG(-p, b, a)
    let (lambda, a, b, invert) = if params.p < 0.0 {
        (-params.p, params.b, params.a, true)
    } else {
        (params.p, params.a, params.b, false)
    };
    let omega = (a * b).sqrt();
    let scale = (b / a).sqrt();
    let x = if b == 0.0 || omega == 0.0 || !scale.is_finite() || scale == 0.0 {
        // Gamma limit; validation guarantees lambda > 0 here.
        let g = Gamma::new(lambda, 2.0 / a).expect("validated GIG");
        g.sample(rng)
    } else {
        let y = if lambda > 2.0 || omega > 3.0 {
            gig_rou_shift(lambda, omega, rng)
        } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
            gig_rou_noshift(lambda, omega, rng)
        } else {
            gig_constant_hat(lambda, omega, rng)
        };
        scale * y
    };
    if invert {
        1.0 / x
    } else {
        x
    }
}

/// Inverse Gaussian with the given mean and shape, as GIG(-1/2, shape/mean², shape).
pub fn draw_inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> Result<f64> {
    positive("inverse-Gaussian mean", mean)?;
    positive("inverse-Gaussian shape", shape)?;
    let params = GigParams::new(-0.5, shape / (mean * mean), shape)?;
    Ok(draw_gig(params, rng))
}

/// Mode of the standardized GIG(λ, ω, ω) density.
fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0) * (lambda - 1.0) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda) * (1.0 - lambda) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn gig_rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0) * (lambda + 1.0) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * uniform(rng);
        let v = uniform(rng);
        let x = u / v;
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn gig_rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // extrema of (x - xm) sqrt(f(x)): roots of y³ + a y² + b y + c
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * core::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + uniform(rng) * (uplus - uminus);
        let v = uniform(rng);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Rejection from a piecewise hat: constant on the log-concave part
/// `[0, x0]`, power-law then exponential tails.
fn gig_constant_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let area0 = k0 * x0;
    let (k1, area1, k2, area2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        area1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        area2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        area1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        area2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = area0 + area1 + area2;
    let tail_start = x0.max(2.0 / omega);
    loop {
        let mut v = total * uniform(rng);
        let (x, hx);
        if v <= area0 {
            x = x0 * v / area0;
            hx = k0;
        } else {
            v -= area0;
            if v <= area1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= area1;
                x = -2.0 / omega * ((-omega / 2.0 * tail_start).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        let u = uniform(rng) * hx;
        if x > 0.0 && x.is_finite() && u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// Log-density of a location-scale Student-t: `(1/scale) t_dof((x - loc)/scale)`.
/// An infinite `dof` gives the Gaussian limit.
pub fn student_t_logpdf(x: f64, dof: f64, location: f64, scale: f64) -> f64 {
    let z = (x - location) / scale;
    if dof.is_infinite() {
        return -0.5 * (crate::math::LN_2PI + z * z) - scale.ln();
    }
    ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof.ln() + LN_PI) - scale.ln()
        - 0.5 * (dof + 1.0) * (z * z / dof).ln_1p()
}

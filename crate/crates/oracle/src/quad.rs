//! Gauss-Legendre quadrature and normalized moments of unnormalized densities
//! on the positive half-line.

const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Composite 10-point Gauss-Legendre rule on `[lo, hi]` with `panels` panels.
pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

/// Density on `(0, ∞)` given by its log-kernel, tabulated on `u = ln x`.
///
/// The effective support is located by scanning `u` and keeping the range
/// where the log-integrand is within 60 nats of its maximum.
pub struct PositiveDensity<F: Fn(f64) -> f64> {
    log_kernel: F,
    lo: f64,
    hi: f64,
    shift: f64,
    norm: f64,
}

const PANELS: usize = 4000;

impl<F: Fn(f64) -> f64> PositiveDensity<F> {
    pub fn new(log_kernel: F) -> Self {
        let g = |u: f64| log_kernel(u.exp()) + u;
        let (mut best, mut best_u) = (f64::NEG_INFINITY, 0.0);
        let mut u = -200.0;
        while u <= 200.0 {
            let v = g(u);
            if v > best {
                best = v;
                best_u = u;
            }
            u += 0.01;
        }
        let mut lo = best_u;
        while lo > -700.0 && g(lo) > best - 60.0 {
            lo -= 0.05;
        }
        let mut hi = best_u;
        while hi < 700.0 && g(hi) > best - 60.0 {
            hi += 0.05;
        }
        let mut d = PositiveDensity {
            log_kernel,
            lo,
            hi,
            shift: best,
            norm: 1.0,
        };
        d.norm = d.raw_integral(|_| 1.0, hi);
        d
    }

    fn raw_integral(&self, w: impl Fn(f64) -> f64, upper_u: f64) -> f64 {
        if upper_u <= self.lo {
            return 0.0;
        }
        let hi = upper_u.min(self.hi);
        integrate(
            |u| {
                let x = u.exp();
                w(x) * ((self.log_kernel)(x) + u - self.shift).exp()
            },
            self.lo,
            hi,
            PANELS,
        )
    }

    /// `E[w(X)]`.
    pub fn expect(&self, w: impl Fn(f64) -> f64) -> f64 {
        self.raw_integral(w, self.hi) / self.norm
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        (self.raw_integral(|_| 1.0, x.ln()) / self.norm).clamp(0.0, 1.0)
    }

    /// Log normalizing constant of the kernel.
    pub fn log_normalizer(&self) -> f64 {
        self.norm.ln() + self.shift
    }

    /// Grid of `(x, cdf)` pairs for inverse-CDF sampling.
    pub fn cdf_table(&self, points: usize) -> Vec<(f64, f64)> {
        let h = (self.hi - self.lo) / points as f64;
        let mut out = Vec::with_capacity(points + 1);
        let mut acc = 0.0;
        let mut prev = self.lo;
        out.push((self.lo.exp(), 0.0));
        for i in 1..=points {
            let u = self.lo + i as f64 * h;
            acc += integrate(
                |v| ((self.log_kernel)(v.exp()) + v - self.shift).exp(),
                prev,
                u,
                4,
            );
            prev = u;
            out.push((u.exp(), acc / self.norm));
        }
        out
    }
}

//! Monte Carlo summaries and a tiny independent random generator.

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Standard error of the mean of iid draws.
pub fn se_mean(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// z-score of a sample mean against a known expectation.
pub fn z_score(sample: &[f64], expected: f64) -> f64 {
    (mean(sample) - expected) / se_mean(sample)
}

pub fn sample_kurtosis(x: &[f64]) -> f64 {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2)
}

/// xorshift64* generator; deliberately unrelated to the generator under test.
pub struct XorShift(u64);

impl XorShift {
    pub fn new(seed: u64) -> Self {
        XorShift(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform on (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Inverse-CDF draw from a monotone `(x, cdf)` table.
    pub fn from_table(&mut self, table: &[(f64, f64)]) -> f64 {
        let u = self.uniform() * table.last().unwrap().1;
        let i = table.partition_point(|(_, c)| *c < u).clamp(1, table.len() - 1);
        let (x0, c0) = table[i - 1];
        let (x1, c1) = table[i];
        if c1 > c0 {
            // interpolate on log x
            let w = (u - c0) / (c1 - c0);
            (x0.ln() + w * (x1.ln() - x0.ln())).exp()
        } else {
            x1
        }
    }
}

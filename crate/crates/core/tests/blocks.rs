//! Conditional updates checked against dense or quadrature oracles.

use tvpsv_core::heavytails::*;
use tvpsv_core::linalg::Mat;
use tvpsv_core::rngdist::{draw_inverse_gamma, std_normal, uniform, GigParams};
use tvpsv_core::shrinkage::*;
use tvpsv_core::state_space::*;
use tvpsv_core::stochvol::*;
use tvpsv_core::RngStream;
use tvpsv_oracle::{dense, dist, quad::PositiveDensity, stats};

struct Instance {
    obs: Vec<f64>,
    loadings: Mat,
    obs_var: Vec<f64>,
    state_var: Mat,
}

impl Instance {
    fn random(t: usize, k: usize, seed: u64) -> Self {
        let mut rng = RngStream::new(seed, 0);
        let loadings = Mat::from_fn(t, k, |_, _| std_normal(&mut rng));
        let state_var = Mat::from_fn(t, k, |_, _| 0.05 + uniform(&mut rng));
        let obs_var: Vec<f64> = (0..t).map(|_| 0.2 + 2.0 * uniform(&mut rng)).collect();
        let obs = (0..t).map(|_| 2.0 * std_normal(&mut rng)).collect();
        Instance { obs, loadings, obs_var, state_var }
    }

    fn inputs(&self) -> SsmInputs<'_> {
        SsmInputs {
            obs: &self.obs,
            loadings: &self.loadings,
            obs_var: &self.obs_var,
            state_var: &self.state_var,
        }
    }

    fn rows(m: &Mat) -> Vec<Vec<f64>> {
        (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
    }
}

#[test]
fn ffbs_moments_match_dense_posterior() {
    for case in 0..20u64 {
        let (t, k) = (8 + (case as usize % 5), 1 + (case as usize % 3));
        let inst = Instance::random(t, k, 1000 + case);
        let (mean, cov) = dense::state_posterior(
            &inst.obs,
            &Instance::rows(&inst.loadings),
            &inst.obs_var,
            &Instance::rows(&inst.state_var),
        );
        let n = 20_000;
        let mut rng = RngStream::new(case, 1);
        let mut sum = vec![0.0; t * k];
        let mut sq = vec![0.0; t * k];
        for _ in 0..n {
            let path = ffbs_draw(&inst.inputs(), &mut rng).unwrap();
            for (i, v) in path.as_slice().iter().enumerate() {
                sum[i] += v;
                sq[i] += v * v;
            }
        }
        for i in 0..t * k {
            let m = sum[i] / n as f64;
            let v = sq[i] / n as f64 - m * m;
            // dense oracle stacks (b_1', …, b_T')', the same row-major layout
            let (tt, j) = (i / k, i % k);
            let d = i;
            let sd = cov[(d, d)].sqrt();
            assert!(((m - mean[d]) / (sd / (n as f64).sqrt())).abs() < 4.5, "case {case} mean at ({tt},{j})");
            let z = (v - cov[(d, d)]) / (cov[(d, d)] * (2.0 / n as f64).sqrt());
            assert!(z.abs() < 4.5, "case {case} var at ({tt},{j}): {v} vs {}", cov[(d, d)]);
        }
    }
}

#[test]
fn filter_mean_and_loglik_match_dense() {
    for case in 0..20u64 {
        let inst = Instance::random(12, 2, 2000 + case);
        let ll = marginal_loglik(&inst.inputs()).unwrap();
        let oracle = dense::marginal_loglik(
            &inst.obs,
            &Instance::rows(&inst.loadings),
            &inst.obs_var,
            &Instance::rows(&inst.state_var),
        );
        assert!((ll - oracle).abs() < 1e-8 * oracle.abs().max(1.0), "case {case}: {ll} vs {oracle}");
        // terminal filtered mean equals the smoothed mean at T
        let (mean, _) = dense::state_posterior(
            &inst.obs,
            &Instance::rows(&inst.loadings),
            &inst.obs_var,
            &Instance::rows(&inst.state_var),
        );
        let f = filter(&inst.inputs()).unwrap();
        for j in 0..2 {
            assert!((f.mean.get(11, j) - mean[11 * 2 + j]).abs() < 1e-8);
        }
    }
}

#[test]
fn ffbs_rejects_mismatched_inputs() {
    let inst = Instance::random(5, 2, 1);
    let short = [1.0; 4];
    let bad = SsmInputs { obs_var: &short, ..inst.inputs() };
    assert!(ffbs_draw(&bad, &mut RngStream::new(0, 0)).is_err());
    let zero = [0.0; 5];
    let bad = SsmInputs { obs_var: &zero, ..inst.inputs() };
    assert!(ffbs_draw(&bad, &mut RngStream::new(0, 0)).is_err());
}

#[test]
fn alpha_conditional_matches_normal_equations() {
    for case in 0..10u64 {
        let mut rng = RngStream::new(3000 + case, 0);
        let (t, n) = (30, 4);
        let design = Mat::from_fn(t, n, |_, _| std_normal(&mut rng));
        let y: Vec<f64> = (0..t).map(|_| std_normal(&mut rng)).collect();
        let noise: Vec<f64> = (0..t).map(|_| 0.3 + uniform(&mut rng)).collect();
        let prior: Vec<f64> = (0..n).map(|j| 10f64.powi(j as i32 - 2)).collect();
        let reg = WeightedRegression { response: &y, design: &design, noise_var: &noise };
        let rows: Vec<Vec<f64>> = (0..t).map(|i| design.row(i).to_vec()).collect();
        let (mean, cov) = dense::regression_posterior(&rows, &y, &noise, &prior);
        let m = alpha_posterior_mean(&reg, &prior).unwrap();
        for j in 0..n {
            assert!((m[j] - mean[j]).abs() < 1e-9 * (1.0 + mean[j].abs()));
        }
        let draws: Vec<Vec<f64>> = (0..20_000).map(|_| draw_alpha(&reg, &prior, &mut rng).unwrap()).collect();
        for j in 0..n {
            let x: Vec<f64> = draws.iter().map(|d| d[j]).collect();
            let z = (stats::mean(&x) - mean[j]) / (cov[(j, j)] / x.len() as f64).sqrt();
            assert!(z.abs() < 4.5);
            let zv = (stats::variance(&x) - cov[(j, j)]) / (cov[(j, j)] * (2.0 / x.len() as f64).sqrt());
            assert!(zv.abs() < 4.5);
        }
    }
}

#[test]
fn diffuse_prior_approaches_gls() {
    let mut rng = RngStream::new(4000, 0);
    let design = Mat::from_fn(50, 3, |_, _| std_normal(&mut rng));
    let y: Vec<f64> = (0..50).map(|_| std_normal(&mut rng)).collect();
    let noise: Vec<f64> = (0..50).map(|_| 0.5 + uniform(&mut rng)).collect();
    let reg = WeightedRegression { response: &y, design: &design, noise_var: &noise };
    let rows: Vec<Vec<f64>> = (0..50).map(|i| design.row(i).to_vec()).collect();
    let g = dense::gls(&rows, &y, &noise);
    let m = alpha_posterior_mean(&reg, &[1e12; 3]).unwrap();
    for j in 0..3 {
        assert!((m[j] - g[j]).abs() < 1e-8);
    }
    let pinned = alpha_posterior_mean(&reg, &[1.0, 0.0, 1.0]).unwrap();
    assert_eq!(pinned[1], 0.0);
}

#[test]
fn log_vol_smoother_matches_dense_ar1() {
    let params = SvParams { mu: -1.0, rho: 0.93, sigma2: 0.08 };
    for case in 0..5u64 {
        let mut rng = RngStream::new(5000 + case, 0);
        let t = 40;
        let y: Vec<f64> = (0..t).map(|_| -1.0 + 2.0 * std_normal(&mut rng)).collect();
        let r: Vec<f64> = (0..t).map(|_| MIX_VARS[(case as usize + 3) % 10] + uniform(&mut rng)).collect();
        let m = log_vol_posterior_mean(&y, &r, &params).unwrap();
        let oracle = dense::ar1_posterior_mean(&y, &r, params.mu, params.rho, params.sigma2);
        for i in 0..=t {
            assert!((m[i] - oracle[i]).abs() < 1e-9, "case {case} index {i}");
        }
        let n = 10_000;
        let mut s = vec![0.0; t + 1];
        for _ in 0..n {
            for (a, b) in s.iter_mut().zip(draw_log_vol(&y, &r, &params, &mut rng).unwrap()) {
                *a += b;
            }
        }
        for i in [0, t / 2, t] {
            assert!((s[i] / n as f64 - oracle[i]).abs() < 0.03);
        }
    }
}

#[test]
fn mixture_reproduces_log_chi_square_mean() {
    let w: f64 = MIX_WEIGHTS.iter().sum();
    assert!((w - 1.0).abs() < 1e-4);
    let m: f64 = MIX_WEIGHTS.iter().zip(&MIX_MEANS).map(|(w, m)| w * m).sum();
    assert!((m - dist::log_chi2_1_mean()).abs() < 1e-3, "{m}");
    let p = indicator_probabilities(-1.3, 0.2);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn sv_forecast_moments() {
    let params = SvParams { mu: -0.5, rho: 0.9, sigma2: 0.04 };
    let mut rng = RngStream::new(6000, 0);
    let x: Vec<f64> = (0..100_000).map(|_| sv_forecast(1.0, &params, &mut rng)).collect();
    let mean = -0.5 + 0.9 * 1.5;
    assert!(stats::z_score(&x, mean).abs() < 4.0);
    assert!((stats::variance(&x) - 0.04).abs() < 0.001);
}

#[test]
fn phi_conditional_matches_independent_oracle() {
    // φ | α for two coefficients: φ₁ = T₁/(T₁+T₂), T_j ~ GIG(a−1, 1, 2|α_j|).
    // Oracle draws T_j by inverse-CDF tables from quadrature and its own RNG.
    let (a, alpha) = (0.5, [0.3, 1.2]);
    let tables: Vec<_> = alpha
        .iter()
        .map(|al| dist::gig(a - 1.0, 1.0, 2.0 * al).cdf_table(4000))
        .collect();
    let mut xr = stats::XorShift::new(99);
    let oracle: Vec<f64> = (0..50_000)
        .map(|_| {
            let t1 = xr.from_table(&tables[0]);
            let t2 = xr.from_table(&tables[1]);
            t1 / (t1 + t2)
        })
        .collect();
    let mut rng = RngStream::new(7000, 0);
    let ours: Vec<f64> = (0..50_000).map(|_| draw_phi(&alpha, a, &mut rng).unwrap()[0]).collect();
    let mut sorted = oracle.clone();
    sorted.sort_by(f64::total_cmp);
    let ecdf = |x: f64| sorted.partition_point(|v| *v <= x) as f64 / sorted.len() as f64;
    // two-sample KS at n = m = 5e4: 1% critical value ≈ 0.0103
    assert!(stats::ks_distance(&ours, ecdf) < 0.0103);
}

#[test]
fn global_scale_conditional_matches_quadrature() {
    let alpha = [0.2, -0.05, 1.5, 0.01];
    let phi = [0.1, 0.2, 0.6, 0.1];
    let a = 0.25;
    let params = global_scale_params(&alpha, &phi, a).unwrap();
    let b: f64 = alpha.iter().zip(&phi).map(|(x, p)| x.abs() / p).sum();
    let d = dist::gig(4.0 * (a - 1.0), 1.0, 2.0 * b);
    assert!((params.b() - 2.0 * b).abs() < 1e-12);
    let mut rng = RngStream::new(8000, 0);
    let x: Vec<f64> = (0..100_000).map(|_| draw_global_scale(&alpha, &phi, a, &mut rng).unwrap()).collect();
    assert!(stats::z_score(&x, d.mean()).abs() < 4.0);
}

#[test]
fn local_scale_reciprocal_is_inverse_gaussian() {
    let (phi, lambda, al) = (0.3, 2.0, 0.4);
    let m = phi * lambda / al;
    let mut rng = RngStream::new(9000, 0);
    let r: Vec<f64> = (0..100_000)
        .map(|_| 1.0 / draw_local_scales(&[al], &[phi], lambda, &mut rng).unwrap()[0])
        .collect();
    assert!(stats::ks_distance(&r, |x| dist::inverse_gaussian_cdf(m, 1.0, x)) < 0.01);
}

#[test]
fn tiny_coefficients_are_not_clamped() {
    // For p < 0 and b -> 0, GIG(p, 1, b) approaches InvGamma(-p, b/2), so
    // T_0 for |α_0| = 1e-14 has median near 1e-14 / 0.2275. Clamping |α| to
    // a floor of 1e-10 would put it four orders of magnitude higher.
    let mut rng = RngStream::new(8100, 0);
    let mut phi0: Vec<f64> = (0..4001).map(|_| draw_phi(&[1e-14, 1.0], 0.5, &mut rng).unwrap()[0]).collect();
    phi0.sort_by(f64::total_cmp);
    let median = phi0[2000];
    assert!(median > 1e-15 && median < 1e-12, "median {median}");

    // Local scales stay finite and positive for tiny and zero coefficients.
    let psi = draw_local_scales(&[1e-300, 0.0, 5.0], &[1e-200, 0.5, 1e-200], 1.0, &mut rng).unwrap();
    assert!(psi.iter().all(|p| *p > 0.0 && p.is_finite()), "{psi:?}");
    // (5 / 1e-200)² overflows; the law is then a point mass at 5e200.
    assert_eq!(psi[2], 5e200);
}

#[test]
fn dl_prior_concentrates_as_a_shrinks() {
    // Share of total |α| held by the largest coefficient grows as a → 0.
    let mut rng = RngStream::new(10_000, 0);
    let mut share = |a: f64| {
        let n = 4000;
        (0..n)
            .map(|_| {
                let (_, al) = draw_dl_prior(10, a, &mut rng).unwrap();
                let tot: f64 = al.iter().map(|v| v.abs()).sum();
                al.iter().map(|v| v.abs()).fold(0.0, f64::max) / tot
            })
            .sum::<f64>()
            / n as f64
    };
    let (s1, s2, s3) = (share(1.0), share(0.5), share(0.1));
    assert!(s1 < s2 && s2 < s3, "{s1} {s2} {s3}");
}

#[test]
fn dof_mode_tracks_generating_value() {
    let prior = DofPrior::default();
    for (i, &nu) in [3.0, 8.0, 20.0].iter().enumerate() {
        let mut rng = RngStream::new(11_000 + i as u64, 0);
        let s: Vec<f64> = (0..20_000).map(|_| draw_inverse_gamma(nu / 2.0, nu / 2.0, &mut rng).unwrap()).collect();
        let mode = dof_mode(s.len(), scale_statistic(&s), &prior).unwrap();
        assert!((mode - nu).abs() < 0.15 * nu, "{nu} -> {mode}");
    }
}

#[test]
fn dof_chain_reproduces_truncated_conditional() {
    // Fixed scales: the MH chain for ν must reproduce the quadrature conditional.
    let prior = DofPrior::default();
    let mut rng = RngStream::new(12_000, 0);
    let s: Vec<f64> = (0..30).map(|_| draw_inverse_gamma(3.0, 3.0, &mut rng).unwrap()).collect();
    let stat = scale_statistic(&s);
    let target = PositiveDensity::new(move |nu: f64| {
        if nu < prior.lower || nu > prior.upper {
            f64::NEG_INFINITY
        } else {
            dof_loglik(30, stat, nu) + (prior.shape - 1.0) * nu.ln() - prior.rate * nu
        }
    });
    let mut nu = 10.0;
    let mut accepted = 0;
    let draws: Vec<f64> = (0..100_000)
        .map(|_| {
            let d = update_dof(&s, nu, &prior, &mut rng);
            accepted += d.accepted as usize;
            nu = d.value;
            nu
        })
        .collect();
    // Independence sampler: draws are nearly independent, so a loose z suffices
    let ess = tvpsv_core::diagnostics::effective_sample_size(&draws);
    let z = (stats::mean(&draws) - target.mean()) / (stats::variance(&draws) / ess).sqrt();
    assert!(z.abs() < 4.0, "z {z}, mean {} vs {}", stats::mean(&draws), target.mean());
    assert!(accepted as f64 / 100_000.0 > 0.3);
}

#[test]
fn student_t_draws_match_quantiles() {
    let mut rng = RngStream::new(13_000, 0);
    for &nu in &[3.0, 7.0, 30.0] {
        let mut x: Vec<f64> = (0..100_000).map(|_| draw_student_t(nu, &mut rng).unwrap()).collect();
        x.sort_by(f64::total_cmp);
        for &p in &[0.05, 0.5, 0.95] {
            let q = dist::student_t_quantile(nu, p);
            let frac = x.partition_point(|v| *v <= q) as f64 / x.len() as f64;
            assert!((frac - p).abs() < 0.005, "ν={nu} p={p}: {frac}");
        }
    }
}

#[test]
fn gig_params_expose_kernel() {
    let g = GigParams::new(1.5, 2.0, 3.0).unwrap();
    let x: f64 = 0.7;
    assert!((g.log_kernel(x) - (0.5 * x.ln() - 0.5 * (2.0 * x + 3.0 / x))).abs() < 1e-12);
}

#[test]
fn interweaving_keeps_the_centered_paths() {
    let (t_len, k) = (30, 3);
    let mut rng = RngStream::new(12, 0);
    let mut b = Mat::zeros(t_len, k);
    for j in 0..k {
        let mut level = 0.0;
        for t in 0..t_len {
            level += std_normal(&mut rng);
            b.set(t, j, level);
        }
    }
    let xi = Mat::from_fn(t_len, k, |_, _| 0.5 + uniform(&mut rng));
    // The third scale is zero and must be left alone.
    let alpha = vec![0.4, -1.2, 0.3, 0.2, -0.05, 0.0];
    let centered = |b: &Mat, a: &[f64]| -> Vec<f64> {
        (0..t_len).flat_map(|t| (0..k).map(move |j| (t, j))).map(|(t, j)| a[j] + a[k + j] * b.get(t, j)).collect()
    };
    let before = centered(&b, &alpha);
    let (mut b2, mut alpha2) = (b.clone(), alpha.clone());
    interweave_states(&mut b2, &mut alpha2, &xi, &[10.0; 6], &mut rng).unwrap();
    for (x, y) in before.iter().zip(centered(&b2, &alpha2)) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
    assert_ne!(alpha2[0], alpha[0]);
    assert!(alpha2[3] > 0.0 && alpha2[4] < 0.0, "signs of the scales are kept");
    assert_eq!((alpha2[2], alpha2[5]), (0.3, 0.0));
    assert_eq!(b2.column(2), b.column(2));
    assert!(interweave_states(&mut b2, &mut alpha2[..4].to_vec(), &xi, &[10.0; 6], &mut rng).is_err());
}

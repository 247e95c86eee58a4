//! Joint-distribution tests of the full sweep and end-to-end recovery checks.

use tvpsv_core::geweke::{run_geweke, GewekeConfig};
use tvpsv_core::model::{ModelFlags, ModelId, Priors, SamplerConfig};
use tvpsv_core::sampler::{log_predictive_score, one_step_predictive, run_chain, simulate_dgp, DgpTruth};
use tvpsv_core::stochvol::SvParams;
use tvpsv_core::RngStream;
use tvpsv_oracle::{dist, stats};

fn geweke_priors() -> Priors {
    let mut p = Priors::default();
    // the observation offset biases y* slightly; exact conditionals need it off
    p.sv.log_offset = 0.0;
    // A tighter volatility prior keeps the noise level moderate so the chain
    // can move across the heavy-tailed coefficient prior; any proper prior is
    // a valid test target.
    p.sv.priors.mu_sd = 1.0;
    p.sv.priors.sigma2_rate = 5.0;
    p
}

fn geweke(flags: ModelFlags, n_cycles: usize, seed: u64) {
    let report = run_geweke(&GewekeConfig {
        t_len: 25,
        k: 2,
        flags,
        priors: geweke_priors(),
        n_cycles,
        seed,
        design_scale: 0.1,
    })
    .unwrap();
    for c in &report.checks {
        eprintln!("{:<12} m{} prior {:>10.4} chain {:>10.4} z {:>6.2}", c.quantity, c.moment, c.prior_value, c.chain_value, c.z);
    }
    let failures = report.failures(4.0);
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn geweke_constant_coefficients() {
    geweke(ModelFlags::CONSTANT, 50_000, 1);
}

#[test]
fn geweke_all_dl_variants() {
    for (i, m) in [ModelId::TvpSvDl, ModelId::TTvpSvDl1, ModelId::TTvpSvDl2, ModelId::TTvpSvDl3].iter().enumerate() {
        eprintln!("== {m}");
        geweke(m.flags(), 50_000, 10 + i as u64);
    }
}


fn truth(k: usize) -> DgpTruth {
    DgpTruth {
        beta0: vec![0.5; k],
        v: vec![0.0; k],
        sv: Some(SvParams { mu: -1.0, rho: 0.95, sigma2: 0.05 }),
        log_var: 0.0,
        nu: None,
        kappa: None,
        intercept: true,
    }
}

#[test]
fn constant_regression_recovers_coefficients() {
    let mut t = truth(3);
    t.beta0 = vec![0.3, -0.8, 1.2];
    let sim = simulate_dgp(&t, 500, 21).unwrap();
    let config = SamplerConfig { seed: 4, ..SamplerConfig::new(3000, 1000, ModelId::RegSv.flags()) };
    let draws = run_chain(&sim.data, &Priors::default(), &config).unwrap();
    for (j, truth) in t.beta0.iter().enumerate() {
        let c = draws.column("beta0", j).unwrap();
        let z = (stats::mean(&c) - truth) / stats::variance(&c).sqrt();
        assert!(z.abs() < 3.5, "beta0[{j}] z {z}");
    }
    let mu = stats::mean(&draws.mu);
    assert!((mu + 1.0).abs() < 1.0, "mu {mu}");
}

#[test]
fn heavy_tailed_dgp_has_t_kurtosis() {
    // Constant variance, ν = 12: kurtosis 3 + 6/(ν − 4) = 3.75.
    let t = DgpTruth { sv: None, nu: Some(12.0), beta0: vec![0.0], ..truth(1) };
    let sim = simulate_dgp(&t, 400_000, 5).unwrap();
    let k = stats::sample_kurtosis(&sim.data.y);
    assert!((k - 3.75).abs() < 0.15, "kurtosis {k}");
    let g = simulate_dgp(&DgpTruth { nu: None, ..t }, 400_000, 5).unwrap();
    assert!((stats::sample_kurtosis(&g.data.y) - 3.0).abs() < 0.05);
}

#[test]
fn predictive_score_is_a_mixture_of_densities() {
    let sim = simulate_dgp(&DgpTruth { nu: Some(6.0), ..truth(2) }, 200, 8).unwrap();
    let config = SamplerConfig { seed: 2, ..SamplerConfig::new(600, 200, ModelId::TTvpSvDl1.flags()) };
    let draws = run_chain(&sim.data, &Priors::default(), &config).unwrap();
    let pd = one_step_predictive(&draws, &[1.0, 0.3], &mut RngStream::new(2, 9)).unwrap();
    for y in [-1.0, 0.2, 2.5] {
        let direct = (0..pd.len())
            .map(|m| dist::student_t_logpdf(y, pd.dof[m], pd.location[m], (0.5 * pd.log_var[m]).exp()).exp())
            .sum::<f64>()
            / pd.len() as f64;
        assert!((log_predictive_score(&pd, y) - direct.ln()).abs() < 1e-10);
    }
}

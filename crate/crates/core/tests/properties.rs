use proptest::prelude::*;
use tvpsv_core::data::Month;
use tvpsv_core::evalharness::{relative_metrics, BacktestRecord, Regime};
use tvpsv_core::heavytails::truncated_normal;
use tvpsv_core::linalg::Mat;
use tvpsv_core::model::{ModelFlags, ModelId};
use tvpsv_core::rngdist::{draw_gig, student_t_logpdf, GigParams};
use tvpsv_core::shrinkage::draw_phi;
use tvpsv_core::state_space::{ffbs_draw, marginal_loglik, SsmInputs};
use tvpsv_core::trading::{return_performance, signal, Position, Thresholds};
use tvpsv_core::RngStream;

fn rank(p: Position) -> i32 {
    match p {
        Position::Short => -1,
        Position::Bonds => 0,
        Position::Long => 1,
    }
}

proptest! {
    #[test]
    fn gig_draws_are_positive_and_finite(p in -30.0f64..30.0, a in 1e-6f64..50.0, b in 1e-6f64..50.0, seed in any::<u64>()) {
        let params = GigParams::new(p, a, b).unwrap();
        let mut rng = RngStream::new(seed, 0);
        for _ in 0..20 {
            let x = draw_gig(params, &mut rng);
            prop_assert!(x > 0.0 && x.is_finite());
        }
    }

    #[test]
    fn phi_lies_on_the_simplex(alpha in prop::collection::vec(-5.0f64..5.0, 1..12), a in 0.05f64..3.0, seed in any::<u64>()) {
        let phi = draw_phi(&alpha, a, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert!(phi.iter().all(|v| *v > 0.0));
        prop_assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn truncated_normal_stays_in_bounds(mean in -100.0f64..100.0, sd in 1e-3f64..100.0, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let x = truncated_normal(mean, sd, 2.0, 50.0, &mut rng);
        prop_assert!((2.0..=50.0).contains(&x));
    }

    #[test]
    fn student_t_is_symmetric_and_peaks_at_location(x in -50.0f64..50.0, dof in 0.5f64..200.0, loc in -3.0f64..3.0, scale in 0.01f64..10.0) {
        let d = x - loc;
        let l = student_t_logpdf(loc + d, dof, loc, scale);
        let r = student_t_logpdf(loc - d, dof, loc, scale);
        prop_assert!((l - r).abs() < 1e-9 * l.abs().max(1.0));
        prop_assert!(student_t_logpdf(loc, dof, loc, scale) >= l);
    }

    #[test]
    fn signal_is_monotone(a in -0.1f64..0.1, b in -0.1f64..0.1, lo in -0.05f64..0.0, width in 1e-4f64..0.05) {
        let th = Thresholds { lower: lo, upper: lo + width };
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(rank(signal(x, th)) <= rank(signal(y, th)));
    }

    #[test]
    fn sharpe_is_scale_invariant(r in prop::collection::vec(-0.2f64..0.2, 3..60), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = r.iter().map(|v| v * c).collect();
        match (return_performance(&r, 12.0), return_performance(&scaled, 12.0)) {
            (Ok(p), Ok(q)) => prop_assert!((p.sharpe - q.sharpe).abs() < 1e-8 * p.sharpe.abs().max(1.0)),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "scaling changed definedness"),
        }
    }

    #[test]
    fn self_comparison_is_neutral(vals in prop::collection::vec((-0.3f64..0.3, -0.3f64..0.3, -5.0f64..2.0, any::<bool>()), 2..40)) {
        let origin = Month::new(1960, 1).unwrap();
        let recs: Vec<BacktestRecord> = vals.iter().enumerate().map(|(i, &(y, f, lps, rec))| BacktestRecord {
            model: ModelId::RegSv,
            origin: origin.add(i as i64),
            target: origin.add(i as i64 + 1),
            realized: y,
            point: f,
            lps,
            recession: rec,
        }).collect();
        let report = relative_metrics(&recs, &recs).unwrap();
        for regime in Regime::ALL {
            let m = report.get(regime);
            prop_assert_eq!(m.log_bf, 0.0);
            if m.n > 0 && m.sse_benchmark > 0.0 {
                prop_assert!((m.rel_rmse - 1.0).abs() < 1e-12);
            }
        }
        prop_assert_eq!(report.get(Regime::Full).n, report.get(Regime::Recession).n + report.get(Regime::Expansion).n);
    }

    #[test]
    fn month_arithmetic_roundtrips(y in 1900u32..2100, m in 1u32..=12, d in -2000i64..2000) {
        let a = Month::new(y, m).unwrap();
        let b = a.add(d);
        prop_assert_eq!(a.months_until(b), d);
        prop_assert_eq!(b.add(-d), a);
        prop_assert_eq!(Month::from_yyyymm(a.yyyymm()).unwrap(), a);
    }

    #[test]
    fn flag_bits_roundtrip(tvp in any::<bool>(), t_obs in any::<bool>(), t_state in any::<bool>(), dl in any::<bool>()) {
        let f = ModelFlags { tvp, t_obs, t_state, dl };
        prop_assert_eq!(ModelFlags::from_bits(f.bits()), f);
    }

    #[test]
    fn ffbs_paths_are_finite_and_loglik_ignores_sign_of_loadings(t in 1usize..15, k in 1usize..4, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        use tvpsv_core::rngdist::{std_normal, uniform};
        let obs: Vec<f64> = (0..t).map(|_| std_normal(&mut rng)).collect();
        let load = Mat::from_fn(t, k, |_, _| std_normal(&mut rng));
        let neg = Mat::from_fn(t, k, |i, j| -load.get(i, j));
        let obs_var: Vec<f64> = (0..t).map(|_| 0.1 + uniform(&mut rng)).collect();
        let state_var = Mat::from_fn(t, k, |_, _| 0.1 + uniform(&mut rng));
        let a = SsmInputs { obs: &obs, loadings: &load, obs_var: &obs_var, state_var: &state_var };
        let b = SsmInputs { loadings: &neg, ..a };
        let path = ffbs_draw(&a, &mut rng).unwrap();
        prop_assert!(path.as_slice().iter().all(|v| v.is_finite()));
        let (la, lb) = (marginal_loglik(&a).unwrap(), marginal_loglik(&b).unwrap());
        prop_assert!((la - lb).abs() < 1e-9 * la.abs().max(1.0));
    }
}

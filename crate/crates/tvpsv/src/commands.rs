//! The subcommands. Each writes its outputs under the output directory and
//! finishes with a `manifest.json` that lists them with their SHA-256.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tvpsv_core::data::{Dataset, Month};
use tvpsv_core::diagnostics::{mean, variance};
use tvpsv_core::evalharness::{cumulative_series, relative_metrics, BacktestRecord, Regime};
use tvpsv_core::geweke::{run_geweke, GewekeConfig};
use tvpsv_core::linalg::Mat;
use tvpsv_core::model::{ModelFlags, ModelId};
use tvpsv_core::rngdist::{draw_beta, draw_gamma, draw_gig, draw_inverse_gaussian, std_normal, uniform, GigParams};
use tvpsv_core::state_space::{marginal_loglik, SsmInputs};
use tvpsv_oracle::{dense, dist, stats};
use tvpsv_core::sampler::{run_chain, simulate_dgp, DgpTruth};
use tvpsv_core::stochvol::SvParams;
use tvpsv_core::trading::{point_performance, posterior_performance, SharpeSummary};
use tvpsv_core::RngStream;

use crate::config::RunConfig;
use crate::dataset::{apply_recessions, load_dataset, load_recessions, write_dataset, ColumnMap};
use crate::report::{emit_report, CumulativeRow, MetricsRow, RecordRow, TradingRow};
use crate::store::{load_predictive, persist_draws, persist_predictive, DrawFile, PredictiveFile, PredictiveOrigin};
use crate::{backtest, Error, Result, VERSION};

/// State shared by every command: the resolved configuration and the files
/// written so far.
pub struct Run {
    pub config: RunConfig,
    pub command: &'static str,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(config: RunConfig, command: &'static str) -> Result<Run> {
        std::fs::create_dir_all(&config.output.dir).map_err(Error::io(&config.output.dir))?;
        Ok(Run {
            config,
            command,
            outputs: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.output.dir
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    fn record(&mut self, path: PathBuf) {
        log::info!("wrote {}", path.display());
        self.outputs.push(path);
    }

    fn report<T: Serialize>(&mut self, rows: &[T], stem: &str) -> Result<()> {
        for &f in &self.config.output.formats.clone() {
            let p = emit_report(rows, f, self.out_dir(), stem)?;
            self.record(p);
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, value: &T, name: &str) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).expect("value serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(Error::io(&path))?;
        self.record(path);
        Ok(())
    }

    /// Write `manifest.json`. Contains no timestamps, so identical runs give
    /// identical manifests.
    pub fn finish(self) -> Result<PathBuf> {
        let mut outputs = BTreeMap::new();
        for p in &self.outputs {
            let bytes = std::fs::read(p).map_err(Error::io(p))?;
            let rel = p.strip_prefix(self.out_dir()).unwrap_or(p);
            outputs.insert(rel.display().to_string(), hex(&Sha256::digest(&bytes)));
        }
        let manifest = serde_json::json!({
            "version": VERSION,
            "command": self.command,
            "profile": self.config.profile.name(),
            "seed": self.config.seed,
            "config_hash": format!("{:016x}", self.config.hash()),
            "config": self.config,
            "outputs": outputs,
        });
        let path = self.path("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(Error::io(&path))?;
        Ok(path)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Load the dataset named in `[data]`, recession ranges applied.
pub fn load_configured_data(config: &RunConfig) -> Result<Dataset> {
    let section = config.data_section()?;
    let map: ColumnMap = section.column_map()?;
    let mut data = load_dataset(&section.path, &map, section.lag_predictors)?;
    if let Some(path) = &section.recessions {
        apply_recessions(&mut data, &load_recessions(path)?);
    }
    log::info!(
        "loaded {} months {}..{} with {} predictors",
        data.len(),
        data.dates[0],
        data.dates[data.len() - 1],
        data.n_predictors()
    );
    Ok(data)
}

#[derive(Serialize)]
struct FitSummary {
    model: String,
    n_draws: usize,
    t_len: usize,
    k: usize,
    acceptance: [f64; 3],
    posterior_mean: BTreeMap<String, f64>,
    ess: BTreeMap<String, f64>,
}

/// Fit the configured model on the whole schedule window and store the draws.
pub fn fit(run: &mut Run) -> Result<()> {
    let data = load_configured_data(&run.config)?;
    let model = run.config.model;
    let schedule = run.config.schedule()?;
    let start = schedule.start_index(&data)?;
    let end = data
        .index_of(schedule.final_month)
        .unwrap_or(data.len() - 1);
    let spec = run.config.spec(model);
    let chain_data = model.design().chain_data(&data, start, end, spec.intercept)?;
    let settings = run.config.sampler_config();
    let sampler = tvpsv_core::model::SamplerConfig {
        flags: model.flags(),
        ..settings
    };
    log::info!("fitting {model} on {} observations, {} sweeps", chain_data.len(), sampler.n_iter);
    let store = run_chain(&chain_data, &spec.priors, &sampler)?;

    let mut posterior_mean = BTreeMap::new();
    for name in ["mu", "rho", "sigma2", "nu"] {
        if name != "nu" || store.flags.t_obs {
            posterior_mean.insert(name.to_string(), mean(store.array(name).unwrap()));
        }
    }
    for (name, on) in [("beta0", true), ("sqrt_v", store.flags.tvp), ("kappa", store.flags.t_state)] {
        for j in 0..store.k {
            if on {
                posterior_mean.insert(format!("{name}[{j}]"), mean(&store.column(name, j).unwrap()));
            }
        }
    }
    let summary = FitSummary {
        model: model.name().into(),
        n_draws: store.n_draws(),
        t_len: store.t_len,
        k: store.k,
        acceptance: store.acceptance,
        posterior_mean,
        ess: store.ess().into_iter().collect(),
    };
    let file = DrawFile {
        model,
        seed: run.config.seed,
        config_hash: run.config.hash(),
        store,
    };
    let path = run.path(&format!("draws_{}.bin", model.name()));
    persist_draws(&file, &path)?;
    run.record(path);
    run.json(&summary, &format!("fit_{}.json", model.name()))
}

fn record_row(r: &BacktestRecord) -> RecordRow {
    RecordRow {
        model: r.model.name().into(),
        origin: r.origin.yyyymm(),
        target: r.target.yyyymm(),
        realized: r.realized,
        point: r.point,
        lps: r.lps,
        recession: r.recession,
    }
}

/// Expanding-window backtest of every configured model and the benchmark.
pub fn run_backtest(run: &mut Run) -> Result<()> {
    let data = load_configured_data(&run.config)?;
    let schedule = run.config.schedule()?;
    let benchmark = run.config.benchmark;
    let mut results: BTreeMap<ModelId, Vec<BacktestRecord>> = BTreeMap::new();
    for model in run.config.backtest_models() {
        let spec = run.config.spec(model);
        let settings = tvpsv_core::model::SamplerConfig {
            flags: model.flags(),
            ..run.config.sampler_config()
        };
        log::info!("backtesting {model}");
        let out = backtest::backtest_locations(&data, &spec, &schedule, &settings)?;
        let (records, origins): (Vec<_>, Vec<_>) = out.into_iter().unzip();
        let path = run.path(&format!("predictive_{}.bin", model.name()));
        persist_predictive(&PredictiveFile { model, origins }, &path)?;
        run.record(path);
        results.insert(model, records);
    }

    let order = run.config.backtest_models();
    let rows: Vec<RecordRow> = order.iter().flat_map(|m| results[m].iter().map(record_row)).collect();
    run.report(&rows, "records")?;

    let bench = &results[&benchmark];
    let mut metrics = Vec::new();
    let mut cumulative = Vec::new();
    for m in order.iter().filter(|m| **m != benchmark) {
        let report = relative_metrics(&results[m], bench)?;
        for regime in Regime::ALL {
            let r = report.get(regime);
            metrics.push(MetricsRow {
                model: m.name().into(),
                regime: regime.name().into(),
                rel_rmse: r.rel_rmse,
                log_bf: r.log_bf,
            });
        }
        for p in cumulative_series(&results[m], bench)? {
            cumulative.push(CumulativeRow {
                origin: p.origin.yyyymm(),
                model: m.name().into(),
                cum_log_bf: p.cum_log_bf,
                cum_se: p.cum_se,
            });
        }
    }
    // The benchmark's own squared errors, so every curve can be differenced.
    for p in cumulative_series(bench, bench)? {
        cumulative.push(CumulativeRow {
            origin: p.origin.yyyymm(),
            model: benchmark.name().into(),
            cum_log_bf: 0.0,
            cum_se: p.cum_se,
        });
    }
    cumulative.sort_by(|a, b| a.origin.cmp(&b.origin));
    run.report(&metrics, "metrics")?;
    run.report(&cumulative, "cumulative")
}

fn empty_summary(n: usize) -> SharpeSummary {
    SharpeSummary {
        mean_return: f64::NAN,
        sd_return: f64::NAN,
        sharpe: f64::NAN,
        n_used: 0,
        n_excluded: n,
    }
}

/// Three-way trading rule on the stored predictive draws, by regime, with
/// positions from every draw and from the predictive mean.
pub fn trade(run: &mut Run) -> Result<()> {
    let th = run.config.thresholds();
    let ppy = run.config.trading.periods_per_year;
    let mut draw_rows = Vec::new();
    let mut point_rows = Vec::new();
    for model in run.config.backtest_models() {
        let path = run.path(&format!("predictive_{}.bin", model.name()));
        if !path.exists() {
            return Err(Error::Data(format!(
                "{} not found; run `tvpsv backtest` with the same configuration first",
                path.display()
            )));
        }
        let file = load_predictive(&path)?;
        if file.model != model {
            return Err(Error::format(&path, format!("holds {} draws, expected {model}", file.model)));
        }
        for regime in Regime::ALL {
            let sel: Vec<&PredictiveOrigin> = file.origins.iter().filter(|o| regime.includes(o.recession)).collect();
            let realized: Vec<f64> = sel.iter().map(|o| o.realized).collect();
            let locations: Vec<Vec<f64>> = sel.iter().map(|o| o.locations.clone()).collect();
            let points: Vec<f64> = sel.iter().map(|o| mean(&o.locations)).collect();
            let rf: Option<Vec<f64>> = sel.iter().map(|o| o.risk_free).collect();
            let n_draws = locations.first().map_or(0, Vec::len);
            let evaluate = |draws: &dyn Fn(Option<&[f64]>) -> tvpsv_core::Result<SharpeSummary>, n: usize| {
                if sel.len() < 2 {
                    return Ok::<_, Error>((empty_summary(n), None));
                }
                let excess = draws(None)?;
                let total = match &rf {
                    Some(rf) => Some(draws(Some(rf))?),
                    None => None,
                };
                Ok((excess, total))
            };
            let (d, dt) = evaluate(&|rf| posterior_performance(&locations, &realized, rf, th, ppy), n_draws)?;
            let (p, pt) = evaluate(&|rf| point_performance(&points, &realized, rf, th, ppy), 1)?;
            for ((s, total), rows) in [((d, dt), &mut draw_rows), ((p, pt), &mut point_rows)] {
                rows.push(TradingRow {
                    model: model.name().into(),
                    regime: regime.name().into(),
                    mu: s.mean_return,
                    sigma: s.sd_return,
                    sharpe: s.sharpe,
                    mu_total: total.map(|t| t.mean_return),
                    sigma_total: total.map(|t| t.sd_return),
                    n_used: s.n_used,
                    n_excluded: s.n_excluded,
                });
            }
        }
    }
    run.report(&draw_rows, "trading_draw")?;
    run.report(&point_rows, "trading_point")
}

#[derive(Serialize)]
struct Truth {
    beta0: Vec<f64>,
    state_var: Vec<f64>,
    sv: BTreeMap<&'static str, f64>,
    nu: Option<f64>,
    kappa: Option<Vec<f64>>,
    /// Coefficient paths, one row per month, intercept first.
    beta: Vec<Vec<f64>>,
    h: Vec<f64>,
}

/// Write a synthetic dataset, its recession ranges, the true parameters and
/// a configuration that fits it.
///
/// Predictors are written one row early, as in published predictor panels,
/// so loading with lagging switched on recovers the simulated design.
pub fn simulate(run: &mut Run) -> Result<()> {
    let s = run.config.simulate.clone();
    let first = Month::from_yyyymm(s.start).map_err(|_| Error::Config(format!("simulate.start = {}", s.start)))?;
    let last = Month::from_yyyymm(s.end).map_err(|_| Error::Config(format!("simulate.end = {}", s.end)))?;
    let t_len = first.months_until(last) + 1;
    if t_len < 3 {
        return Err(Error::Config("simulate.end must come at least two months after simulate.start".into()));
    }
    let t_len = t_len as usize;
    let k = s.n_predictors + 1;
    let truth = DgpTruth {
        beta0: s.beta0.clone(),
        v: vec![s.state_var; k],
        sv: Some(SvParams {
            mu: s.sv_mu,
            rho: s.sv_rho,
            sigma2: s.sv_sigma2,
        }),
        log_var: s.sv_mu,
        nu: s.nu,
        kappa: s.kappa.map(|kp| vec![kp; k]),
        intercept: true,
    };
    // One leading month whose response is dropped by the lag, and one
    // trailing predictor row.
    let sim = simulate_dgp(&truth, t_len + 2, run.config.seed)?;
    let rows = t_len + 1;
    let dates: Vec<Month> = (0..rows).map(|r| first.add(r as i64 - 1)).collect();
    let x = Mat::from_fn(rows, s.n_predictors, |r, j| sim.data.x.get(r + 1, j + 1));
    let mut rng = RngStream::new(run.config.seed, 1);
    let mut in_recession = false;
    let recession: Vec<bool> = (0..rows)
        .map(|_| {
            let u = uniform(&mut rng);
            in_recession = if in_recession { u >= s.recession_exit } else { u < s.recession_entry };
            in_recession
        })
        .collect();
    let data = Dataset {
        dates: dates.clone(),
        y: sim.data.y[..rows].to_vec(),
        x,
        names: (1..=s.n_predictors).map(|j| format!("x{j}")).collect(),
        recession: recession.clone(),
        risk_free: None,
    };
    let data_path = run.path("data.csv");
    write_dataset(&data_path, &data)?;
    run.record(data_path);

    let mut ranges = Vec::new();
    let mut open: Option<Month> = None;
    for (d, r) in dates.iter().zip(&recession).skip(1) {
        match (open, *r) {
            (None, true) => open = Some(*d),
            (Some(a), false) => {
                ranges.push((a, d.add(-1)));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(a) = open {
        ranges.push((a, last));
    }
    let rec_path = run.path("recessions.csv");
    let mut text = String::from("start,end\n");
    for (a, b) in &ranges {
        text.push_str(&format!("{},{}\n", a.yyyymm(), b.yyyymm()));
    }
    std::fs::write(&rec_path, text).map_err(Error::io(&rec_path))?;
    run.record(rec_path);

    let truth_out = Truth {
        beta0: truth.beta0.clone(),
        state_var: truth.v.clone(),
        sv: [("mu", s.sv_mu), ("rho", s.sv_rho), ("sigma2", s.sv_sigma2)].into_iter().collect(),
        nu: s.nu,
        kappa: truth.kappa.clone(),
        beta: (1..=t_len).map(|t| sim.beta.row(t).to_vec()).collect(),
        h: sim.h[1..=t_len].to_vec(),
    };
    run.json(&truth_out, "truth.json")?;

    let mut cfg = run.config.clone();
    cfg.data = Some(crate::config::DataSection {
        path: PathBuf::from("data.csv"),
        recessions: Some(PathBuf::from("recessions.csv")),
        date: "yyyymm".into(),
        excess: Some("excess".into()),
        returns: None,
        risk_free: None,
        recession_column: None,
        predictors: data.names.iter().cloned().map(crate::config::PredictorEntry::Column).collect(),
        lag_predictors: true,
    });
    let sch = &mut cfg.schedule;
    sch.sample_start = first.yyyymm();
    sch.final_month = last.yyyymm();
    let initial = Month::from_yyyymm(sch.initial_end).ok();
    if !initial.is_some_and(|m| m > first && m.add(1) < last) {
        sch.initial_end = first.add(t_len as i64 / 2).yyyymm();
    }
    let cfg_path = run.path("config.toml");
    std::fs::write(&cfg_path, cfg.to_toml()).map_err(Error::io(&cfg_path))?;
    run.record(cfg_path);
    Ok(())
}

/// One named check of the `validate` command.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

/// Joint-distribution tests of each sampler block plus moment checks of the
/// random-variate generators. Prints one line per check.
pub fn validate(run: &mut Run, cycles: usize) -> Result<()> {
    let mut checks = distribution_checks(run.config.seed);
    checks.extend(oracle_checks(run.config.seed)?);
    let mut priors = run.config.priors();
    // Weakly informative simulated data keep the chains mixing; see `GewekeConfig`.
    priors.sv.log_offset = 0.0;
    priors.sv.priors.mu_sd = 1.0;
    priors.sv.priors.sigma2_rate = 5.0;
    let suites = [
        ("sv", ModelFlags::CONSTANT),
        ("state", ModelFlags { tvp: true, ..ModelFlags::CONSTANT }),
        ("shrinkage", ModelFlags { tvp: true, dl: true, ..ModelFlags::CONSTANT }),
        ("obs-dof", ModelFlags { t_obs: true, ..ModelFlags::CONSTANT }),
        ("state-dof", ModelFlags { tvp: true, t_state: true, ..ModelFlags::CONSTANT }),
    ];
    for (i, (name, flags)) in suites.into_iter().enumerate() {
        log::info!("joint-distribution test '{name}', {cycles} cycles");
        let report = run_geweke(&GewekeConfig {
            t_len: 25,
            k: 2,
            flags,
            priors,
            n_cycles: cycles,
            seed: run.config.seed.wrapping_add(i as u64),
            design_scale: 0.1,
        })?;
        for c in &report.checks {
            checks.push(Check {
                name: format!("geweke/{name}/{}/m{}", c.quantity, c.moment),
                value: c.z.abs(),
                limit: 3.0,
                passed: c.z.abs() < 3.0,
            });
        }
    }
    for c in &checks {
        println!(
            "{} {:<44} {:>10.4} < {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
    run.json(&checks, "validate.json")?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{} of {} checks failed: {}", failed.len(), checks.len(), failed.join(", "))))
    }
}

/// Sample means against closed forms, as z-scores with the sample standard
/// error.
fn distribution_checks(seed: u64) -> Vec<Check> {
    const N: usize = 200_000;
    let mut rng = RngStream::new(seed, 7);
    let mut out = Vec::new();
    let mut check = |name: &str, draws: Vec<f64>, expected: f64| {
        let z = (mean(&draws) - expected) / (variance(&draws) / draws.len() as f64).sqrt();
        out.push(Check {
            name: format!("moments/{name}"),
            value: z.abs(),
            limit: 4.0,
            passed: z.abs() < 4.0,
        });
    };
    let gamma: Vec<f64> = (0..N).map(|_| draw_gamma(0.3, 2.0, &mut rng).unwrap()).collect();
    check("gamma(0.3,2)/mean", gamma, 0.15);
    let gamma: Vec<f64> = (0..N).map(|_| draw_gamma(4.0, 0.5, &mut rng).unwrap()).collect();
    let sq: Vec<f64> = gamma.iter().map(|g| g * g).collect();
    check("gamma(4,0.5)/mean", gamma, 8.0);
    check("gamma(4,0.5)/second", sq, 4.0 * 5.0 / 0.25);
    let beta: Vec<f64> = (0..N).map(|_| draw_beta(2.0, 5.0, &mut rng).unwrap()).collect();
    check("beta(2,5)/mean", beta, 2.0 / 7.0);
    let ig: Vec<f64> = (0..N).map(|_| draw_inverse_gaussian(1.5, 0.7, &mut rng).unwrap()).collect();
    let ig_var: Vec<f64> = ig.iter().map(|x| (x - 1.5) * (x - 1.5)).collect();
    check("inverse-gaussian(1.5,0.7)/mean", ig, 1.5);
    check("inverse-gaussian(1.5,0.7)/variance", ig_var, 1.5f64.powi(3) / 0.7);
    out
}

/// Samplers against independent references: Kolmogorov-Smirnov distances to
/// quadrature or closed-form CDFs, and the Kalman likelihood against dense
/// Gaussian algebra.
fn oracle_checks(seed: u64) -> Result<Vec<Check>> {
    const N: usize = 20_000;
    // 0.1% critical value of the one-sample KS statistic.
    let ks_limit = 1.95 / (N as f64).sqrt();
    let mut rng = RngStream::new(seed, 8);
    let mut out = Vec::new();
    for (p, a, b) in [(-0.3, 2.0, 0.5), (2.5, 0.1, 3.0), (-4.5, 1.0, 40.0)] {
        let params = GigParams::new(p, a, b)?;
        let draws: Vec<f64> = (0..N).map(|_| draw_gig(params, &mut rng)).collect();
        let reference = dist::gig(p, a, b);
        let d = stats::ks_distance(&draws, |x| reference.cdf(x));
        out.push(Check {
            name: format!("oracle/gig({p},{a},{b})/ks"),
            value: d,
            limit: ks_limit,
            passed: d < ks_limit,
        });
    }
    let draws: Vec<f64> = (0..N).map(|_| draw_inverse_gaussian(0.4, 2.0, &mut rng)).collect::<tvpsv_core::Result<_>>()?;
    let d = stats::ks_distance(&draws, |x| dist::inverse_gaussian_cdf(0.4, 2.0, x));
    out.push(Check {
        name: "oracle/inverse-gaussian(0.4,2)/ks".into(),
        value: d,
        limit: ks_limit,
        passed: d < ks_limit,
    });

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (t_len, k) = (5, 2);
        let loadings = Mat::from_fn(t_len, k, |_, _| std_normal(&mut rng));
        let state_var = Mat::from_fn(t_len, k, |_, _| 0.1 + uniform(&mut rng));
        let obs: Vec<f64> = (0..t_len).map(|_| std_normal(&mut rng)).collect();
        let obs_var: Vec<f64> = (0..t_len).map(|_| 0.2 + uniform(&mut rng)).collect();
        let ll = marginal_loglik(&SsmInputs {
            obs: &obs,
            loadings: &loadings,
            obs_var: &obs_var,
            state_var: &state_var,
        })?;
        let rows = |m: &Mat| (0..t_len).map(|t| m.row(t).to_vec()).collect::<Vec<_>>();
        let reference = dense::marginal_loglik(&obs, &rows(&loadings), &obs_var, &rows(&state_var));
        let err = (ll - reference).abs();
        log::debug!("kalman loglik {ll} vs dense {reference}");
        // A NaN error must fail the check rather than vanish in `max`.
        worst = if err.is_nan() || worst.is_nan() { f64::NAN } else { worst.max(err) };
    }
    out.push(Check {
        name: "oracle/kalman-loglik/max-abs-error".into(),
        value: worst,
        limit: 1e-8,
        passed: worst < 1e-8,
    });
    Ok(out)
}

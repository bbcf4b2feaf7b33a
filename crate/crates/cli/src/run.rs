//! Scenario execution.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fractail_core::asymptotics::{build_tail_model, exponent_ladder, model_error_order, moments};
use fractail_core::fit::{log_log_fit, LinearFit};
use fractail_core::forward::{
    decay_bound_check, fractional_integral_tail, psi_tail, running_decay_bound, ForwardError, ModalTail, SourceSpec,
};
use fractail_core::inverse::{
    extract_spectral_sums, extractions_agree, heat_contrast_experiment, recover_modal_amplitudes,
    scalar_moment_recovery, uniqueness_experiment, vanishing_exponential_moment_source, Extraction, ExtractionMode,
    TailData, TailExperiment,
};
use fractail_core::mittag_leffler::{ml_eval, MlParams};
use fractail_core::spectral::{observe, pairing_coefficients, EigenSystem, SpatialProfile};
use fractail_oracle::{MlOracle, OracleError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::output::{bar_chart, line_plot, num, Scale, Series, Table};
use crate::scenario::{ConfigError, ExperimentKind, ExtractionChoice, Scenario};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "FRACTAIL_THREADS";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Module { context: &'static str, source: fractail_core::Error },
    #[error("{context}: {source}")]
    Oracle { context: &'static str, source: OracleError },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("output directory {0} is in use by another run")]
    Busy(PathBuf),
    #[error("output directory {0} is not empty and holds no earlier run")]
    NotOurs(PathBuf),
    #[error("{THREADS_ENV} must be a positive integer, got {0:?}")]
    Threads(String),
}

trait Context<T> {
    fn context(self, context: &'static str) -> Result<T, RunError>;
}

impl<T, E: Into<fractail_core::Error>> Context<T> for Result<T, E> {
    fn context(self, context: &'static str) -> Result<T, RunError> {
        self.map_err(|e| RunError::Module { context, source: e.into() })
    }
}

/// A declared tolerance and the measured value it was compared with.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

/// A fitted quantity with its residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub name: String,
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub experiment: ExperimentKind,
    /// SHA-256 of the scenario text.
    pub digest: String,
    pub seed: u64,
    pub outputs: Vec<(String, String)>,
    pub fits: Vec<Fitted>,
    pub checks: Vec<Check>,
    pub timings: Vec<(String, Duration)>,
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "fractail run report");
        let _ = writeln!(s, "experiment: {}", self.experiment.name());
        let _ = writeln!(s, "scenario sha256: {}", self.digest);
        let _ = writeln!(s, "rng_seed: {}", self.seed);
        let _ = writeln!(s, "\n[outputs]");
        for (k, v) in &self.outputs {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "\n[fits]");
        for f in &self.fits {
            let _ = writeln!(s, "{} = {:.10e} (residual {:.3e})", f.name, f.value, f.residual);
        }
        let _ = writeln!(s, "\n[checks]");
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{verdict} {}: {:.3e} (tolerance {:.3e})", c.name, c.value, c.tolerance);
        }
        let _ = writeln!(s, "\n[timings]");
        for (k, d) in &self.timings {
            let _ = writeln!(s, "{k}: {:.3} s", d.as_secs_f64());
        }
        let _ = writeln!(s, "\n[artifacts]");
        for p in &self.artifacts {
            let _ = writeln!(s, "{}", p.display());
        }
        let _ = writeln!(s, "\nverdict: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Worker pool sized by `FRACTAIL_THREADS`, or by rayon's default when the
/// variable is unset.
pub fn thread_pool() -> Result<rayon::ThreadPool, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => builder = builder.num_threads(n),
            _ => return Err(RunError::Threads(raw)),
        }
    }
    builder.build().map_err(|_| RunError::Threads("pool construction failed".into()))
}

/// Uniform noise in `[−level, level]` from a seeded ChaCha stream.
pub fn add_noise(values: &mut [f64], level: f64, seed: u64) {
    if level > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in values {
            *v += level * rng.random_range(-1.0..=1.0);
        }
    }
}

/// Tables, plots and report entries produced by one experiment.
#[derive(Default)]
struct Outcome {
    tables: Vec<Table>,
    plots: Vec<(String, String)>,
    outputs: Vec<(String, String)>,
    fits: Vec<Fitted>,
    checks: Vec<Check>,
    timings: Vec<(String, Duration)>,
}

impl Outcome {
    fn output(&mut self, key: &str, value: impl ToString) {
        self.outputs.push((key.to_owned(), value.to_string()));
    }

    fn fit(&mut self, name: impl Into<String>, value: f64, residual: f64) {
        self.fits.push(Fitted { name: name.into(), value, residual });
    }

    fn line_fit(&mut self, name: &str, f: &LinearFit) {
        self.fit(format!("{name}.slope"), f.slope, f.slope_std_error);
        self.fit(format!("{name}.r_squared"), f.r_squared, f.rms_residual);
    }

    fn timed<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push((label.to_owned(), start.elapsed()));
        out
    }
}

/// Runs a parsed scenario, writing artifacts into `out_dir`.
pub fn run(scenario: &Scenario, text: &str, out_dir: &Path, plots: bool) -> Result<RunReport, RunError> {
    let pool = thread_pool()?;
    let outcome = pool.install(|| execute(scenario))?;
    let _lock = OutputLock::acquire(out_dir)?;
    let mut artifacts = Vec::new();
    for table in &outcome.tables {
        let path = table.write(out_dir).map_err(|source| RunError::Io { path: out_dir.join(&table.name), source })?;
        artifacts.push(path);
    }
    if plots || scenario.output.plots {
        for (name, svg) in &outcome.plots {
            let path = out_dir.join(format!("{name}.svg"));
            std::fs::write(&path, svg).map_err(|source| RunError::Io { path: path.clone(), source })?;
            artifacts.push(path);
        }
    }
    let report_path = out_dir.join("report.txt");
    artifacts.push(report_path.clone());
    let report = RunReport {
        experiment: scenario.experiment,
        digest: digest(text),
        seed: scenario.rng_seed,
        outputs: outcome.outputs,
        fits: outcome.fits,
        checks: outcome.checks,
        timings: outcome.timings,
        artifacts,
    };
    std::fs::write(&report_path, report.render()).map_err(|source| RunError::Io { path: report_path, source })?;
    Ok(report)
}

const LOCK_FILE: &str = ".fractail.lock";

/// Exclusive ownership of an output directory for the length of a run.
/// Artifacts of an earlier run are removed; a non-empty directory that
/// does not hold an earlier run is refused.
struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    fn acquire(dir: &Path) -> Result<Self, RunError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| RunError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let path = dir.join(LOCK_FILE);
        std::fs::OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                RunError::Busy(dir.to_path_buf())
            } else {
                RunError::Io { path: path.clone(), source: e }
            }
        })?;
        let lock = Self { path };
        let entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io(dir))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io(dir))?;
        let previous_run = entries.iter().any(|p| p.file_name().is_some_and(|n| n == "report.txt"));
        let foreign = entries.iter().filter(|p| **p != lock.path).count();
        if foreign > 0 && !previous_run {
            return Err(RunError::NotOurs(dir.to_path_buf()));
        }
        for p in entries {
            let ours = p.file_name().is_some_and(|n| n == "report.txt")
                || p.extension().is_some_and(|e| e == "csv" || e == "svg");
            if ours && p.is_file() {
                std::fs::remove_file(&p).map_err(io(&p))?;
            }
        }
        Ok(lock)
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

fn execute(s: &Scenario) -> Result<Outcome, RunError> {
    match s.experiment {
        ExperimentKind::MlfTable => mlf_table(s),
        ExperimentKind::Forward => forward(s),
        ExperimentKind::Tail => tail(s),
        ExperimentKind::Extract => extract(s),
        ExperimentKind::Scalar => scalar(s),
        ExperimentKind::Uniqueness => uniqueness(s),
        ExperimentKind::HeatContrast => contrast(s),
    }
}

fn modal_tails(
    system: &EigenSystem,
    alpha: f64,
    source: &SourceSpec,
    times: &[f64],
) -> Result<Vec<ModalTail>, RunError> {
    system
        .eigenvalues()
        .par_iter()
        .map(|&l| psi_tail(l, alpha, source, times))
        .collect::<Result<Vec<_>, _>>()
        .context("modal tails")
}

/// Pairings `a_n` of the scenario profile with its observation.
fn pairings(s: &Scenario, system: &EigenSystem) -> Result<Vec<f64>, RunError> {
    let profile = s.profile();
    match s.observation_spec(system).context("observation")? {
        Some(obs) => pairing_coefficients(&profile, system, &obs).context("pairings"),
        None => Ok((0..system.len()).map(|n| profile.coefficient(n)).collect()),
    }
}

fn observed(tails: &[ModalTail], pairings: &[f64]) -> Vec<f64> {
    (0..tails[0].times.len())
        .map(|i| {
            let c: Vec<f64> = tails.iter().map(|t| t.values[i]).collect();
            observe(&c, pairings)
        })
        .collect()
}

fn relative(x: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        x.abs()
    } else {
        ((x - truth) / truth).abs()
    }
}

fn mlf_table(s: &Scenario) -> Result<Outcome, RunError> {
    let mut out = Outcome::default();
    let cfg = s.mlf.as_ref().expect("validated");
    let params = MlParams::new(s.alpha, cfg.beta).context("parameters")?;
    let mut oracle =
        MlOracle::new(s.alpha, cfg.beta).map_err(|source| RunError::Oracle { context: "oracle", source })?;
    let etas: Vec<f64> = (0..cfg.points)
        .map(|i| cfg.eta_min * (cfg.eta_max / cfg.eta_min).powf(i as f64 / (cfg.points - 1) as f64))
        .collect();
    let values: Vec<f64> = out.timed("evaluation", || etas.iter().map(|&e| ml_eval(params, -e)).collect());
    let refs =
        out.timed("oracle", || etas.iter().map(|&e| oracle.eval(-e).map(|r| r.value)).collect::<Result<Vec<_>, _>>());
    let refs = refs.map_err(|source| RunError::Oracle { context: "oracle", source })?;
    let mut table = Table::new("mlf", &["eta", "value", "oracle", "rel_error"]);
    let mut worst = 0.0_f64;
    let mut series = Vec::new();
    for ((&eta, &v), &r) in etas.iter().zip(&values).zip(&refs) {
        let err = relative(v, r);
        worst = worst.max(err);
        table.push(vec![num(eta), num(v), num(r), num(err)]);
        series.push((eta, err.max(1e-18)));
    }
    out.output("alpha", s.alpha);
    out.output("beta", cfg.beta);
    out.output("max_rel_error", format!("{worst:e}"));
    if let Some(tol) = s.tolerances.max_oracle_error {
        out.checks.push(Check::at_most("max relative error against the oracle", worst, tol));
    }
    out.tables.push(table);
    let curve = Series {
        label: format!("E({}, {})", s.alpha, cfg.beta),
        points: etas.iter().zip(&values).map(|(&e, &v)| (e, v.abs())).collect(),
    };
    out.plots.push(("mlf".into(), line_plot("|E_{α,β}(−η)|", "η", "|E|", &[curve], Scale::Log, Scale::Log)));
    out.plots.push((
        "mlf_error".into(),
        line_plot(
            "relative error against the oracle",
            "η",
            "error",
            &[Series { label: "error".into(), points: series }],
            Scale::Log,
            Scale::Log,
        ),
    ));
    Ok(out)
}

fn forward(s: &Scenario) -> Result<Outcome, RunError> {
    let mut out = Outcome::default();
    let system = s.eigensystem().context("operator")?;
    let source = s.source_spec().context("source")?;
    let times = s.times();
    let tails = out.timed("modal tails", || modal_tails(&system, s.alpha, &source, &times))?;
    let mut table = Table::new("psi", &["mode", "lambda", "t", "psi"]);
    for (n, tail) in tails.iter().enumerate() {
        for (t, v) in tail.times.iter().zip(&tail.values) {
            table.push(vec![(n + 1).to_string(), num(tail.lambda), num(*t), num(*v)]);
        }
    }
    out.tables.push(table);
    let running = running_decay_bound(&tails, source.l1_norm());
    out.output("modes", tails.len());
    // the uniform check wants ten modes; below that the running maximum is
    // the same quantity without the uniformity claim
    let constant = match decay_bound_check(&tails, &source) {
        Ok(c) => c,
        Err(ForwardError::TooFewTails { .. }) => {
            out.output("decay_bound_uniformity", "not assessed (fewer than 10 modes)");
            running.last().copied().unwrap_or(0.0)
        }
        Err(e) => return Err(e).context("decay bound"),
    };
    out.output("decay_bound_constant", format!("{constant:e}"));
    let mut running_table = Table::new("decay_bound", &["modes", "running_max"]);
    for (n, c) in running.iter().enumerate() {
        running_table.push(vec![(n + 1).to_string(), num(*c)]);
    }
    out.tables.push(running_table);
    for (n, tail) in tails.iter().enumerate() {
        if let Ok(f) = log_log_fit(&tail.times, &tail.values) {
            out.line_fit(&format!("psi_{}.log_log", n + 1), &f);
        }
    }
    if s.observation.is_some() {
        let a = pairings(s, &system)?;
        let mut g = observed(&tails, &a);
        add_noise(&mut g, s.noise_level, s.rng_seed);
        let mut t = Table::new("observed", &["t", "g"]);
        for (time, v) in times.iter().zip(&g) {
            t.push(vec![num(*time), num(*v)]);
        }
        out.tables.push(t);
    }
    let series: Vec<Series> = tails
        .iter()
        .take(8)
        .enumerate()
        .map(|(n, tail)| Series {
            label: format!("mode {}", n + 1),
            points: tail.times.iter().zip(&tail.values).map(|(&t, &v)| (t, v.abs())).collect(),
        })
        .collect();
    out.plots.push(("psi".into(), line_plot("modal tails |ψ_n(t)|", "t", "|ψ_n|", &series, Scale::Log, Scale::Log)));
    Ok(out)
}

fn tail(s: &Scenario) -> Result<Outcome, RunError> {
    let mut out = Outcome::default();
    let cfg = s.tail.as_ref().expect("validated");
    let system = s.eigensystem().context("operator")?;
    let source = s.source_spec().context("source")?;
    let times = s.times();
    let a = pairings(s, &system)?;
    let tails = out.timed("modal tails", || modal_tails(&system, s.alpha, &source, &times))?;
    let mut g = observed(&tails, &a);
    add_noise(&mut g, s.noise_level, s.rng_seed);
    let ladder = exponent_ladder(s.alpha, cfg.ladder_terms).context("ladder")?;
    let mv = moments(&source, cfg.moment_order);
    let model =
        build_tail_model(&a, &system, &ladder, &mv, cfg.ladder_terms, cfg.moment_order).context("tail model")?;
    let mut table = Table::new("tail", &["t", "observed", "model", "gap"]);
    for (t, v) in times.iter().zip(&g) {
        let m = model.eval(*t);
        table.push(vec![num(*t), num(*v), num(m), num(v - m)]);
    }
    out.tables.push(table);
    let mut ladder_table = Table::new("ladder", &["k", "ell", "exponent", "coefficient", "spectral_sum"]);
    for k in 0..ladder.len() {
        ladder_table.push(vec![
            (k + 1).to_string(),
            ladder.ells()[k].to_string(),
            num(ladder.exponent(k)),
            num(ladder.gamma_coefficient(k)),
            num(model.spectral_sums[k]),
        ]);
    }
    out.tables.push(ladder_table);
    out.output("ladder", format!("{:?}", ladder.ells()));
    out.output("remainder_order", model.remainder_order);
    let order = model_error_order(&times, &g, &model).context("model error order")?;
    out.output("gap_points_used", order.points_used);
    out.line_fit("model_gap.log_log", &order.fit);
    if let Some(tol) = s.tolerances.exponent_rel {
        out.checks.push(Check::at_most(
            "gap decay exponent against the remainder order",
            relative(-order.fit.slope, order.remainder_order),
            tol,
        ));
    }
    let gap = Series {
        label: "|g − model|".into(),
        points: times.iter().zip(&g).map(|(&t, &v)| (t, (v - model.eval(t)).abs())).collect(),
    };
    let data = Series { label: "|g|".into(), points: times.iter().zip(&g).map(|(&t, &v)| (t, v.abs())).collect() };
    out.plots.push((
        "tail".into(),
        line_plot("observed tail and model gap", "t", "magnitude", &[data, gap], Scale::Log, Scale::Log),
    ));
    Ok(out)
}

fn sums_table(table: &mut Table, ex: &Extraction, ladder: &fractail_core::ExponentLadder, truth: &[f64]) {
    let method = match ex.mode {
        ExtractionMode::LeastSquares => "least-squares",
        ExtractionMode::Sequential => "sequential",
    };
    for (k, e) in ex.estimates.iter().enumerate() {
        table.push(vec![
            method.to_owned(),
            (k + 1).to_string(),
            ladder.ells()[k].to_string(),
            num(ladder.exponent(k)),
            num(e.value),
            num(e.residual),
            num(e.noise_floor),
            e.at_floor().to_string(),
            num(truth[k]),
        ]);
    }
}

fn extract(s: &Scenario) -> Result<Outcome, RunError> {
    let mut out = Outcome::default();
    let cfg = s.extract.as_ref().expect("validated");
    let system = s.eigensystem().context("operator")?;
    let source = s.source_spec().context("source")?;
    let times = s.times();
    let a = pairings(s, &system)?;
    let tails = out.timed("modal tails", || modal_tails(&system, s.alpha, &source, &times))?;
    let mut g = observed(&tails, &a);
    add_noise(&mut g, s.noise_level, s.rng_seed);
    let data = TailData::new(times.clone(), g, s.noise_level).context("tail data")?;
    let ladder = exponent_ladder(s.alpha, cfg.ladder_terms).context("ladder")?;
    let mv = moments(&source, cfg.moment_order);
    let truth: Vec<f64> = ladder
        .ells()
        .iter()
        .map(|&l| a.iter().zip(system.eigenvalues()).map(|(a, lam)| a * lam.powi(-(l as i32))).sum())
        .collect();
    let modes: &[ExtractionMode] = match cfg.mode {
        ExtractionChoice::LeastSquares => &[ExtractionMode::LeastSquares],
        ExtractionChoice::Sequential => &[ExtractionMode::Sequential],
        ExtractionChoice::Both => &[ExtractionMode::LeastSquares, ExtractionMode::Sequential],
    };
    let mut extractions = Vec::new();
    for &mode in modes {
        let ex = out
            .timed(
                if mode == ExtractionMode::LeastSquares { "least-squares extraction" } else { "sequential extraction" },
                || extract_spectral_sums(&data, &ladder, &mv, cfg.ladder_terms, cfg.moment_order, mode),
            )
            .context("extraction")?;
        extractions.push(ex);
    }
    let mut table = Table::new(
        "sums",
        &["method", "k", "ell", "exponent", "estimate", "residual", "noise_floor", "at_floor", "truth"],
    );
    for ex in &extractions {
        sums_table(&mut table, ex, &ladder, &truth);
        let method = if ex.mode == ExtractionMode::LeastSquares { "least_squares" } else { "sequential" };
        for (k, e) in ex.estimates.iter().enumerate() {
            out.fit(format!("{method}.A_{}", k + 1), e.value, e.residual);
        }
        out.output(&format!("{method}.condition"), format!("{:e}", ex.condition));
        out.output(&format!("{method}.collisions"), ex.collisions.len());
    }
    out.tables.push(table);
    out.output("m1", extractions[0].m1);
    out.output("all_at_floor", extractions.iter().all(|e| e.estimates.iter().all(|x| x.at_floor())));
    if let [x, y] = extractions.as_slice() {
        let agree = extractions_agree(x, y);
        out.output("extractions_agree", agree);
        let tol = 10.0
            * [
                x.estimates[0].residual,
                y.estimates[0].residual,
                x.estimates[0].noise_floor,
                y.estimates[0].noise_floor,
            ]
            .iter()
            .fold(0.0_f64, |m, v| m.max(*v));
        out.checks.push(Check {
            name: "sequential and least-squares A_1 agree".into(),
            value: (x.estimates[0].value - y.estimates[0].value).abs(),
            tolerance: tol,
            passed: agree,
        });
    }
    let primary = &extractions[0];
    if let Some(tol) = s.tolerances.recovery_rel {
        out.checks.push(Check::at_most("A_1 relative error", relative(primary.estimates[0].value, truth[0]), tol));
    }
    if cfg.recover_modes > 0 {
        let rec = recover_modal_amplitudes(&primary.estimates, &ladder, system.eigenvalues(), cfg.recover_modes)
            .context("modal recovery")?;
        let mut t =
            Table::new("amplitudes", &["mode", "lambda", "truth", "estimate", "error", "deflation", "deflation_bound"]);
        for n in 0..cfg.recover_modes {
            t.push(vec![
                (n + 1).to_string(),
                num(system.eigenvalues()[n]),
                num(a[n]),
                num(rec.amplitudes[n]),
                num(rec.errors[n]),
                num(rec.deflation[n]),
                num(rec.deflation_bounds[n]),
            ]);
            out.fit(format!("a_{}", n + 1), rec.amplitudes[n], rec.errors[n]);
        }
        out.output("recovery_condition", format!("{:e}", rec.condition));
        if let Some(tol) = s.tolerances.recovery_rel {
            out.checks.push(Check::at_most("a_1 relative error", relative(rec.amplitudes[0], a[0]), tol));
        }
        let labels: Vec<String> = (1..=cfg.recover_modes).map(|n| format!("a_{n}")).collect();
        out.plots.push((
            "amplitudes".into(),
            bar_chart("modal amplitudes", &labels, &a[..cfg.recover_modes], &rec.amplitudes),
        ));
        out.tables.push(t);
    }
    Ok(out)
}

fn scalar(s: &Scenario) -> Result<Outcome, RunError> {
    let mut out = Outcome::default();
    let cfg = s.scalar.as_ref().expect("validated");
    let source = s.source_spec().context("source")?;
    let times = s.times();
    let mut v = out
        .timed("fractional integral", || fractional_integral_tail(s.alpha, &source, &times))
        .context("fractional integral")?;
    for x in &mut v {
        *x += cfg.constant;
    }
    add_noise(&mut v, s.noise_level, s.rng_seed);
    let data = TailData::new(times.clone(), v.clone(), s.noise_level).context("tail data")?;
    let rec = scalar_moment_recovery(&data, s.alpha, source.t0(), cfg.moment_order).context("scalar recovery")?;
    let truth = moments(&source, cfg.moment_order);
    let mut table = Table::new("scalar", &["coefficient", "estimate", "residual", "noise_floor", "at_floor", "truth"]);
    let row = |name: String, e: &fractail_core::Estimate, t: f64| {
        vec![name, num(e.value), num(e.residual), num(e.noise_floor), e.at_floor().to_string(), num(t)]
    };
    table.push(row("constant".into(), &rec.constant, cfg.constant));
    out.fit("constant", rec.constant.value, rec.constant.residual);
    for (m, e) in rec.moments.iter().enumerate() {
        table.push(row(format!("mu_{m}"), e, truth.moments[m]));
        out.fit(format!("mu_{m}"), e.value, e.residual);
    }
    out.tables.push(table);
    let mut series = Table::new("scalar_data", &["t", "v"]);
    for (t, x) in times.iter().zip(&v) {
        series.push(vec![num(*t), num(*x)]);
    }
    out.tables.push(series);
    out.output("first_active_moment", rec.first_active.map_or("none".to_owned(), |m| m.to_string()));
    out.output("vanishing", rec.vanishing);
    out.output("condition", format!("{:e}", rec.condition));
    if let Some(tol) = s.tolerances.recovery_rel {
        if cfg.constant != 0.0 {
            out.checks.push(Check::at_most("constant relative error", relative(rec.constant.value, cfg.constant), tol));
        }
        if let Some(first) = rec.first_active {
            for m in first..(first + 2).min(rec.moments.len()) {
                out.checks.push(Check::at_most(
                    format!("mu_{m} relative error"),
                    relative(rec.moments[m].value, truth.moments[m]),
                    tol,
                ));
            }
        }
    }
    let labels: Vec<String> = (0..rec.moments.len()).map(|m| format!("mu_{m}")).collect();
    let est: Vec<f64> = rec.moments.iter().map(|e| e.value).collect();
    out.plots.push(("moments".into(), bar_chart("source moments", &labels, &truth.moments[..rec.moments.len()], &est)));
    Ok(out)
}

fn uniqueness(s: &Scenario) -> Result<Outcome, RunError> {
    let mut out = Outcome::default();
    let cfg = s.uniqueness.as_ref().expect("validated");
    let system = s.eigensystem().context("operator")?;
    let source = s.source_spec().context("source")?;
    let obs = match s.observation_spec(&system).context("observation")? {
        Some(o) => o,
        None => {
            return Err(ConfigError::Invalid {
                field: "observation.kind",
                message: "uniqueness needs an interior or flux observation".into(),
            }
            .into())
        }
    };
    let f1 = SpatialProfile::new(cfg.f1.clone(), f64::INFINITY);
    let f2 = SpatialProfile::new(cfg.f2.clone(), f64::INFINITY);
    let setup = TailExperiment {
        alpha: s.alpha,
        times: s.times(),
        ladder_terms: cfg.ladder_terms,
        moment_order: cfg.moment_order,
        recover_modes: cfg.recover_modes,
    };
    let report = out
        .timed("uniqueness", || uniqueness_experiment(&f1, &f2, &source, &system, &obs, &setup))
        .context("uniqueness")?;
    let mut table = Table::new("gap", &["t", "gap"]);
    for (t, g) in setup.times.iter().zip(&report.gap) {
        table.push(vec![num(*t), num(*g)]);
    }
    out.tables.push(table);
    out.output("gap_at_floor", report.at_floor);
    out.output("pairings", format!("{:?}", report.pairings));
    if let Some(fit) = &report.fit {
        out.fit("gap_decay_exponent", -fit.slope, fit.slope_std_error);
        out.fit("gap.r_squared", fit.r_squared, fit.rms_residual);
    }
    if let Some(q) = report.expected_exponent {
        out.output("expected_exponent", q);
        if let (Some(tol), Some(fit)) = (s.tolerances.exponent_rel, &report.fit) {
            out.checks.push(Check::at_most(
                "gap exponent against the leading tail exponent",
                relative(-fit.slope, q),
                tol,
            ));
        }
    }
    for (n, (v, e)) in report.recovered.iter().zip(&report.recovery_errors).enumerate() {
        out.fit(format!("a_{}", n + 1), *v, *e);
    }
    let series = Series {
        label: "|g1 − g2|".into(),
        points: setup.times.iter().zip(&report.gap).map(|(&t, &g)| (t, g.abs())).collect(),
    };
    out.plots.push(("gap".into(), line_plot("observation gap", "t", "|gap|", &[series], Scale::Log, Scale::Log)));
    Ok(out)
}

fn contrast(s: &Scenario) -> Result<Outcome, RunError> {
    let mut out = Outcome::default();
    let cfg = s.contrast.as_ref().expect("validated");
    let system = s.eigensystem().context("operator")?;
    let source = s.source_spec().context("source")?;
    let times = s.times();
    let report = out
        .timed("contrast", || heat_contrast_experiment(&system, &source, cfg.modes, &times, s.alpha))
        .context("contrast")?;
    let mut table = Table::new("contrast", &["source", "mode", "t", "heat", "fractional"]);
    let mut modes_table = Table::new("exponential_moments", &["source", "mode", "lambda", "moment", "scale"]);
    let mut push = |label: &str, r: &fractail_core::ContrastReport, table: &mut Table| {
        for (n, m) in r.modes.iter().enumerate() {
            for ((t, h), f) in times.iter().zip(&m.heat_tail).zip(&m.fractional_tail) {
                table.push(vec![label.to_owned(), (n + 1).to_string(), num(*t), num(*h), num(*f)]);
            }
            modes_table.push(vec![
                label.to_owned(),
                (n + 1).to_string(),
                num(m.lambda),
                num(m.exponential_moment),
                num(m.exponential_moment_scale),
            ]);
        }
    };
    push("scenario", &report, &mut table);
    for (n, m) in report.modes.iter().enumerate() {
        if let Some(f) = &m.heat_fit {
            out.line_fit(&format!("heat_{}.log_linear", n + 1), f);
        }
        if let Some(f) = &m.fractional_fit {
            out.line_fit(&format!("fractional_{}.log_log", n + 1), f);
        }
    }
    let first = &report.modes[0];
    if let (Some(tol), Some(f)) = (s.tolerances.exponent_rel, &first.heat_fit) {
        out.checks.push(Check::at_most("mode-1 heat slope against −λ_1", relative(-f.slope, first.lambda), tol));
    }
    let mut series = vec![Series {
        label: "heat, mode 1".into(),
        points: times.iter().zip(&first.heat_tail).map(|(&t, &v)| (t, v.abs())).collect(),
    }];
    series.push(Series {
        label: format!("α={}, mode 1", s.alpha),
        points: times.iter().zip(&first.fractional_tail).map(|(&t, &v)| (t, v.abs())).collect(),
    });
    if let Some(split) = cfg.engineered_split {
        let engineered = vanishing_exponential_moment_source(first.lambda, source.t0(), split, source.profile.clone())
            .context("engineered source")?;
        let er = heat_contrast_experiment(&system, &engineered, 1, &times, s.alpha).context("engineered contrast")?;
        push("engineered", &er, &mut table);
        let drop = first.heat_tail[0].abs() / er.modes[0].heat_tail[0].abs().max(f64::MIN_POSITIVE);
        out.output("engineered_heat_drop_at_t_min", format!("{drop:e}"));
        out.output("engineered_exponential_moment", format!("{:e}", er.modes[0].exponential_moment));
        series.push(Series {
            label: "heat, engineered".into(),
            points: times.iter().zip(&er.modes[0].heat_tail).map(|(&t, &v)| (t, v.abs())).collect(),
        });
    }
    out.tables.push(table);
    out.tables.push(modes_table);
    out.plots.push((
        "contrast".into(),
        line_plot("heat against fractional tails", "t", "|ψ_1|", &series, Scale::Log, Scale::Log),
    ));
    Ok(out)
}

//! Verification suites. Each criterion recomputes its reference values
//! independently and reports one pass/fail verdict, including its runtime
//! budget.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::{Duration, Instant};

use fractail_core::asymptotics::{
    build_tail_model, exponent_ladder, kernel_moment_expansion, model_error_order, moments,
};
use fractail_core::forward::{caputo_residual_check, duhamel_coefficient, psi_tail, running_decay_bound, SourceSpec};
use fractail_core::inverse::{
    extract_spectral_sums, heat_contrast_experiment, recover_modal_amplitudes, scalar_moment_recovery,
    uniqueness_experiment, vanishing_exponential_moment_source, Estimate, ExtractionMode, InverseError, TailData,
    TailExperiment,
};
use fractail_core::mittag_leffler::{ml_eval, MlParams};
use fractail_core::quadrature::GaussLegendre;
use fractail_core::special::gamma;
use fractail_core::spectral::{laplacian_1d_dirichlet, ObservationSpec, SpatialProfile};
use fractail_oracle::MlOracle;

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {} {:<28} {}  ({:.1} s of {} s) {}",
            self.id,
            self.title,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

struct Criterion {
    id: u8,
    title: &'static str,
    budget_secs: u64,
    check: fn() -> Result<String, String>,
}

const CRITERIA: [Criterion; 9] = [
    Criterion { id: 1, title: "Mittag-Leffler accuracy", budget_secs: 30, check: mittag_leffler_accuracy },
    Criterion { id: 2, title: "closed-form Duhamel", budget_secs: 60, check: closed_form_duhamel },
    Criterion { id: 3, title: "uniform modal decay bound", budget_secs: 120, check: uniform_decay_bound },
    Criterion { id: 4, title: "expansion orders", budget_secs: 120, check: expansion_orders },
    Criterion { id: 5, title: "inverse round trip", budget_secs: 180, check: inverse_round_trip },
    Criterion { id: 6, title: "scalar moment recovery", budget_secs: 60, check: scalar_recovery },
    Criterion { id: 7, title: "time-stepping residual", budget_secs: 120, check: residual_order },
    Criterion { id: 8, title: "heat contrast", budget_secs: 60, check: heat_contrast },
    Criterion { id: 9, title: "uniqueness experiment", budget_secs: 120, check: uniqueness },
];

/// Suite names accepted by `fractail verify`.
pub const SUITES: [&str; 7] = ["mlf", "forward", "asymptotic", "inverse", "scalar", "contrast", "all"];

/// Criterion ids belonging to a suite.
pub fn suite(name: &str) -> Option<&'static [u8]> {
    Some(match name {
        "mlf" => &[1],
        "forward" => &[2, 3, 7],
        "asymptotic" => &[4],
        "inverse" => &[5, 9],
        "scalar" => &[6],
        "contrast" => &[8],
        "all" => &[1, 2, 3, 4, 5, 6, 7, 8, 9],
        _ => return None,
    })
}

pub fn run_criterion(id: u8) -> Option<CriterionOutcome> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let budget = Duration::from_secs(c.budget_secs);
    let start = Instant::now();
    let result = (c.check)();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if elapsed > budget {
        passed = false;
        detail.push_str("; over the runtime budget");
    }
    Some(CriterionOutcome { id, title: c.title, passed, detail, elapsed, budget })
}

pub fn run_suite(name: &str) -> Option<Vec<CriterionOutcome>> {
    Some(suite(name)?.iter().filter_map(|&id| run_criterion(id)).collect())
}

fn geometric(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    let n = ((b / a).log10() * per_decade as f64).round().max(1.0) as usize;
    (0..=n).map(|i| a * (b / a).powf(i as f64 / n as f64)).collect()
}

fn relative(x: f64, truth: f64) -> f64 {
    ((x - truth) / truth).abs()
}

fn unit_source() -> SourceSpec {
    SourceSpec::constant(1.0, 1.0, SpatialProfile::zero(1)).expect("valid source")
}

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn mittag_leffler_accuracy() -> Result<String, String> {
    let mut worst = 0.0_f64;
    for &a in &[0.3, 0.5, 0.7, FRAC_1_SQRT_2, 1.5, 1.9] {
        for b in [a, a + 1.0, 1.0] {
            let params = MlParams::new(a, b).map_err(|e| e.to_string())?;
            let mut oracle = MlOracle::new(a, b).map_err(|e| e.to_string())?;
            for i in 0..200 {
                let x = -(10f64.powf(-4.0 + 8.0 * i as f64 / 199.0));
                let exact = oracle.eval(x).map_err(|e| e.to_string())?.value;
                let rel = relative(ml_eval(params, x), exact);
                if !(rel <= 1e-10) {
                    return Err(format!("α={a} β={b} x={x:e}: relative error {rel:e}"));
                }
                worst = worst.max(rel);
            }
        }
    }
    let p = |a, b| MlParams::new(a, b).expect("valid parameters");
    let mut identity = 0.0_f64;
    for i in 1..=200 {
        let x = -20.0 * i as f64 / 200.0;
        identity = identity.max(relative(ml_eval(p(1.0, 1.0), x), x.exp()));
        identity = identity.max(relative(ml_eval(p(1.0, 2.0), x), x.exp_m1() / x));
        let z = 10.0 * i as f64 / 200.0;
        // cos has zeros on the range, so the error is absolute
        identity = identity.max((ml_eval(p(2.0, 1.0), -z * z) - z.cos()).abs());
    }
    ensure(identity <= 1e-10, || format!("closed-form identity error {identity:e}"))?;
    Ok(format!("worst oracle error {worst:.2e}, identities {identity:.2e}"))
}

fn closed_form_duhamel() -> Result<String, String> {
    let src = unit_source();
    let (mut closed, mut routes) = (0.0_f64, 0.0_f64);
    for &alpha in &[0.5, 0.7, 1.5] {
        let mut e1 = MlOracle::new(alpha, 1.0).map_err(|e| e.to_string())?;
        for &lambda in &[1.0, 10.0, 100.0] {
            for t in geometric(1e-4, 1.0, 6) {
                let exact = (1.0 - e1.eval(-lambda * t.powf(alpha)).map_err(|e| e.to_string())?.value) / lambda;
                let got = duhamel_coefficient(lambda, alpha, &src, t).map_err(|e| e.to_string())?;
                closed = closed.max(relative(got, exact));
            }
            let times = geometric(1.001, 100.0, 8);
            let tail = psi_tail(lambda, alpha, &src, &times).map_err(|e| e.to_string())?;
            for (&t, &v) in times.iter().zip(&tail.values) {
                let d = duhamel_coefficient(lambda, alpha, &src, t).map_err(|e| e.to_string())?;
                routes = routes.max(relative(d, v));
            }
        }
    }
    ensure(closed <= 1e-8, || format!("closed-form error {closed:e}"))?;
    ensure(routes <= 1e-10, || format!("route disagreement {routes:e}"))?;
    Ok(format!("closed form {closed:.2e}, routes {routes:.2e}"))
}

fn uniform_decay_bound() -> Result<String, String> {
    let src = unit_source();
    let times = geometric(2.0, 100.0, 16);
    let tails = (1..=50)
        .map(|n| psi_tail((n as f64 * PI).powi(2), 0.5, &src, &times))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let running = running_decay_bound(&tails, src.l1_norm());
    let (c25, c50) = (running[24], running[49]);
    ensure(c50.is_finite() && c50 > 0.0, || format!("bound {c50}"))?;
    let growth = c50 / c25 - 1.0;
    ensure(growth < 0.01, || format!("running max grows by {:.3}% from 25 to 50 modes", 100.0 * growth))?;
    Ok(format!("constant {c50:.6}, growth {:.2e}", growth))
}

fn expansion_orders() -> Result<String, String> {
    // ∫_0^1 (t−s)^{−σ} ds without cancellation
    let exact = |sigma: f64, t: f64| {
        let l = (-1.0 / t).ln_1p();
        t.powf(1.0 - sigma) * ((1.0 - sigma) * l).exp_m1() / (sigma - 1.0)
    };
    let src = unit_source();
    let mut tightest = 0.0_f64;
    for &alpha in &[0.5, FRAC_1_SQRT_2, 1.5] {
        for sigma in [alpha + 1.0, 2.0 * alpha + 1.0] {
            for m in [0usize, 2, 4] {
                for t in geometric(4.0, 1e4, 16) {
                    let x = exact(sigma, t);
                    let k = kernel_moment_expansion(sigma, &src, m, t).map_err(|e| e.to_string())?;
                    let err = (k.value - x).abs();
                    let rounding = 8.0 * f64::EPSILON * x.abs();
                    ensure(err <= k.remainder_bound + rounding, || {
                        format!("σ={sigma} M={m} t={t}: error {err:e} above bound {:e}", k.remainder_bound)
                    })?;
                    if err > rounding {
                        tightest = tightest.max(err / k.remainder_bound);
                    }
                }
            }
        }
    }
    let system = laplacian_1d_dirichlet(PI, 1).map_err(|e| e.to_string())?;
    let times = geometric(1e2, 1e6, 16);
    let mut worst = 0.0_f64;
    for &alpha in &[0.5, FRAC_1_SQRT_2] {
        let tail = psi_tail(1.0, alpha, &src, &times).map_err(|e| e.to_string())?;
        for k in [1usize, 2] {
            let ladder = exponent_ladder(alpha, k).map_err(|e| e.to_string())?;
            let m = 4;
            let model =
                build_tail_model(&[1.0], &system, &ladder, &moments(&src, m), k, m).map_err(|e| e.to_string())?;
            let fit = model_error_order(&times, &tail.values, &model).map_err(|e| e.to_string())?;
            let dev = relative(-fit.fit.slope, fit.remainder_order);
            ensure(dev <= 0.05, || {
                format!("α={alpha} K={k}: slope {:.4} against order {:.4}", fit.fit.slope, fit.remainder_order)
            })?;
            worst = worst.max(dev);
        }
    }
    Ok(format!("remainder bounds hold (tightest ratio {tightest:.2}), slope deviation {:.2}%", 100.0 * worst))
}

fn inverse_round_trip() -> Result<String, String> {
    let alpha = FRAC_1_SQRT_2;
    let amplitudes = [1.0, 0.5, 0.25];
    let lambdas: Vec<f64> = (1..=3).map(|n| (n * n) as f64 * PI * PI).collect();
    let src = unit_source();
    let times = geometric(1e2, 1e7, 16);
    let tails = lambdas
        .iter()
        .map(|&l| psi_tail(l, alpha, &src, &times))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let data = TailData::from_modes(&tails, &amplitudes, 0.0).map_err(|e| e.to_string())?;
    let (k, m) = (6, 6);
    let ladder = exponent_ladder(alpha, k).map_err(|e| e.to_string())?;
    let mv = moments(&src, m);
    let ex =
        extract_spectral_sums(&data, &ladder, &mv, k, m, ExtractionMode::LeastSquares).map_err(|e| e.to_string())?;
    let direct: f64 = amplitudes.iter().zip(&lambdas).map(|(a, l)| a * l.powi(-2)).sum();
    let e_sum = relative(ex.estimates[0].value, direct);
    ensure(e_sum < 1e-4, || format!("A_1 error {e_sum:e}"))?;
    let rec = recover_modal_amplitudes(&ex.estimates, &ladder, &lambdas, 3).map_err(|e| e.to_string())?;
    let e1 = relative(rec.amplitudes[0], amplitudes[0]);
    let e2 = relative(rec.amplitudes[1], amplitudes[1]);
    ensure(e1 < 1e-3, || format!("a_1 error {e1:e}"))?;
    ensure(e2 < 1e-2, || format!("a_2 error {e2:e}"))?;

    // super-polynomially decaying data
    let scale = 3.0;
    let values = times.iter().map(|t| scale * (-50.0 * t / times[0]).exp()).collect();
    let vanishing = TailData::new(times.clone(), values, 1e-15 * scale).map_err(|e| e.to_string())?;
    for mode in [ExtractionMode::LeastSquares, ExtractionMode::Sequential] {
        let ex = extract_spectral_sums(&vanishing, &ladder, &mv, k, m, mode).map_err(|e| e.to_string())?;
        ensure(ex.estimates.iter().all(Estimate::at_floor), || format!("{mode:?}: degenerate data above the floor"))?;
    }
    Ok(format!("A_1 {e_sum:.1e}, a_1 {e1:.1e}, a_2 {e2:.1e}, degenerate data at floor"))
}

/// `J^α μ(t)` for `t > t₀` by Gauss–Legendre on the support.
fn fractional_integral(alpha: f64, t0: f64, mu: impl Fn(f64) -> f64, t: f64) -> f64 {
    let gl = GaussLegendre::new(40);
    gl.integrate(0.0, t0, |s| (t - s).powf(alpha - 1.0) * mu(s)) / gamma(alpha).expect("not a pole")
}

fn scalar_recovery() -> Result<String, String> {
    let alpha = 0.5;
    let times = geometric(1e2, 1e6, 16);
    let values: Vec<f64> = times.iter().map(|&t| fractional_integral(alpha, 1.0, |s| 1.0 + s, t)).collect();
    let data = TailData::new(times.clone(), values, 0.0).map_err(|e| e.to_string())?;
    let rec = scalar_moment_recovery(&data, alpha, 1.0, 4).map_err(|e| e.to_string())?;
    let e0 = relative(rec.moments[0].value, 1.5);
    let e1 = relative(rec.moments[1].value, -5.0 / 6.0);
    ensure(e0 < 1e-2 && e1 < 1e-2, || format!("moment errors {e0:e}, {e1:e}"))?;

    let offset = TailData::new(times.clone(), vec![0.7; times.len()], 0.0).map_err(|e| e.to_string())?;
    let rec = scalar_moment_recovery(&offset, alpha, 1.0, 4).map_err(|e| e.to_string())?;
    let ea = (rec.constant.value - 0.7).abs() / 0.7;
    ensure(ea < 1e-6, || format!("constant error {ea:e}"))?;
    ensure(rec.moments.iter().all(Estimate::at_floor), || "moments of a constant offset above the floor".into())?;
    Ok(format!("μ_0 {e0:.1e}, μ_1 {e1:.1e}, offset {ea:.1e}"))
}

fn residual_order() -> Result<String, String> {
    let src = SourceSpec::constant(1.0, 1.0, SpatialProfile::single_mode(0, 1)).map_err(|e| e.to_string())?;
    let lambda = PI * PI;
    let coarse = caputo_residual_check(lambda, 0.5, &src, 1.0 / 512.0, 2.0).map_err(|e| e.to_string())?;
    let fine = caputo_residual_check(lambda, 0.5, &src, 1.0 / 2048.0, 2.0).map_err(|e| e.to_string())?;
    let order = (coarse.max_residual / fine.max_residual).log2() / 2.0;
    ensure(order >= 0.8, || format!("order {order:.3}"))?;
    Ok(format!("residuals {:.2e} → {:.2e}, order {order:.3}", coarse.max_residual, fine.max_residual))
}

fn heat_contrast() -> Result<String, String> {
    let system = laplacian_1d_dirichlet(1.0, 3).map_err(|e| e.to_string())?;
    let times = geometric(10.0, 1e4, 16);
    let src = unit_source();
    let report = heat_contrast_experiment(&system, &src, 1, &times, 0.5).map_err(|e| e.to_string())?;
    let mode = &report.modes[0];
    let heat = mode.heat_fit.as_ref().ok_or("no heat fit")?;
    let slope = relative(-heat.slope, PI * PI);
    ensure(heat.r_squared > 0.999 && slope < 0.01, || format!("heat R² {} slope error {slope:e}", heat.r_squared))?;
    let frac = mode.fractional_fit.as_ref().ok_or("no power-law fit")?;
    ensure(frac.r_squared > 0.999, || format!("fractional R² {}", frac.r_squared))?;
    let engineered = vanishing_exponential_moment_source(mode.lambda, 1.0, 0.5, SpatialProfile::zero(1))
        .map_err(|e| e.to_string())?;
    let er = heat_contrast_experiment(&system, &engineered, 1, &times, 0.5).map_err(|e| e.to_string())?;
    let drop = mode.heat_tail[0].abs() / er.modes[0].heat_tail[0].abs().max(f64::MIN_POSITIVE);
    ensure(drop >= 1e6, || format!("engineered drop {drop:e}"))?;
    Ok(format!(
        "heat R² {:.6}, slope error {slope:.1e}, power-law R² {:.6}, engineered drop {drop:.1e}",
        heat.r_squared, frac.r_squared
    ))
}

fn uniqueness() -> Result<String, String> {
    let alpha = FRAC_1_SQRT_2;
    let system = laplacian_1d_dirichlet(1.0, 8).map_err(|e| e.to_string())?;
    let src = unit_source();
    let setup =
        TailExperiment { alpha, times: geometric(1e2, 1e6, 16), ladder_terms: 4, moment_order: 4, recover_modes: 1 };
    let obs = ObservationSpec::against_mode(&system, 0, 0.2, 0.7).map_err(|e| e.to_string())?;
    let f1 = SpatialProfile::single_mode(0, 8);
    let report =
        uniqueness_experiment(&f1, &SpatialProfile::zero(8), &src, &system, &obs, &setup).map_err(|e| e.to_string())?;
    let q = report.decay_exponent().ok_or("no gap exponent")?;
    let dev = relative(q, alpha + 1.0);
    ensure(dev < 0.05, || format!("gap exponent {q}"))?;

    let f = SpatialProfile::new(vec![1.0, 0.3, -0.2], 1.0);
    let same = uniqueness_experiment(&f, &f, &src, &system, &obs, &setup).map_err(|e| e.to_string())?;
    ensure(same.at_floor, || "identical sources leave a gap".into())?;

    let orthogonal = ObservationSpec::against_mode(&system, 0, 0.0, 1.0).map_err(|e| e.to_string())?;
    let blind = uniqueness_experiment(
        &SpatialProfile::single_mode(1, 8),
        &SpatialProfile::zero(8),
        &src,
        &system,
        &orthogonal,
        &setup,
    );
    ensure(matches!(blind, Err(InverseError::IndistinguishableAtScale)), || format!("orthogonal test gave {blind:?}"))?;
    Ok(format!("gap exponent {q:.4} (deviation {:.2}%), identical at floor, orthogonal blind", 100.0 * dev))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_cover_every_criterion() {
        let mut ids: Vec<u8> = SUITES[..6].iter().flat_map(|s| suite(s).unwrap().iter().copied()).collect();
        ids.sort_unstable();
        assert_eq!(ids, suite("all").unwrap());
        assert!(suite("nope").is_none());
        assert!(run_criterion(10).is_none());
    }
}

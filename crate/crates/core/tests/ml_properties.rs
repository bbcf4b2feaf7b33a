use fractail_core::mittag_leffler::{
    ml_asymptotic, ml_eval, ml_series, ml_uniform_bound_check, AsymptoticTermSeries, MlParams,
};
use fractail_core::special::rgamma;
use fractail_oracle::MlOracle;
use proptest::prelude::*;

fn p(a: f64, b: f64) -> MlParams {
    MlParams::new(a, b).unwrap()
}

#[test]
fn exponential_identity() {
    for i in 0..=200 {
        let x = -20.0 * i as f64 / 200.0;
        let got = ml_eval(p(1.0, 1.0), x);
        assert!(((got - x.exp()) / x.exp()).abs() < 1e-10, "x={x}");
    }
}

#[test]
fn cosine_identity() {
    // absolute error: cos has zeros on the range
    for i in 0..=200 {
        let z = 10.0 * i as f64 / 200.0;
        let got = ml_eval(p(2.0, 1.0), -z * z);
        assert!((got - z.cos()).abs() < 1e-10, "z={z} got={got}");
    }
}

#[test]
fn shifted_exponential_identity() {
    for i in 1..=200 {
        let x = -20.0 * i as f64 / 200.0;
        let exact = x.exp_m1() / x;
        let got = ml_eval(p(1.0, 2.0), x);
        assert!(((got - exact) / exact).abs() < 1e-10, "x={x}");
    }
}

#[test]
fn erfc_closed_form_at_half_order() {
    // E_{1/2,1}(−x) = e^{x²} erfc(x); checked through the oracle at a few points
    let mut oracle = MlOracle::new(0.5, 1.0).unwrap();
    for &x in &[0.1, 1.0, 5.0, 30.0, 300.0] {
        let exact = oracle.eval(-x).unwrap().value;
        let got = ml_eval(p(0.5, 1.0), -x);
        assert!(((got - exact) / exact).abs() < 1e-12);
    }
}

#[test]
fn series_and_asymptotic_agree_in_the_overlap() {
    // the band where both routes still hold in double precision
    for &(a, b) in &[(0.5, 0.5), (0.7, 1.0), (1.5, 1.5), (0.3, 1.3)] {
        let params = p(a, b);
        let eta = 12f64.powf(a);
        let series = ml_series(params, -eta, 1e-17).unwrap();
        let full = ml_eval(params, -eta);
        assert!(((series - full) / full).abs() < 1e-8, "a={a} b={b} series={series:e} full={full:e}");
    }
    for &(a, b) in &[(0.5, 0.5), (0.7, 0.7), (1.5, 1.0)] {
        let params = p(a, b);
        let n = 12;
        let s = AsymptoticTermSeries::new(params, n).unwrap();
        let eta = s.validity_threshold.max(1e3);
        let (v, bound) = ml_asymptotic(params, eta, n).unwrap();
        let full = ml_eval(params, -eta);
        assert!(
            (v - full).abs() <= bound + 1e-14 * full.abs(),
            "a={a} b={b} v={v:e} full={full:e} bound={bound:e} eta={eta}"
        );
        assert!(((v - full) / full).abs() < 1e-8, "a={a} b={b} v={v:e} full={full:e} bound={bound:e} eta={eta}");
    }
}

#[test]
fn asymptotic_example_half_order() {
    let (v, bound) = ml_asymptotic(p(0.5, 0.5), 1e6, 3).unwrap();
    let exact = MlOracle::new(0.5, 0.5).unwrap().eval(-1e6).unwrap().value;
    assert!(((v - exact) / exact).abs() < 1e-6);
    assert!((v - exact).abs() <= bound);
}

#[test]
fn remainder_bound_holds_above_threshold() {
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    for &a in &[0.3, 0.5, s2, 1.5, 1.9] {
        for &b in &[a, 1.0] {
            let mut oracle = MlOracle::new(a, b).unwrap();
            for n in 1..=5 {
                let series = AsymptoticTermSeries::new(p(a, b), n).unwrap();
                let eta0 = series.validity_threshold;
                if !eta0.is_finite() || eta0 > 1e12 {
                    continue;
                }
                for j in 0..6 {
                    let eta = eta0 * 10f64.powi(j);
                    let exact = oracle.eval(-eta).unwrap().value;
                    let err = (series.eval(eta) - exact).abs();
                    // rounding of the retained sum is not part of the bound
                    let slack = 1e-14 * exact.abs().max(series.eval(eta).abs());
                    assert!(
                        err <= series.remainder_bound(eta) + slack,
                        "a={a} b={b} n={n} eta={eta} err={err:e} bound={:e}",
                        series.remainder_bound(eta)
                    );
                }
            }
        }
    }
}

#[test]
fn remainder_slope_matches_term_count() {
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    for &(a, n) in &[(0.5, 2), (s2, 2), (s2, 3), (0.3, 2)] {
        let params = p(a, a);
        let series = AsymptoticTermSeries::new(params, n).unwrap();
        let mut oracle = MlOracle::new(a, a).unwrap();
        let order = series.remainder_order;
        let eta0 = series.validity_threshold.max(10.0);
        let pts: Vec<(f64, f64)> = (0..=16)
            .map(|j| {
                let eta = eta0 * 10f64.powf(j as f64 / 8.0);
                let exact = oracle.eval(-eta).unwrap().value;
                (eta.ln(), (exact - series.eval(eta)).abs().ln())
            })
            .collect();
        let slope = fit_slope(&pts);
        assert!((slope + order).abs() <= 0.05 * order, "a={a} n={n} slope={slope} order={order}");
    }
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn uniform_bound_is_finite_and_stabilises() {
    for &a in &[0.5, 0.7, 1.5, 1.9] {
        let short: Vec<f64> = (0..=4).map(|j| 10f64.powi(j)).collect();
        let long: Vec<f64> = (0..=8).map(|j| 10f64.powi(j)).collect();
        let c1 = ml_uniform_bound_check(a, &short).unwrap();
        let c2 = ml_uniform_bound_check(a, &long).unwrap();
        assert!(c1.is_finite() && c2.is_finite() && c2 > 0.0);
        assert!(c2 <= 1.05 * c1, "a={a} {c1} {c2}");
    }
    let c = ml_uniform_bound_check(1.9, &[1.0]).unwrap();
    let exact = MlOracle::new(1.9, 1.9).unwrap().eval(-1.0).unwrap().value.abs() * 2.0;
    assert!((c - exact).abs() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn value_at_origin(alpha in 0.05f64..2.0, beta in 0.05f64..5.0) {
        let v = ml_eval(p(alpha, beta), 0.0);
        prop_assert!((v / rgamma(beta) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn completely_monotone_below_one(alpha in 0.1f64..=1.0, e1 in -4.0f64..4.0, de in 0.01f64..1.0) {
        let params = p(alpha, alpha);
        let x1 = 10f64.powf(e1);
        let x2 = 10f64.powf(e1 + de);
        let v1 = ml_eval(params, -x1);
        let v2 = ml_eval(params, -x2);
        prop_assert!(v1 > 0.0 && v2 > 0.0);
        prop_assert!(v2 < v1);
    }

    #[test]
    fn agrees_with_oracle_below_order_one(alpha in 0.2f64..=1.0, dbeta in 0.0f64..2.0, e in -3.0f64..4.0) {
        // completely monotone here, so the relative error is meaningful everywhere
        let beta = alpha + dbeta;
        let x = -(10f64.powf(e));
        let exact = MlOracle::new(alpha, beta).unwrap().eval(x).unwrap().value;
        let got = ml_eval(p(alpha, beta), x);
        prop_assert!(((got - exact) / exact).abs() <= 1e-10, "got={} exact={}", got, exact);
    }

    #[test]
    fn agrees_with_oracle_above_order_one(alpha in 1.05f64..1.95, beta in 0.2f64..3.0, e in -3.0f64..4.0) {
        // oscillating: measured against the size of the function near the origin
        let x = -(10f64.powf(e));
        let exact = MlOracle::new(alpha, beta).unwrap().eval(x).unwrap().value;
        let got = ml_eval(p(alpha, beta), x);
        prop_assert!((got - exact).abs() <= 1e-10 * exact.abs().max(1e-4), "got={} exact={}", got, exact);
    }
}

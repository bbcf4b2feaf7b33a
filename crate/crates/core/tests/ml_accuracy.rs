// NaN must count as a failure
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use fractail_core::mittag_leffler::{ml_eval, MlParams};
use fractail_oracle::MlOracle;

fn worst(alpha: f64, beta: f64) -> (f64, f64) {
    let params = MlParams::new(alpha, beta).unwrap();
    let mut oracle = MlOracle::new(alpha, beta).unwrap();
    let mut worst = (0.0, 0.0);
    for i in 0..200 {
        let x = -(10f64.powf(-4.0 + 8.0 * i as f64 / 199.0));
        let exact = oracle.eval(x).unwrap().value;
        let got = ml_eval(params, x);
        let rel = ((got - exact) / exact).abs();
        if !(rel <= worst.0) {
            worst = (rel, x);
        }
    }
    worst
}

#[test]
fn matches_oracle_on_geometric_grid() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut failures = Vec::new();
    for &a in &[0.3, 0.5, 0.7, s, 1.5, 1.9] {
        for &b in &[a, a + 1.0, 1.0] {
            let (rel, x) = worst(a, b);
            println!("alpha={a:.4} beta={b:.4} worst rel={rel:.2e} at x={x:.4e}");
            if !(rel <= 1e-10) {
                failures.push((a, b, rel, x));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:?}");
}

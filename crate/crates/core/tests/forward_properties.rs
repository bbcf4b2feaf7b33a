use std::time::Instant;

use fractail_core::forward::{
    caputo_residual_check, decay_bound_check, duhamel_coefficient, fractional_integral_tail, psi_tail,
    running_decay_bound, Segment, SourceSpec,
};
use fractail_core::special::gamma;
use fractail_core::spectral::SpatialProfile;
use fractail_oracle::MlOracle;
use proptest::prelude::*;

fn unit_source() -> SourceSpec {
    SourceSpec::constant(1.0, 1.0, SpatialProfile::single_mode(0, 1)).unwrap()
}

fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn closed_form_against_oracle() {
    let src = unit_source();
    let start = Instant::now();
    for &alpha in &[0.5, 0.7, 1.5] {
        let mut e1 = MlOracle::new(alpha, 1.0).unwrap();
        for &lambda in &[1.0, 10.0, 100.0] {
            for t in geometric(1e-4, 1.0, 25) {
                let exact = (1.0 - e1.eval(-lambda * t.powf(alpha)).unwrap().value) / lambda;
                let got = duhamel_coefficient(lambda, alpha, &src, t).unwrap();
                assert!(((got - exact) / exact).abs() < 1e-8, "alpha={alpha} lambda={lambda} t={t}");
            }
        }
    }
    println!("closed form: {:?}", start.elapsed());
}

#[test]
fn tail_closed_form_against_oracle() {
    // ψ(t) = t^α E_{α,α+1}(−λt^α) − (t−1)^α E_{α,α+1}(−λ(t−1)^α)
    let src = unit_source();
    for &alpha in &[0.5, 0.7, 1.5] {
        let mut e = MlOracle::new(alpha, alpha + 1.0).unwrap();
        for &lambda in &[1.0, 10.0, 100.0] {
            let times = geometric(1.01, 100.0, 12);
            let tail = psi_tail(lambda, alpha, &src, &times).unwrap();
            for (t, v) in times.iter().zip(&tail.values) {
                let a = t.powf(alpha) * e.eval(-lambda * t.powf(alpha)).unwrap().value;
                let b = (t - 1.0).powf(alpha) * e.eval(-lambda * (t - 1.0).powf(alpha)).unwrap().value;
                let exact = a - b;
                // the difference cancels; compare against the size of its parts
                assert!((v - exact).abs() < 1e-10 * a.abs().max(exact.abs()), "alpha={alpha} lambda={lambda} t={t}");
            }
        }
    }
}

#[test]
fn tail_and_duhamel_routes_agree() {
    let src = SourceSpec::polynomial(vec![1.0, -0.5, 2.0], 1.0, SpatialProfile::zero(1)).unwrap();
    for &alpha in &[0.5, 0.7, 1.5] {
        for &lambda in &[1.0, 10.0, 100.0] {
            let times = geometric(1.001, 100.0, 15);
            let tail = psi_tail(lambda, alpha, &src, &times).unwrap();
            for (t, v) in times.iter().zip(&tail.values) {
                let d = duhamel_coefficient(lambda, alpha, &src, *t).unwrap();
                assert!(((d - v) / v).abs() < 1e-10, "alpha={alpha} lambda={lambda} t={t} d={d} v={v}");
            }
        }
    }
}

#[test]
fn decay_bound_is_uniform_in_the_mode() {
    let src = unit_source();
    let times = geometric(2.0, 100.0, 20);
    let tails: Vec<_> =
        (1..=20).map(|n| psi_tail((n as f64 * std::f64::consts::PI).powi(2), 0.5, &src, &times).unwrap()).collect();
    let c = decay_bound_check(&tails, &src).unwrap();
    assert!(c.is_finite() && c > 0.0);
    let running = running_decay_bound(&tails, src.l1_norm());
    assert!(running[19] <= running[9] * 1.01);
    // doubling μ leaves the ratio unchanged
    let doubled = src.scaled(2.0);
    let tails2: Vec<_> =
        (1..=20).map(|n| psi_tail((n as f64 * std::f64::consts::PI).powi(2), 0.5, &doubled, &times).unwrap()).collect();
    let c2 = decay_bound_check(&tails2, &doubled).unwrap();
    assert!(((c2 - c) / c).abs() < 1e-12);
}

#[test]
fn residual_converges() {
    let src = unit_source();
    let lambda = std::f64::consts::PI.powi(2);
    let start = Instant::now();
    let coarse = caputo_residual_check(lambda, 0.5, &src, 1.0 / 512.0, 2.0).unwrap();
    let fine = caputo_residual_check(lambda, 0.5, &src, 1.0 / 2048.0, 2.0).unwrap();

    let order = (coarse.max_residual / fine.max_residual).log2() / 2.0;
    println!("residuals {:e} {:e} order {order} ({:?})", coarse.max_residual, fine.max_residual, start.elapsed());
    assert!(order >= 0.8);
    assert!(fine.max_residual < 1e-3);
}

#[test]
fn residual_halves_with_the_step() {
    let src = unit_source();
    let coarse = caputo_residual_check(1.0, 0.5, &src, 1.0 / 512.0, 2.0).unwrap();
    let fine = caputo_residual_check(1.0, 0.5, &src, 1.0 / 1024.0, 2.0).unwrap();
    assert!(coarse.max_residual / fine.max_residual >= 1.7);
    let first = caputo_residual_check(std::f64::consts::PI.powi(2), 0.5, &src, 1.0 / 1024.0, 2.0).unwrap();
    assert!(first.max_residual < 1e-2);
    assert!(first.checked_points > 1000);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn linear_in_mu(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, t in 0.05f64..3.0, alpha in 0.3f64..1.8) {
        let p = SpatialProfile::zero(1);
        let a = SourceSpec::polynomial(vec![1.0, 0.5], 1.0, p.clone()).unwrap();
        let b = SourceSpec::piecewise(vec![Segment::new(0.0, 0.4, vec![2.0]), Segment::new(0.4, 1.0, vec![0.0, -1.0])], 1.0, p.clone()).unwrap();
        let combo = SourceSpec::piecewise(
            vec![Segment::new(0.0, 0.4, vec![c1 + 2.0 * c2, 0.5 * c1]), Segment::new(0.4, 1.0, vec![c1, 0.5 * c1 - c2])],
            1.0, p).unwrap();
        let lambda = 7.0;
        let lhs = duhamel_coefficient(lambda, alpha, &combo, t).unwrap();
        let rhs = c1 * duhamel_coefficient(lambda, alpha, &a, t).unwrap() + c2 * duhamel_coefficient(lambda, alpha, &b, t).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (lhs.abs() + rhs.abs() + 1e-3));
    }

    #[test]
    fn nonnegative_for_nonnegative_mu(t in 0.01f64..50.0, alpha in 0.2f64..=1.0, lambda in 0.5f64..500.0, k in 0.0f64..3.0) {
        let src = SourceSpec::polynomial(vec![1.0, k], 1.0, SpatialProfile::zero(1)).unwrap();
        prop_assert!(duhamel_coefficient(lambda, alpha, &src, t).unwrap() >= 0.0);
    }

    #[test]
    fn tail_decreases_late(alpha in 0.2f64..0.95, lambda in 1.0f64..200.0) {
        let times = geometric(20.0, 1e4, 12);
        let tail = psi_tail(lambda, alpha, &unit_source(), &times).unwrap();
        prop_assert!(tail.values.windows(2).all(|w| w[1].abs() < w[0].abs()));
    }
}

#[test]
fn fractional_integral_tail_closed_form() {
    let source = SourceSpec::constant(1.0, 1.0, SpatialProfile::zero(1)).unwrap();
    let times = [1.01, 2.0, 10.0, 1e3];
    for alpha in [0.3, 0.5, 0.9, 1.5] {
        let values = fractional_integral_tail(alpha, &source, &times).unwrap();
        for (&t, v) in times.iter().zip(values) {
            // t^α − (t−1)^α written without cancellation
            let diff = -t.powf(alpha) * (alpha * (-1.0 / t).ln_1p()).exp_m1();
            let exact = diff / gamma(alpha + 1.0).unwrap();
            assert!((v - exact).abs() <= 1e-12 * exact.abs(), "alpha={alpha} t={t}: {v} vs {exact}");
        }
    }
    assert!(fractional_integral_tail(0.5, &source, &[0.5]).is_err());
}

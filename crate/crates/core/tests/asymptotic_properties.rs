use std::f64::consts::{FRAC_1_SQRT_2, PI};

use fractail_core::asymptotics::{
    build_tail_model, exponent_ladder, gen_binomial, is_active_power, kernel_moment_expansion, model_error_order,
    moments, AsymptoticsError,
};
use fractail_core::forward::{psi_tail, SourceSpec};
use fractail_core::quadrature::GaussLegendre;
use fractail_core::spectral::{laplacian_1d_dirichlet, SpatialProfile};
use proptest::prelude::*;

fn geometric(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    let n = ((b / a).log10() * per_decade as f64).round() as usize;
    (0..=n).map(|i| a * (b / a).powf(i as f64 / n as f64)).collect()
}

fn unit() -> SourceSpec {
    SourceSpec::constant(1.0, 1.0, SpatialProfile::zero(1)).unwrap()
}

/// `∫_0^1 (t−s)^{−σ} ds` without cancellation.
fn unit_kernel_integral(sigma: f64, t: f64) -> f64 {
    let l = (-1.0 / t).ln_1p();
    if (sigma - 1.0).abs() < 1e-15 {
        return -l;
    }
    t.powf(1.0 - sigma) * ((1.0 - sigma) * l).exp_m1() / (sigma - 1.0)
}

#[test]
fn kernel_expansion_is_certified_for_unit_source() {
    let mut worst = 0.0_f64;
    for &alpha in &[0.5, FRAC_1_SQRT_2, 1.5] {
        for sigma in [alpha + 1.0, 2.0 * alpha + 1.0] {
            for m in [0usize, 2, 4] {
                for t in geometric(4.0, 1e4, 16) {
                    let exact = unit_kernel_integral(sigma, t);
                    let k = kernel_moment_expansion(sigma, &unit(), m, t).unwrap();
                    let err = (k.value - exact).abs();
                    assert!(err <= k.remainder_bound + 8.0 * f64::EPSILON * exact.abs(), "sigma={sigma} M={m} t={t}");
                    if err > 8.0 * f64::EPSILON * exact.abs() {
                        worst = worst.max(err / k.remainder_bound);
                    }
                }
            }
        }
    }
    // the bound is not vacuous
    assert!(worst > 1e-3, "worst ratio {worst}");
}

#[test]
fn kernel_expansion_is_certified_for_linear_source() {
    let src = SourceSpec::polynomial(vec![1.0, 1.0], 1.0, SpatialProfile::zero(1)).unwrap();
    let gl = GaussLegendre::new(64);
    for sigma in [1.5, 2.4] {
        for m in [0usize, 1, 3] {
            for t in geometric(3.0, 1e3, 8) {
                let exact = gl.integrate(0.0, 1.0, |s| (1.0 + s) * (t - s).powf(-sigma));
                let k = kernel_moment_expansion(sigma, &src, m, t).unwrap();
                assert!((k.value - exact).abs() <= k.remainder_bound + 16.0 * f64::EPSILON * exact);
            }
        }
    }
}

#[test]
fn expansion_leading_term_has_order_one_over_t_error() {
    for t in [10.0, 100.0, 1000.0] {
        let k = kernel_moment_expansion(1.3, &unit(), 0, t).unwrap();
        let exact = unit_kernel_integral(1.3, t);
        let rel = ((k.value - exact) / exact).abs();
        assert!(rel < 1.0 / t && rel > 0.1 / t);
    }
}

fn error_slope(alpha: f64, k: usize) -> (f64, f64, f64) {
    // λ = 1 keeps the gap well above rounding across four decades
    let system = laplacian_1d_dirichlet(PI, 1).unwrap();
    let ladder = exponent_ladder(alpha, k).unwrap();
    let m = 4;
    let mv = moments(&unit(), m);
    let model = build_tail_model(&[1.0], &system, &ladder, &mv, k, m).unwrap();
    let times = geometric(1e2, 1e6, 16);
    let tail = psi_tail(1.0, alpha, &unit(), &times).unwrap();
    let fit = model_error_order(&times, &tail.values, &model).unwrap();
    (fit.fit.slope, fit.remainder_order, fit.fit.r_squared)
}

#[test]
fn model_error_decays_at_the_remainder_order() {
    for &alpha in &[0.5, FRAC_1_SQRT_2] {
        for k in [1usize, 2] {
            let (slope, order, r2) = error_slope(alpha, k);
            println!("alpha={alpha:.4} K={k}: slope {slope:.4} order {order:.4} r2 {r2}");
            assert!((slope + order).abs() <= 0.05 * order, "alpha={alpha} K={k}");
        }
    }
}

#[test]
fn identical_model_gap_is_degenerate() {
    let system = laplacian_1d_dirichlet(PI, 1).unwrap();
    let ladder = exponent_ladder(0.5, 2).unwrap();
    let mv = moments(&unit(), 3);
    let model = build_tail_model(&[1.0], &system, &ladder, &mv, 2, 3).unwrap();
    let times = geometric(1e2, 1e5, 8);
    let values: Vec<f64> = times.iter().map(|&t| model.eval(t)).collect();
    assert!(matches!(model_error_order(&times, &values, &model), Err(AsymptoticsError::DegenerateGap)));
    let short = geometric(1e2, 5e3, 8);
    let values: Vec<f64> = short.iter().map(|&t| model.eval(t)).collect();
    assert!(matches!(model_error_order(&short, &values, &model), Err(AsymptoticsError::InsufficientDecades { .. })));
}

#[test]
fn leading_coefficient_sign_for_irrational_order() {
    let alpha = FRAC_1_SQRT_2;
    let system = laplacian_1d_dirichlet(1.0, 1).unwrap();
    let ladder = exponent_ladder(alpha, 1).unwrap();
    let mv = moments(&unit(), 0);
    let model = build_tail_model(&[1.0], &system, &ladder, &mv, 1, 0).unwrap();
    assert!((model.exponents[0][0] - (alpha + 1.0)).abs() < 1e-15);
    assert!(model.coefficients[0][0] > 0.0);
    // ψ·t^{α+1} tends to the leading coefficient
    let times = [1e4, 1e5, 1e6];
    let tail = psi_tail(system.eigenvalues()[0], alpha, &unit(), &times).unwrap();
    let c = model.coefficients[0][0];
    let rels: Vec<f64> =
        times.iter().zip(&tail.values).map(|(t, v)| (v * t.powf(alpha + 1.0) / c - 1.0).abs()).collect();
    assert!(rels[2] < rels[0] && rels[2] < 1e-3, "{rels:?}");
}

#[test]
fn more_ladder_terms_steepen_the_gap() {
    let (s1, _, _) = error_slope(FRAC_1_SQRT_2, 1);
    let (s2, _, _) = error_slope(FRAC_1_SQRT_2, 2);
    assert!(s2 < s1);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn ladder_is_exactly_the_active_powers(alpha in 0.05f64..1.95, k in 1usize..8) {
        prop_assume!((alpha - 1.0).abs() > 1e-6);
        let ladder = exponent_ladder(alpha, k).unwrap();
        let ells = ladder.ells();
        prop_assert_eq!(ells.len(), k);
        prop_assert!(ells[0] >= 2);
        prop_assert!(ells.windows(2).all(|w| w[0] < w[1]));
        for &l in ells {
            prop_assert!(is_active_power(alpha, l));
            prop_assert!(ladder.gamma_coefficient(ells.iter().position(|&x| x == l).unwrap()) != 0.0);
        }
        for l in 2..*ells.last().unwrap() {
            if !ells.contains(&l) {
                prop_assert!(!is_active_power(alpha, l));
            }
        }
    }

    #[test]
    fn moments_are_bounded(c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, t0 in 0.2f64..3.0) {
        let src = SourceSpec::polynomial(vec![c0, c1, c2], t0, SpatialProfile::zero(1)).unwrap();
        let mv = moments(&src, 6);
        for (m, v) in mv.moments.iter().enumerate() {
            prop_assert!(v.abs() <= t0.powi(m as i32) * mv.mu_l1 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn nonnegative_sources_have_alternating_moments(c0 in 0.0f64..2.0, c1 in 0.0f64..2.0) {
        let src = SourceSpec::polynomial(vec![c0, c1], 1.0, SpatialProfile::zero(1)).unwrap();
        for (m, v) in moments(&src, 6).moments.iter().enumerate() {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!(sign * v >= 0.0);
        }
    }

    #[test]
    fn binomial_recurrence(x in -6.0f64..6.0, m in 1usize..30) {
        let lhs = gen_binomial(x, m);
        let rhs = gen_binomial(x, m - 1) * (x - m as f64 + 1.0) / m as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(1e-300));
    }
}

use fractail_core::special::{gamma, rgamma};
use fractail_oracle::gamma_reference;
use proptest::prelude::*;

#[test]
fn reflection_example() {
    let g = gamma(-0.5).unwrap();
    assert!((g + 3.544_907_701_811_032).abs() < 1e-14);
    assert!(((g - gamma_reference(-0.5, 50)) / g).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(256) })]

    #[test]
    fn positive_arguments(x in 1e-3f64..170.0) {
        let exact = gamma_reference(x, 50);
        prop_assert!(((gamma(x).unwrap() - exact) / exact).abs() < 1e-13);
    }

    #[test]
    fn negative_arguments(n in 0u32..60, frac in 1e-6f64..(1.0 - 1e-6)) {
        let x = -(n as f64) - frac;
        let exact = gamma_reference(x, 50);
        prop_assert!(((gamma(x).unwrap() - exact) / exact).abs() < 1e-13);
        prop_assert!((rgamma(x) * exact - 1.0).abs() < 1e-13);
    }
}

//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use fractail_core::forward::{psi_tail, SourceSpec};
use fractail_core::inverse::TailData;
use fractail_core::spectral::SpatialProfile;

pub fn geometric(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    let n = ((b / a).log10() * per_decade as f64).round() as usize;
    (0..=n).map(|i| a * (b / a).powf(i as f64 / n as f64)).collect()
}

pub fn unit_source() -> SourceSpec {
    SourceSpec::constant(1.0, 1.0, SpatialProfile::zero(1)).expect("valid source")
}

/// Noiseless three-mode tail on `[1e2, 1e7]`.
pub fn three_mode_tail(alpha: f64) -> TailData {
    let times = geometric(1e2, 1e7, 16);
    let amplitudes = [1.0, 0.5, 0.25];
    let tails: Vec<_> =
        (1..=3).map(|n| psi_tail((n * n) as f64 * PI * PI, alpha, &unit_source(), &times).expect("tail")).collect();
    TailData::from_modes(&tails, &amplitudes, 0.0).expect("tail data")
}

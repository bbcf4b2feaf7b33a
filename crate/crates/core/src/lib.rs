//! Spectral forward solving, long-time asymptotics and inverse source
//! recovery for time-fractional diffusion-wave equations
//!
//! ```text
//! ∂_t^α u = −A u + μ(t) f(x),   0 < α ≤ 2,   μ supported in [0, t₀]
//! ```
//!
//! on a bounded interval with a self-adjoint elliptic operator `A`.
//!
//! * [`mittag_leffler`]: `E_{α,β}(x)` for `x ≤ 0` with certified asymptotics.
//! * [`spectral`]: eigensystems, spatial profiles and observation pairings.
//! * [`forward`]: Duhamel modal solutions, their tails after `t₀` and a
//!   finite-difference residual check.
//! * [`asymptotics`]: the exponent ladder, source moments and the tail model.
//! * [`inverse`]: extraction of spectral sums, modal amplitudes, scalar
//!   moments and the uniqueness and heat-contrast experiments.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
// coefficient tables keep the digits they were published with
#![allow(clippy::excessive_precision)]

use thiserror::Error;

pub mod asymptotics;
pub mod fit;
pub mod forward;
pub mod inverse;
pub mod mittag_leffler;
pub mod quadrature;
pub mod special;
pub mod spectral;

pub use asymptotics::{
    build_tail_model, exponent_ladder, kernel_moment_expansion, model_error_order, moments, AsymptoticsError,
    ErrorOrderFit, ExponentLadder, KernelExpansion, MomentVector, TailModel,
};
pub use fit::{FitError, LinearFit};
pub use forward::{
    caputo_residual_check, decay_bound_check, duhamel_coefficient, psi_tail, ForwardError, ModalTail, ResidualReport,
    Segment, SourceSpec,
};
pub use inverse::{
    extract_spectral_sums, heat_contrast_experiment, recover_modal_amplitudes, scalar_moment_recovery,
    uniqueness_experiment, ContrastReport, Estimate, Extraction, ExtractionMode, InverseError, ModalRecovery,
    ScalarRecovery, TailData, TailExperiment, UniquenessReport,
};
pub use mittag_leffler::{ml_eval, MlError, MlParams};
pub use spectral::{
    laplacian_1d_dirichlet, pairing_coefficients, EigenSystem, ObservationSpec, SpatialProfile, SpectralError,
};

/// Any failure raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    MittagLeffler(#[from] MlError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

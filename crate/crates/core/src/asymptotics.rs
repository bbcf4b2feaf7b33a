//! Long-time expansion of the post-source tail.
//!
//! For `t ≫ t₀` the modal tail behaves like
//! `ψ_n(t) ≈ Σ_k γ_k λ_n^{−ℓ_k} Σ_m binom(−e_k, m) μ_m t^{−(e_k+m)}` with
//! `e_k = αℓ_k − α + 1`, `γ_k = (−1)^{ℓ_k+1}/Γ(α − αℓ_k)` and the source
//! moments `μ_m = ∫_0^{t₀} (−s)^m μ(s) ds`. Summing over modes with pairings
//! `a_n` replaces `λ_n^{−ℓ_k}` by `A_k = Σ_n a_n λ_n^{−ℓ_k}`.

use thiserror::Error;

use crate::fit::{log_log_fit, FitError, LinearFit};
use crate::forward::SourceSpec;
use crate::special::rgamma;
use crate::spectral::{power_law_tail, summability_report, EigenSystem, SpectralError};

/// Distance to an integer below which a product `α·j` counts as an integer.
pub const LADDER_TOLERANCE: f64 = 1e-9;

/// Largest `s/t` at which the kernel expansion is used, so `t ≥ t₀/r`.
pub const EXPANSION_RATIO: f64 = 0.5;

/// Relative threshold locating the first non-vanishing moment.
pub const MOMENT_THRESHOLD: f64 = 1e-12;

/// Gaps below this multiple of `ε·|observed|` are treated as rounding.
pub const GAP_FLOOR: f64 = 256.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error("order alpha = 1 has no algebraic tail")]
    AlphaIsOne,
    #[error("order {0} is outside (0, 2)")]
    InvalidOrder(f64),
    #[error("at least one ladder term is required")]
    EmptyLadder,
    #[error("t = {t} is too small for the kernel expansion (need t > {min})")]
    TimeTooSmall { t: f64, min: f64 },
    #[error("kernel exponent must be positive, got {0}")]
    InvalidExponent(f64),
    #[error("requested {requested} terms but only {available} are available")]
    NotEnoughTerms { requested: usize, available: usize },
    #[error("pairing coefficients are not summable (tail exponent {tail_exponent})")]
    DivergentCoefficients { tail_exponent: f64 },
    #[error("{got} pairings for {modes} modes")]
    LengthMismatch { got: usize, modes: usize },
    #[error("time grid spans {decades:.2} decades, need at least {needed}")]
    InsufficientDecades { decades: f64, needed: f64 },
    #[error("model gap is at the rounding floor")]
    DegenerateGap,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() <= LADDER_TOLERANCE
}

/// True when the `η^{−ℓ}` coefficient of `E_{α,α}(−η)` is non-zero, i.e.
/// `α − αℓ` is not a pole of `Γ`.
pub fn is_active_power(alpha: f64, ell: u32) -> bool {
    let x = alpha * (ell as f64 - 1.0);
    !near_integer(x)
}

/// Increasing powers `ℓ ≥ 2` whose coefficient in the algebraic expansion
/// of `E_{α,α}` is non-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentLadder {
    alpha: f64,
    ells: Vec<u32>,
}

impl ExponentLadder {
    pub fn new(alpha: f64, k: usize) -> Result<Self, AsymptoticsError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(AsymptoticsError::InvalidOrder(alpha));
        }
        if (alpha - 1.0).abs() <= LADDER_TOLERANCE {
            return Err(AsymptoticsError::AlphaIsOne);
        }
        if k == 0 {
            return Err(AsymptoticsError::EmptyLadder);
        }
        let ells = (2u32..).filter(|&l| is_active_power(alpha, l)).take(k).collect();
        Ok(Self { alpha, ells })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ells(&self) -> &[u32] {
        &self.ells
    }

    pub fn len(&self) -> usize {
        self.ells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ells.is_empty()
    }

    /// `e_k = αℓ_k − α + 1` (0-based `k`).
    pub fn exponent(&self, k: usize) -> f64 {
        ladder_exponent(self.alpha, self.ells[k])
    }

    /// `γ_k = (−1)^{ℓ_k+1}/Γ(α − αℓ_k)`.
    pub fn gamma_coefficient(&self, k: usize) -> f64 {
        power_coefficient(self.alpha, self.ells[k])
    }

    /// The ladder extended by one member.
    pub fn extended(&self) -> Self {
        let next = (self.ells.last().copied().unwrap_or(1) + 1..)
            .find(|&l| is_active_power(self.alpha, l))
            .expect("active powers are unbounded");
        let mut ells = self.ells.clone();
        ells.push(next);
        Self { alpha: self.alpha, ells }
    }
}

pub fn exponent_ladder(alpha: f64, k: usize) -> Result<ExponentLadder, AsymptoticsError> {
    ExponentLadder::new(alpha, k)
}

/// `αℓ − α + 1`.
pub fn ladder_exponent(alpha: f64, ell: u32) -> f64 {
    alpha * ell as f64 - alpha + 1.0
}

/// `(−1)^{ℓ+1}/Γ(α − αℓ)`; zero when the argument is a pole.
pub fn power_coefficient(alpha: f64, ell: u32) -> f64 {
    let sign = if ell % 2 == 1 { 1.0 } else { -1.0 };
    sign * rgamma(alpha - alpha * ell as f64)
}

/// `μ_m = ∫_0^{t₀} (−s)^m μ(s) ds` for `m = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub moments: Vec<f64>,
    /// First index with a non-negligible moment.
    pub m1: Option<usize>,
    pub t0: f64,
    pub mu_l1: f64,
}

impl MomentVector {
    pub fn max_order(&self) -> usize {
        self.moments.len() - 1
    }
}

/// Exact moments of a piecewise-polynomial source.
pub fn moments(source: &SourceSpec, max_order: usize) -> MomentVector {
    let t0 = source.t0();
    let mu_l1 = source.l1_norm();
    let moments: Vec<f64> = (0..=max_order)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * source.segments().iter().map(|seg| seg.power_integral(m)).sum::<f64>()
        })
        .collect();
    let m1 = moments.iter().enumerate().position(|(m, v)| v.abs() > MOMENT_THRESHOLD * t0.powi(m as i32) * mu_l1);
    MomentVector { moments, m1, t0, mu_l1 }
}

/// Generalised binomial coefficient `x(x−1)⋯(x−m+1)/m!`.
pub fn gen_binomial(x: f64, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, j| acc * (x - j as f64) / (j + 1) as f64)
}

/// Partial sum of the kernel expansion and its certified remainder bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelExpansion {
    pub value: f64,
    pub remainder_bound: f64,
}

/// `∫_0^{t₀} μ(s)(t−s)^{−σ} ds ≈ Σ_{m≤M} binom(−σ, m) μ_m t^{−σ−m}`.
///
/// For `|η| ≤ r` the Lagrange remainder of `(1+η)^{−σ}` is at most
/// `|binom(−σ, M+1)| (1−r)^{−σ−M−1} |η|^{M+1}`, which integrates to the
/// returned bound.
pub fn kernel_moment_expansion(
    sigma: f64,
    source: &SourceSpec,
    max_order: usize,
    t: f64,
) -> Result<KernelExpansion, AsymptoticsError> {
    if !(sigma > 0.0) {
        return Err(AsymptoticsError::InvalidExponent(sigma));
    }
    let min = source.t0() / EXPANSION_RATIO;
    if !(t > min) {
        return Err(AsymptoticsError::TimeTooSmall { t, min });
    }
    let mv = moments(source, max_order);
    let value =
        mv.moments.iter().enumerate().map(|(m, mu)| gen_binomial(-sigma, m) * mu * t.powf(-sigma - m as f64)).sum();
    let order = (max_order + 1) as f64;
    let c4 = gen_binomial(-sigma, max_order + 1).abs() * (1.0 - EXPANSION_RATIO).powf(-sigma - order);
    let remainder_bound = c4 * mv.t0.powf(order) * mv.mu_l1 * t.powf(-sigma - order);
    Ok(KernelExpansion { value, remainder_bound })
}

/// `t^{−e_k}`-structure of the tail without the spectral sums:
/// `D_k(t) = γ_k Σ_{m≤M} binom(−e_k, m) μ_m t^{−(e_k+m)}`, so that the model
/// is `Σ_k A_k D_k(t)`.
pub fn tail_basis(ladder: &ExponentLadder, moments: &MomentVector, k: usize, max_order: usize, t: f64) -> f64 {
    let e = ladder.exponent(k);
    let g = ladder.gamma_coefficient(k);
    let ln_t = t.ln();
    (0..=max_order.min(moments.max_order()))
        .map(|m| gen_binomial(-e, m) * moments.moments[m] * (-(e + m as f64) * ln_t).exp())
        .sum::<f64>()
        * g
}

/// `Σ_{k≤K} Σ_{m≤M} c_{k,m} t^{−(e_k+m)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailModel {
    pub ladder: ExponentLadder,
    pub moments: MomentVector,
    /// `A_k = Σ_n a_n λ_n^{−ℓ_k}`.
    pub spectral_sums: Vec<f64>,
    /// Estimated contribution of the modes beyond the retained ones.
    pub sum_tail_estimates: Vec<f64>,
    /// `exponents[k][m] = e_k + m`.
    pub exponents: Vec<Vec<f64>>,
    pub coefficients: Vec<Vec<f64>>,
    /// Decay exponent of the first omitted term.
    pub remainder_order: f64,
}

impl TailModel {
    pub fn eval(&self, t: f64) -> f64 {
        let ln_t = t.ln();
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .flat_map(|(es, cs)| es.iter().zip(cs))
            .map(|(e, c)| c * (-e * ln_t).exp())
            .sum()
    }

    pub fn terms(&self) -> usize {
        self.spectral_sums.len()
    }

    pub fn max_moment(&self) -> usize {
        self.exponents.first().map_or(0, |e| e.len() - 1)
    }
}

/// Assembles the tail model for `Σ_n a_n ψ_n(t)` from pairings `a_n` on the
/// modes of `system`, using the first `k` ladder members and moments up to
/// order `max_order`.
pub fn build_tail_model(
    pairings: &[f64],
    system: &EigenSystem,
    ladder: &ExponentLadder,
    moments: &MomentVector,
    k: usize,
    max_order: usize,
) -> Result<TailModel, AsymptoticsError> {
    if k == 0 {
        return Err(AsymptoticsError::EmptyLadder);
    }
    if k > ladder.len() {
        return Err(AsymptoticsError::NotEnoughTerms { requested: k, available: ladder.len() });
    }
    if max_order > moments.max_order() {
        return Err(AsymptoticsError::NotEnoughTerms { requested: max_order, available: moments.max_order() });
    }
    let lambdas = system.eigenvalues();
    if pairings.len() > lambdas.len() {
        return Err(AsymptoticsError::LengthMismatch { got: pairings.len(), modes: lambdas.len() });
    }
    let mut tails_known = false;
    if pairings.len() >= 10 {
        let report = summability_report(pairings, system)?;
        if report.divergent {
            return Err(AsymptoticsError::DivergentCoefficients { tail_exponent: report.tail_exponent });
        }
        tails_known = true;
    }
    let ladder = ExponentLadder { alpha: ladder.alpha, ells: ladder.ells[..k].to_vec() };
    let mut spectral_sums = Vec::with_capacity(k);
    let mut sum_tail_estimates = Vec::with_capacity(k);
    let mut exponents = Vec::with_capacity(k);
    let mut coefficients = Vec::with_capacity(k);
    for (i, &ell) in ladder.ells.iter().enumerate() {
        let terms: Vec<f64> = pairings.iter().zip(lambdas).map(|(a, l)| a * l.powi(-(ell as i32))).collect();
        spectral_sums.push(terms.iter().sum());
        sum_tail_estimates.push(if tails_known { power_law_tail(&terms) } else { 0.0 });
        let e = ladder.exponent(i);
        let g = ladder.gamma_coefficient(i);
        exponents.push((0..=max_order).map(|m| e + m as f64).collect());
        coefficients
            .push((0..=max_order).map(|m| g * gen_binomial(-e, m) * moments.moments[m] * spectral_sums[i]).collect());
    }
    let next = ladder.extended();
    let remainder_order = next.exponent(k).min(ladder.exponent(0) + max_order as f64 + 1.0);
    Ok(TailModel {
        ladder,
        moments: moments.clone(),
        spectral_sums,
        sum_tail_estimates,
        exponents,
        coefficients,
        remainder_order,
    })
}

/// Fitted decay of `|observed − model|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorOrderFit {
    pub fit: LinearFit,
    /// The model's predicted order, for comparison with `−fit.slope`.
    pub remainder_order: f64,
    pub points_used: usize,
}

/// Log-log slope of the gap between samples of the true tail and the model
/// on a geometric grid. Samples whose gap is at the rounding floor of the
/// observation are dropped; the remaining ones must still cover two decades.
pub fn model_error_order(
    times: &[f64],
    observed: &[f64],
    model: &TailModel,
) -> Result<ErrorOrderFit, AsymptoticsError> {
    const NEEDED: f64 = 2.0;
    if times.len() != observed.len() || times.len() < 3 {
        return Err(AsymptoticsError::LengthMismatch { got: observed.len(), modes: times.len() });
    }
    let decades = |ts: &[f64]| (ts[ts.len() - 1] / ts[0]).log10();
    let span = decades(times);
    if !(span >= NEEDED) {
        return Err(AsymptoticsError::InsufficientDecades { decades: span, needed: NEEDED });
    }
    let (ts, gaps): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(observed)
        .map(|(&t, &g)| (t, g - model.eval(t)))
        .zip(observed)
        .filter(|((_, gap), g)| gap.abs() > GAP_FLOOR * f64::EPSILON * g.abs())
        .map(|(p, _)| p)
        .unzip();
    if ts.len() < 3 || decades(&ts) < NEEDED {
        return Err(AsymptoticsError::DegenerateGap);
    }
    let fit = log_log_fit(&ts, &gaps)?;
    Ok(ErrorOrderFit { fit, remainder_order: model.remainder_order, points_used: ts.len() })
}

//! Modal Duhamel solution of `∂_t^α u + A u = μ(t) f(x)`.
//!
//! Each mode evolves as
//! `c_n(t) = ∫_0^t (t−s)^{α−1} E_{α,α}(−λ_n (t−s)^α) μ(s) ds`, and after the
//! source switches off (`t > t₀`) this is the tail `ψ_n(t)`.

use std::collections::HashMap;
use std::sync::OnceLock;

use thiserror::Error;

use crate::mittag_leffler::{ml_eval, MlError, MlParams};
use crate::quadrature::{adaptive_gk15, GaussLegendre};
use crate::special::gamma;
use crate::spectral::SpatialProfile;

const PANEL_NODES: usize = 64;
/// Dyadic refinement steps towards a singular endpoint.
const ENDPOINT_REFINEMENTS: usize = 24;

fn gauss64() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_NODES))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForwardError {
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("eigenvalue must be positive, got {0}")]
    NonPositiveEigenvalue(f64),
    #[error("time {t} does not lie beyond the source support t0={t0}")]
    TimeInsideSupport { t: f64, t0: f64 },
    #[error("order {0} is not supported here")]
    UnsupportedOrder(f64),
    #[error("source support end must be positive, got {0}")]
    InvalidSupport(f64),
    #[error("segment [{start}, {end}] is empty, unordered or outside [0, t0]")]
    InvalidSegment { start: f64, end: f64 },
    #[error("segments overlap at {0}")]
    OverlappingSegments(f64),
    #[error("sampled source needs matching, increasing times (got {times} times, {values} values)")]
    InvalidSamples { times: usize, values: usize },
    #[error("time grid must be strictly increasing and non-empty")]
    InvalidTimeGrid,
    #[error("need at least {needed} tails, got {got}")]
    TooFewTails { needed: usize, got: usize },
    #[error("grid step must be positive and resolve the support, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Ml(#[from] MlError),
}

/// `μ(s) = Σ_j c_j s^j` on `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub coeffs: Vec<f64>,
}

impl Segment {
    pub fn new(start: f64, end: f64, coeffs: Vec<f64>) -> Self {
        Self { start, end, coeffs }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    /// `∫ s^k μ(s) ds` over the segment, exactly.
    pub fn power_integral(&self, k: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let p = (k + j + 1) as i32;
                c * (self.end.powi(p) - self.start.powi(p)) / p as f64
            })
            .sum()
    }
}

/// Separable source `μ(t) f(x)` with `μ` piecewise polynomial on `[0, t₀]`
/// and zero afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    segments: Vec<Segment>,
    t0: f64,
    pub profile: SpatialProfile,
}

impl SourceSpec {
    pub fn piecewise(segments: Vec<Segment>, t0: f64, profile: SpatialProfile) -> Result<Self, ForwardError> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(ForwardError::InvalidSupport(t0));
        }
        let mut segments = segments;
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        for seg in &segments {
            if !(seg.start >= 0.0 && seg.end > seg.start && seg.end <= t0 * (1.0 + 1e-14)) {
                return Err(ForwardError::InvalidSegment { start: seg.start, end: seg.end });
            }
        }
        for w in segments.windows(2) {
            if w[1].start < w[0].end {
                return Err(ForwardError::OverlappingSegments(w[1].start));
            }
        }
        Ok(Self { segments, t0, profile })
    }

    /// `μ ≡ c` on `(0, t₀)`.
    pub fn constant(c: f64, t0: f64, profile: SpatialProfile) -> Result<Self, ForwardError> {
        Self::piecewise(vec![Segment::new(0.0, t0, vec![c])], t0, profile)
    }

    /// Polynomial `Σ c_j s^j` on the whole of `(0, t₀)`.
    pub fn polynomial(coeffs: Vec<f64>, t0: f64, profile: SpatialProfile) -> Result<Self, ForwardError> {
        Self::piecewise(vec![Segment::new(0.0, t0, coeffs)], t0, profile)
    }

    /// Piecewise-linear interpolation of samples; the support ends at the last
    /// sample time.
    pub fn sampled(times: &[f64], values: &[f64], profile: SpatialProfile) -> Result<Self, ForwardError> {
        let bad = ForwardError::InvalidSamples { times: times.len(), values: values.len() };
        if times.len() != values.len() || times.len() < 2 || times[0] < 0.0 {
            return Err(bad);
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(bad);
        }
        let segments = times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| {
                let slope = (v[1] - v[0]) / (t[1] - t[0]);
                Segment::new(t[0], t[1], vec![v[0] - slope * t[0], slope])
            })
            .collect();
        Self::piecewise(segments, *times.last().unwrap(), profile)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn mu(&self, s: f64) -> f64 {
        self.segments
            .iter()
            .find(|seg| s >= seg.start && s < seg.end)
            .or_else(|| self.segments.last().filter(|seg| s == seg.end))
            .map_or(0.0, |seg| seg.eval(s))
    }

    /// Same source with `μ` multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment::new(s.start, s.end, s.coeffs.iter().map(|c| c * k).collect()))
            .collect();
        Self { segments, t0: self.t0, profile: self.profile.clone() }
    }

    pub fn with_profile(&self, profile: SpatialProfile) -> Self {
        Self { segments: self.segments.clone(), t0: self.t0, profile }
    }

    /// `‖μ‖_{L¹(0,t₀)}`.
    pub fn l1_norm(&self) -> f64 {
        self.segments
            .iter()
            .map(|seg| adaptive_gk15(|s| seg.eval(s).abs(), seg.start, seg.end, 0.0, 1e-13, 200).value)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.coeffs.iter().all(|&c| c == 0.0))
    }
}

/// Composite Gauss–Legendre over panels that start with width `h0` at `a`
/// and double towards `b`.
fn graded_from_left<F: FnMut(f64) -> f64>(a: f64, b: f64, h0: f64, refine_left: bool, mut f: F) -> f64 {
    let gl = gauss64();
    let mut acc = 0.0;
    let h0 = h0.min(b - a);
    if !(h0 > 0.0) {
        return 0.0;
    }
    if refine_left {
        let mut lo = h0 * 0.5f64.powi(ENDPOINT_REFINEMENTS as i32);
        acc += gl.integrate(a, a + lo, &mut f);
        for _ in 0..ENDPOINT_REFINEMENTS {
            acc += gl.integrate(a + lo, a + 2.0 * lo, &mut f);
            lo *= 2.0;
        }
    } else {
        acc += gl.integrate(a, a + h0, &mut f);
    }
    let mut lo = a + h0;
    let mut width = h0;
    while lo < b {
        let hi = (lo + width).min(b);
        // avoid a sliver at the end
        let hi = if b - hi < 0.25 * width { b } else { hi };
        acc += gl.integrate(lo, hi, &mut f);
        lo = hi;
        width *= 2.0;
    }
    acc
}

fn check_order(alpha: f64) -> Result<MlParams, ForwardError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(ForwardError::UnsupportedOrder(alpha));
    }
    Ok(MlParams::new(alpha, alpha)?)
}

/// `∫_0^t (t−s)^{α−1} E_{α,α}(−λ(t−s)^α) μ(s) ds`.
///
/// With `w = (t−s)^α` the kernel becomes `E_{α,α}(−λw)/α`, which is smooth
/// at `s = t`.
pub fn duhamel_coefficient(lambda: f64, alpha: f64, source: &SourceSpec, t: f64) -> Result<f64, ForwardError> {
    if !(t > 0.0) {
        return Err(ForwardError::NonPositiveTime(t));
    }
    if !(lambda > 0.0) {
        return Err(ForwardError::NonPositiveEigenvalue(lambda));
    }
    let params = check_order(alpha)?;
    Ok(duhamel_with(|w| ml_eval(params, -lambda * w), lambda, alpha, source, t))
}

/// Duhamel integral with the kernel `w ↦ E_{α,α}(−λw)` supplied by the caller.
fn duhamel_with<K: FnMut(f64) -> f64>(mut kernel: K, lambda: f64, alpha: f64, source: &SourceSpec, t: f64) -> f64 {
    let inv_alpha = 1.0 / alpha;
    let mut total = 0.0;
    for seg in source.segments() {
        if seg.start >= t {
            continue;
        }
        let s_hi = seg.end.min(t);
        let u1 = t - s_hi;
        let u2 = t - seg.start;
        let w1 = u1.powf(alpha);
        let w2 = u2.powf(alpha);
        let f = |w: f64| kernel(w) * seg.eval(t - w.powf(inv_alpha));
        // w^{1/α} is not smooth at w = 0, so panels start no wider than the
        // distance to it
        let h0 = if u1 > 0.0 { (1.0 / lambda).min(w1) } else { 1.0 / lambda }.min(w2 - w1);
        let rough = seg.coeffs.len() > 1 && inv_alpha.fract() != 0.0;
        total += graded_from_left(w1, w2, h0, u1 == 0.0 && rough, f) * inv_alpha;
    }
    total
}

/// Samples of `ψ(t)` for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalTail {
    pub lambda: f64,
    pub alpha: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// `ψ(t) = ∫_0^{t₀} (t−s)^{α−1} E_{α,α}(−λ(t−s)^α) μ(s) ds` for `t > t₀`,
/// by Gauss–Legendre in `s` on panels graded towards `s = t₀`.
pub fn psi_tail(lambda: f64, alpha: f64, source: &SourceSpec, times: &[f64]) -> Result<ModalTail, ForwardError> {
    if !(lambda > 0.0) {
        return Err(ForwardError::NonPositiveEigenvalue(lambda));
    }
    let params = check_order(alpha)?;
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ForwardError::InvalidTimeGrid);
    }
    if let Some(&t) = times.iter().find(|&&t| !(t > source.t0())) {
        return Err(ForwardError::TimeInsideSupport { t, t0: source.t0() });
    }
    let values = times.iter().map(|&t| psi_value(params, lambda, source, t)).collect();
    Ok(ModalTail { lambda, alpha, times: times.to_vec(), values })
}

fn psi_value(params: MlParams, lambda: f64, source: &SourceSpec, t: f64) -> f64 {
    let alpha = params.alpha();
    let kernel = |v: f64| v.powf(alpha - 1.0) * ml_eval(params, -lambda * v.powf(alpha));
    source
        .segments()
        .iter()
        .map(|seg| {
            // v = t − s runs from the near end of the segment
            let v1 = t - seg.end;
            let v2 = t - seg.start;
            graded_from_left(v1, v2, v1, false, |v| kernel(v) * seg.eval(t - v))
        })
        .sum()
}

/// `J^α μ(t) = ∫_0^{t₀} (t−s)^{α−1} μ(s) ds / Γ(α)` for `t > t₀`.
pub fn fractional_integral_tail(alpha: f64, source: &SourceSpec, times: &[f64]) -> Result<Vec<f64>, ForwardError> {
    if !(alpha > 0.0) {
        return Err(ForwardError::UnsupportedOrder(alpha));
    }
    if let Some(&t) = times.iter().find(|&&t| !(t > source.t0())) {
        return Err(ForwardError::TimeInsideSupport { t, t0: source.t0() });
    }
    let scale = gamma(alpha).map_err(|_| ForwardError::UnsupportedOrder(alpha))?;
    Ok(times
        .iter()
        .map(|&t| {
            let total: f64 = source
                .segments()
                .iter()
                .map(|seg| {
                    let (v1, v2) = (t - seg.end, t - seg.start);
                    graded_from_left(v1, v2, v1, false, |v| v.powf(alpha - 1.0) * seg.eval(t - v))
                })
                .sum();
            total / scale
        })
        .collect())
}

/// `max_{n,t} λ_n |ψ_n(t)| / ‖μ‖_{L¹}`.
pub fn decay_bound_check(tails: &[ModalTail], source: &SourceSpec) -> Result<f64, ForwardError> {
    if tails.len() < 10 {
        return Err(ForwardError::TooFewTails { needed: 10, got: tails.len() });
    }
    let norm = source.l1_norm();
    Ok(running_decay_bound(tails, norm).last().copied().unwrap_or(0.0))
}

/// Running maximum over the first `n` tails of `λ|ψ(t)|/‖μ‖_{L¹}`.
pub fn running_decay_bound(tails: &[ModalTail], mu_l1: f64) -> Vec<f64> {
    let mut best = 0.0_f64;
    tails
        .iter()
        .map(|tail| {
            let m = tail.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            best = best.max(tail.lambda * m / mu_l1);
            best
        })
        .collect()
}

/// `J^α w` on the uniform grid `t_j = j h` by product integration of the
/// piecewise-linear interpolant of `w`.
pub fn riemann_liouville_integral(w: &[f64], alpha: f64, h: f64) -> Result<Vec<f64>, ForwardError> {
    if !(alpha > 0.0) {
        return Err(ForwardError::UnsupportedOrder(alpha));
    }
    if !(h > 0.0) {
        return Err(ForwardError::InvalidStep(h));
    }
    let a1 = alpha + 1.0;
    let scale = h.powf(alpha) / gamma(alpha + 2.0).expect("alpha + 2 > 0");
    let pow: Vec<f64> = (0..=w.len()).map(|k| (k as f64).powf(a1)).collect();
    let mut out = vec![0.0; w.len()];
    for n in 1..w.len() {
        let nf = n as f64;
        let mut acc = (pow[n - 1] - (nf - alpha - 1.0) * nf.powf(alpha)) * w[0];
        for (j, wj) in w.iter().enumerate().take(n).skip(1) {
            let k = n - j;
            acc += (pow[k + 1] - 2.0 * pow[k] + pow[k - 1]) * wj;
        }
        acc += w[n];
        out[n] = scale * acc;
    }
    Ok(out)
}

/// L1 approximation of the Caputo derivative (`0 < α < 1`) on `t_j = j h`.
pub fn caputo_l1(c: &[f64], alpha: f64, h: f64) -> Vec<f64> {
    let scale = h.powf(-alpha) / gamma(2.0 - alpha).expect("2 - alpha > 0");
    let b: Vec<f64> = (0..c.len()).map(|k| ((k + 1) as f64).powf(1.0 - alpha) - (k as f64).powf(1.0 - alpha)).collect();
    let mut out = vec![0.0; c.len()];
    for n in 1..c.len() {
        let mut acc = 0.0;
        for k in 0..n {
            acc += b[k] * (c[n - k] - c[n - k - 1]);
        }
        out[n] = scale * acc;
    }
    out
}

/// Result of the discrete residual check.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub step: f64,
    /// `max |∂_t^α c + λc − μ|` over the checked grid points.
    pub max_residual: f64,
    pub checked_points: usize,
}

/// Distance, as a fraction of `t₀`, kept from `t = 0` and from the
/// breakpoints of `μ`, where the modal solution is not smooth.
pub const RESIDUAL_EXCLUSION: f64 = 0.125;

/// Residual of the modal equation for the computed Duhamel coefficient on
/// `t_j = j h`, `0 ≤ t_j ≤ t_end`. Points within `RESIDUAL_EXCLUSION·t₀` of
/// `t = 0` or of a breakpoint of `μ` are skipped.
pub fn caputo_residual_check(
    lambda: f64,
    alpha: f64,
    source: &SourceSpec,
    h: f64,
    t_end: f64,
) -> Result<ResidualReport, ForwardError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ForwardError::UnsupportedOrder(alpha));
    }
    if !(h > 0.0 && h < source.t0()) {
        return Err(ForwardError::InvalidStep(h));
    }
    let n = (t_end / h).round() as usize;
    let times: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    if !(lambda > 0.0) {
        return Err(ForwardError::NonPositiveEigenvalue(lambda));
    }
    let params = check_order(alpha)?;
    // panels near w = 0 coincide across grid times, so kernel values repeat
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut kernel = |w: f64| *cache.entry(w.to_bits()).or_insert_with(|| ml_eval(params, -lambda * w));
    let mut c = vec![0.0; n + 1];
    for j in 1..=n {
        c[j] = duhamel_with(&mut kernel, lambda, alpha, source, times[j]);
    }
    let d = caputo_l1(&c, alpha, h);
    let delta = RESIDUAL_EXCLUSION * source.t0();
    let mut breaks = vec![0.0];
    for seg in source.segments() {
        breaks.push(seg.start);
        breaks.push(seg.end);
    }
    let mut max_residual = 0.0_f64;
    let mut checked_points = 0;
    for j in 1..n {
        let t = times[j];
        if breaks.iter().any(|b| (t - b).abs() < delta) {
            continue;
        }
        let r = d[j] + lambda * c[j] - source.mu(t);
        max_residual = max_residual.max(r.abs());
        checked_points += 1;
    }
    Ok(ResidualReport { step: h, max_residual, checked_points })
}

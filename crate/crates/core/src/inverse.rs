//! Recovery of spectral sums, modal amplitudes and source moments from
//! long-time tail data, plus the uniqueness and `α = 1` contrast studies.

use thiserror::Error;

use crate::asymptotics::{
    build_tail_model, gen_binomial, moments, tail_basis, AsymptoticsError, ExponentLadder, MomentVector, GAP_FLOOR,
};
use crate::fit::{linear_fit, log_log_fit, weighted_least_squares, FitError, LinearFit};
use crate::forward::{psi_tail, ForwardError, ModalTail, Segment, SourceSpec};
use crate::quadrature::GaussLegendre;
use crate::special::rgamma;
use crate::spectral::{
    observe, pairing_bounds, pairing_coefficients, EigenSystem, ObservationSpec, SpatialProfile, SpectralError,
};

/// Largest accepted condition number of a fitting dictionary.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Smallest accepted ratio of consecutive eigenvalues for modal recovery.
pub const NEAR_DEGENERATE_RATIO: f64 = 1.01;

/// Rounding allowance of each sample, in units of `ε·|g_i|`.
const ROUNDING_FLOOR: f64 = 64.0;

/// Decades of data the fits require.
pub const MIN_DECADES: f64 = 2.0;

/// Pairings below this fraction of their Cauchy–Schwarz bound count as zero.
const BLIND_PAIRING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InverseError {
    #[error("all source moments vanish; the tail carries no spectral information")]
    DegenerateMoments,
    #[error("dictionary condition number {condition:.3e} exceeds {limit:.0e}")]
    IllConditioned { condition: f64, limit: f64 },
    #[error("data span {decades:.2} decades, need {needed}")]
    InsufficientSpan { decades: f64, needed: f64 },
    #[error("{terms} spectral sums cannot resolve {modes} modes")]
    InsufficientLadder { terms: usize, modes: usize },
    #[error("eigenvalues {n} and {next} are too close (ratio {ratio:.6})", next = n + 1)]
    NearDegenerateSpectrum { n: usize, ratio: f64 },
    #[error("the observation does not see any mode of the profile difference")]
    IndistinguishableAtScale,
    #[error("invalid tail data: {0}")]
    InvalidData(&'static str),
    #[error("order {0} is not supported here")]
    UnsupportedOrder(f64),
    #[error("time {t} must exceed {min}")]
    TimeTooSmall { t: f64, min: f64 },
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Samples `g(t_i)` of an observed tail with a declared additive noise bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TailData {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub noise_level: f64,
}

impl TailData {
    pub fn new(times: Vec<f64>, values: Vec<f64>, noise_level: f64) -> Result<Self, InverseError> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(InverseError::InvalidData("times and values must have equal length of at least two"));
        }
        if !(times[0] > 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(InverseError::InvalidData("times must be positive and strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) || !(noise_level >= 0.0) {
            return Err(InverseError::InvalidData("values must be finite and the noise level non-negative"));
        }
        Ok(Self { times, values, noise_level })
    }

    /// `g = Σ_n a_n ψ_n` from per-mode tails on a common grid.
    pub fn from_modes(tails: &[ModalTail], pairings: &[f64], noise_level: f64) -> Result<Self, InverseError> {
        let first = tails.first().ok_or(InverseError::InvalidData("no modal tails"))?;
        if tails.iter().any(|t| t.times != first.times) {
            return Err(InverseError::InvalidData("modal tails use different time grids"));
        }
        let values = (0..first.times.len())
            .map(|i| {
                let c: Vec<f64> = tails.iter().map(|t| t.values[i]).collect();
                observe(&c, pairings)
            })
            .collect();
        Self::new(first.times.clone(), values, noise_level)
    }

    pub fn decades(&self) -> f64 {
        (self.times[self.times.len() - 1] / self.times[0]).log10()
    }

    /// Same data multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
            noise_level: self.noise_level * k.abs(),
        }
    }

    /// Per-sample error that noise and relative rounding can produce.
    fn sample_floors(&self) -> Vec<f64> {
        self.values.iter().map(|v| self.noise_level + ROUNDING_FLOOR * f64::EPSILON * v.abs()).collect()
    }
}

/// How the spectral sums are read off the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionMode {
    /// Divide by the leading structure, average over the top decade,
    /// subtract and repeat.
    Sequential,
    /// Joint weighted least squares on the structured dictionary.
    LeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// A posteriori uncertainty of the value.
    pub residual: f64,
    /// Magnitude that noise and rounding alone could produce.
    pub noise_floor: f64,
}

impl Estimate {
    /// The value is indistinguishable from zero: within its noise floor or
    /// its fit uncertainty.
    pub fn at_floor(&self) -> bool {
        self.value.abs() <= self.noise_floor.max(self.residual)
    }
}

/// Estimated `A_k` with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub mode: ExtractionMode,
    pub estimates: Vec<Estimate>,
    pub m1: usize,
    /// Condition number of the scaled dictionary (1 for sequential mode).
    pub condition: f64,
    /// Pairs `((k, m), (k', m'))` with coinciding exponents `e_k + m`.
    pub collisions: Vec<((usize, usize), (usize, usize))>,
}

impl Extraction {
    pub fn values(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.value).collect()
    }
}

fn exponent_collisions(ladder: &ExponentLadder, k: usize, max_order: usize) -> Vec<((usize, usize), (usize, usize))> {
    let mut grid = Vec::new();
    for i in 0..k {
        for m in 0..=max_order {
            grid.push(((i, m), ladder.exponent(i) + m as f64));
        }
    }
    let mut out = Vec::new();
    for (a, (p, e)) in grid.iter().enumerate() {
        for (q, f) in &grid[a + 1..] {
            if p.0 != q.0 && (e - f).abs() <= 1e-9 {
                out.push((*p, *q));
            }
        }
    }
    out
}

/// Reads `A_1..A_K` off tail data `g(t) ≈ Σ_k A_k D_k(t)`.
pub fn extract_spectral_sums(
    data: &TailData,
    ladder: &ExponentLadder,
    moments: &MomentVector,
    k: usize,
    max_order: usize,
    mode: ExtractionMode,
) -> Result<Extraction, InverseError> {
    let m1 = moments.m1.ok_or(InverseError::DegenerateMoments)?;
    if k == 0 || k > ladder.len() {
        return Err(AsymptoticsError::NotEnoughTerms { requested: k, available: ladder.len() }.into());
    }
    let max_order = max_order.min(moments.max_order());
    let span = data.decades();
    if span < MIN_DECADES {
        return Err(InverseError::InsufficientSpan { decades: span, needed: MIN_DECADES });
    }
    let min_t = moments.t0 * 2.0;
    if data.times[0] <= min_t {
        return Err(InverseError::TimeTooSmall { t: data.times[0], min: min_t });
    }
    let collisions = exponent_collisions(ladder, k, max_order);
    let columns: Vec<Vec<f64>> =
        data.times.iter().map(|&t| (0..k).map(|i| tail_basis(ladder, moments, i, max_order, t)).collect()).collect();
    let floors = data.sample_floors();
    match mode {
        ExtractionMode::LeastSquares => {
            let lead = ladder.exponent(0) + m1 as f64;
            let weights: Vec<f64> = data.times.iter().map(|t| t.powf(lead)).collect();
            let ls = weighted_least_squares(&columns, &data.values, &weights)?;
            if ls.condition > ILL_CONDITIONED {
                return Err(InverseError::IllConditioned { condition: ls.condition, limit: ILL_CONDITIONED });
            }
            let residuals: Vec<f64> = columns
                .iter()
                .zip(&data.values)
                .map(|(row, g)| g - row.iter().zip(&ls.coefficients).map(|(d, a)| d * a).sum::<f64>())
                .collect();
            let estimates = ls
                .coefficients
                .iter()
                .zip(&ls.pinv)
                .map(|(&value, p)| {
                    let residual = p.iter().zip(&residuals).map(|(p, r)| (p * r).abs()).sum();
                    let noise_floor = p.iter().zip(&floors).map(|(p, f)| (p * f).abs()).sum();
                    Estimate { value, residual, noise_floor }
                })
                .collect();
            Ok(Extraction { mode, estimates, m1, condition: ls.condition, collisions })
        }
        ExtractionMode::Sequential => {
            let top = data.times[data.times.len() - 1] / 10.0;
            let idx: Vec<usize> = (0..data.times.len()).filter(|&i| data.times[i] >= top).collect();
            let mut remaining = data.values.clone();
            let mut estimates = Vec::with_capacity(k);
            for i in 0..k {
                let ratios: Vec<f64> = idx.iter().map(|&j| remaining[j] / columns[j][i]).collect();
                let value = ratios.iter().sum::<f64>() / ratios.len() as f64;
                let (lo, hi) =
                    ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &r| (l.min(r), h.max(r)));
                let noise_floor = idx.iter().map(|&j| floors[j] / columns[j][i].abs()).sum::<f64>() / idx.len() as f64;
                estimates.push(Estimate { value, residual: 0.5 * (hi - lo), noise_floor });
                for (r, row) in remaining.iter_mut().zip(&columns) {
                    *r -= value * row[i];
                }
            }
            Ok(Extraction { mode, estimates, m1, condition: 1.0, collisions })
        }
    }
}

/// True when the two extractions agree on `A_1` within ten times the larger
/// of their residuals.
pub fn extractions_agree(a: &Extraction, b: &Extraction) -> bool {
    let (x, y) = (&a.estimates[0], &b.estimates[0]);
    let tol = 10.0 * x.residual.max(y.residual).max(x.noise_floor).max(y.noise_floor);
    (x.value - y.value).abs() <= tol
}

/// Amplitudes `a_n` recovered from spectral sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalRecovery {
    /// Solution of `Σ_n λ_n^{−ℓ_k} a_n = A_k`.
    pub amplitudes: Vec<f64>,
    /// Propagated uncertainty of each amplitude.
    pub errors: Vec<f64>,
    /// Estimates by successive deflation from the highest ladder power.
    pub deflation: Vec<f64>,
    /// Geometric error bound of the deflation estimates.
    pub deflation_bounds: Vec<f64>,
    pub condition: f64,
}

/// Solves the scaled Vandermonde system `V_{kn} = (λ_1/λ_n)^{ℓ_k}` for the
/// first `modes` amplitudes, weighting each equation by the inverse
/// uncertainty of its spectral sum.
pub fn recover_modal_amplitudes(
    sums: &[Estimate],
    ladder: &ExponentLadder,
    eigenvalues: &[f64],
    modes: usize,
) -> Result<ModalRecovery, InverseError> {
    let k = sums.len().min(ladder.len());
    if modes == 0 || k < modes {
        return Err(InverseError::InsufficientLadder { terms: k, modes });
    }
    if eigenvalues.len() < modes {
        return Err(InverseError::InvalidData("fewer eigenvalues than requested modes"));
    }
    let lambdas = &eigenvalues[..modes];
    for (n, w) in lambdas.windows(2).enumerate() {
        let ratio = w[1] / w[0];
        if !(ratio >= NEAR_DEGENERATE_RATIO) {
            return Err(InverseError::NearDegenerateSpectrum { n, ratio });
        }
    }
    let l1 = lambdas[0];
    let ells: Vec<i32> = ladder.ells()[..k].iter().map(|&l| l as i32).collect();
    // scaled sums A'_k = λ_1^{ℓ_k} A_k
    let scaled: Vec<(f64, f64)> = sums[..k]
        .iter()
        .zip(&ells)
        .map(|(s, &l)| (s.value * l1.powi(l), s.residual.max(s.noise_floor) * l1.powi(l)))
        .collect();
    let design: Vec<Vec<f64>> = ells.iter().map(|&l| lambdas.iter().map(|lam| (l1 / lam).powi(l)).collect()).collect();
    let rhs: Vec<f64> = scaled.iter().map(|s| s.0).collect();
    let typical = match rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs())) {
        0.0 => 1.0,
        v => v,
    };
    let weights: Vec<f64> = scaled.iter().map(|s| 1.0 / s.1.max(f64::EPSILON * typical)).collect();
    let ls = weighted_least_squares(&design, &rhs, &weights)?;
    let errors = ls.pinv.iter().map(|p| p.iter().zip(&scaled).map(|(p, s)| (p * s.1).abs()).sum()).collect();

    // deflation: each mode is read off the unused row with the smallest bound
    // after subtracting the modes below it
    let mut residual_sums: Vec<f64> = sums[..k].iter().map(|s| s.value).collect();
    let mut uncertainty: Vec<f64> = sums[..k].iter().map(|s| s.residual.max(s.noise_floor)).collect();
    let mut used = vec![false; k];
    let mut deflation = Vec::with_capacity(modes);
    let mut deflation_bounds = Vec::with_capacity(modes);
    for n in 0..modes {
        let rest: f64 = ls.coefficients[n + 1..].iter().map(|v| v.abs()).sum();
        let ratio = lambdas.get(n + 1).map_or(0.0, |next| lambdas[n] / next);
        let bound_at = |row: usize| rest * ratio.powi(ells[row]) + uncertainty[row] * lambdas[n].powi(ells[row]);
        let row = (0..k)
            .filter(|&r| !used[r])
            .min_by(|&x, &y| bound_at(x).total_cmp(&bound_at(y)))
            .expect("k >= modes leaves an unused row");
        used[row] = true;
        let a = residual_sums[row] * lambdas[n].powi(ells[row]);
        let bound = bound_at(row);
        for ((r, u), &l) in residual_sums.iter_mut().zip(uncertainty.iter_mut()).zip(&ells) {
            *r -= a * lambdas[n].powi(-l);
            *u += bound * lambdas[n].powi(-l);
        }
        deflation.push(a);
        deflation_bounds.push(bound);
    }
    Ok(ModalRecovery { amplitudes: ls.coefficients, errors, deflation, deflation_bounds, condition: ls.condition })
}

/// Constant and source moments recovered from `v(t) = a + J^α μ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarRecovery {
    pub constant: Estimate,
    /// Estimates of `μ_0, …, μ_M`.
    pub moments: Vec<Estimate>,
    /// First moment above its noise floor.
    pub first_active: Option<usize>,
    /// Constant and all moments at the floor: the data decay faster than
    /// any power.
    pub vanishing: bool,
    pub condition: f64,
}

/// Fits `v(t) ≈ a + Σ_{m≤M} binom(α−1, m) μ_m t^{−(1−α+m)} / Γ(α)`.
pub fn scalar_moment_recovery(
    data: &TailData,
    alpha: f64,
    t0: f64,
    max_order: usize,
) -> Result<ScalarRecovery, InverseError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(InverseError::UnsupportedOrder(alpha));
    }
    let span = data.decades();
    if span < MIN_DECADES {
        return Err(InverseError::InsufficientSpan { decades: span, needed: MIN_DECADES });
    }
    if data.times[0] <= 2.0 * t0 {
        return Err(InverseError::TimeTooSmall { t: data.times[0], min: 2.0 * t0 });
    }
    let rg = rgamma(alpha);
    let design: Vec<Vec<f64>> = data
        .times
        .iter()
        .map(|&t| {
            std::iter::once(1.0)
                .chain((0..=max_order).map(|m| gen_binomial(alpha - 1.0, m) * rg * t.powf(-(1.0 - alpha + m as f64))))
                .collect()
        })
        .collect();
    // relative residuals: rounding in v is relative
    let weights: Vec<f64> =
        data.values.iter().map(|v| 1.0 / (v.abs() + data.noise_level).max(f64::MIN_POSITIVE)).collect();
    let ls = weighted_least_squares(&design, &data.values, &weights)?;
    if ls.condition > ILL_CONDITIONED {
        return Err(InverseError::IllConditioned { condition: ls.condition, limit: ILL_CONDITIONED });
    }
    let floors = data.sample_floors();
    let residuals: Vec<f64> = design
        .iter()
        .zip(&data.values)
        .map(|(row, v)| v - row.iter().zip(&ls.coefficients).map(|(d, c)| d * c).sum::<f64>())
        .collect();
    let mut estimates: Vec<Estimate> = ls
        .coefficients
        .iter()
        .zip(&ls.pinv)
        .map(|(&value, p)| Estimate {
            value,
            residual: p.iter().zip(&residuals).map(|(p, r)| (p * r).abs()).sum(),
            noise_floor: p.iter().zip(&floors).map(|(p, f)| (p * f).abs()).sum::<f64>(),
        })
        .collect();
    let constant = estimates.remove(0);
    let first_active = estimates.iter().position(|e| !e.at_floor());
    let vanishing = constant.at_floor() && first_active.is_none();
    Ok(ScalarRecovery { constant, moments: estimates, first_active, vanishing, condition: ls.condition })
}

/// Settings shared by the tail experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct TailExperiment {
    pub alpha: f64,
    pub times: Vec<f64>,
    /// Ladder terms `K` and moment order `M` of the extraction.
    pub ladder_terms: usize,
    pub moment_order: usize,
    /// Amplitudes recovered from the gap.
    pub recover_modes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    /// Pairings of `f1 − f2` with the observation.
    pub pairings: Vec<f64>,
    pub gap: Vec<f64>,
    /// Log-log fit of `|g1 − g2|` where it is above rounding.
    pub fit: Option<LinearFit>,
    /// Decay exponent predicted by the tail model of the difference.
    pub expected_exponent: Option<f64>,
    /// The gap is at rounding level everywhere.
    pub at_floor: bool,
    /// Amplitudes recovered from the gap.
    pub recovered: Vec<f64>,
    pub recovery_errors: Vec<f64>,
}

impl UniquenessReport {
    pub fn decay_exponent(&self) -> Option<f64> {
        self.fit.map(|f| -f.slope)
    }
}

/// Compares the observed tails of two spatial profiles sharing `source`.
pub fn uniqueness_experiment(
    f1: &SpatialProfile,
    f2: &SpatialProfile,
    source: &SourceSpec,
    system: &EigenSystem,
    observation: &ObservationSpec,
    setup: &TailExperiment,
) -> Result<UniquenessReport, InverseError> {
    let a1 = pairing_coefficients(f1, system, observation)?;
    let a2 = pairing_coefficients(f2, system, observation)?;
    let diff = f1.difference(f2);
    let pairings: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| x - y).collect();
    let bounds = pairing_bounds(&diff, system, observation)?;
    let scale = bounds.iter().fold(0.0_f64, |m, v| m.max(*v));
    let blind = pairings.iter().all(|p| p.abs() <= BLIND_PAIRING * scale);
    if !diff.is_zero() && blind {
        return Err(InverseError::IndistinguishableAtScale);
    }
    let tails = system
        .eigenvalues()
        .iter()
        .map(|&l| psi_tail(l, setup.alpha, source, &setup.times))
        .collect::<Result<Vec<_>, _>>()?;
    let g1 = TailData::from_modes(&tails, &a1, 0.0)?;
    let g2 = TailData::from_modes(&tails, &a2, 0.0)?;
    let gap: Vec<f64> = g1.values.iter().zip(&g2.values).map(|(x, y)| x - y).collect();
    let (ts, gs): (Vec<f64>, Vec<f64>) = setup
        .times
        .iter()
        .zip(&gap)
        .zip(g1.values.iter().zip(&g2.values))
        .filter(|((_, d), (x, y))| d.abs() > GAP_FLOOR * f64::EPSILON * x.abs().max(y.abs()))
        .map(|((t, d), _)| (*t, *d))
        .unzip();
    let at_floor = ts.len() < 3;
    let mut report = UniquenessReport {
        pairings: pairings.clone(),
        gap: gap.clone(),
        fit: None,
        expected_exponent: None,
        at_floor,
        recovered: Vec::new(),
        recovery_errors: Vec::new(),
    };
    if at_floor {
        return Ok(report);
    }
    report.fit = Some(log_log_fit(&ts, &gs)?);
    let ladder = ExponentLadder::new(setup.alpha, setup.ladder_terms.max(1))?;
    let mv = moments(source, setup.moment_order);
    let m1 = mv.m1.ok_or(InverseError::DegenerateMoments)?;
    let model =
        build_tail_model(&pairings, system, &ladder, &mv, ladder.len(), setup.moment_order.min(mv.max_order()))?;
    let biggest = model.spectral_sums.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    report.expected_exponent =
        model.spectral_sums.iter().position(|a| a.abs() > 1e-12 * biggest).map(|k| ladder.exponent(k) + m1 as f64);
    if setup.recover_modes > 0 {
        let data = TailData::new(setup.times.clone(), gap, 0.0)?;
        let ex =
            extract_spectral_sums(&data, &ladder, &mv, ladder.len(), setup.moment_order, ExtractionMode::LeastSquares)?;
        let rec = recover_modal_amplitudes(&ex.estimates, &ladder, system.eigenvalues(), setup.recover_modes)?;
        report.recovered = rec.amplitudes;
        report.recovery_errors = rec.errors;
    }
    Ok(report)
}

/// Per-mode comparison of the heat tail with a fractional one.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMode {
    pub lambda: f64,
    /// `∫_0^{t₀} e^{−λ(t₀−s)} μ(s) ds`, the exponential moment scaled by
    /// `e^{−λt₀}` to stay finite.
    pub exponential_moment: f64,
    /// `∫_0^{t₀} e^{−λ(t₀−s)} |μ(s)| ds`, its rounding scale.
    pub exponential_moment_scale: f64,
    pub heat_tail: Vec<f64>,
    /// Fit of `ln|ψ|` against `t`.
    pub heat_fit: Option<LinearFit>,
    pub fractional_tail: Vec<f64>,
    /// Fit of `ln|ψ|` against `ln t`.
    pub fractional_fit: Option<LinearFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastReport {
    pub alpha: f64,
    pub times: Vec<f64>,
    pub modes: Vec<ContrastMode>,
}

fn exponential_moment(source: &SourceSpec, lambda: f64, abs: bool) -> f64 {
    let gl = GaussLegendre::new(64);
    let t0 = source.t0();
    source
        .segments()
        .iter()
        .map(|seg| {
            // panels of width ≲ 1/λ keep the exponential resolved
            let panels = ((seg.end - seg.start) * lambda).ceil().clamp(1.0, 4096.0) as usize;
            let h = (seg.end - seg.start) / panels as f64;
            (0..panels)
                .map(|p| {
                    let a = seg.start + p as f64 * h;
                    gl.integrate(a, a + h, |s| {
                        let v = seg.eval(s);
                        (-lambda * (t0 - s)).exp() * if abs { v.abs() } else { v }
                    })
                })
                .sum::<f64>()
        })
        .sum()
}

/// Heat tails `ψ_n(t) = e^{−λ_n t} ∫ e^{λ_n s} μ(s) ds` against the
/// fractional tails of order `alpha` for the first `modes` modes.
pub fn heat_contrast_experiment(
    system: &EigenSystem,
    source: &SourceSpec,
    modes: usize,
    times: &[f64],
    alpha: f64,
) -> Result<ContrastReport, InverseError> {
    let t0 = source.t0();
    let modes = modes.min(system.len());
    let mut out = Vec::with_capacity(modes);
    for &lambda in &system.eigenvalues()[..modes] {
        let moment = exponential_moment(source, lambda, false);
        let scale = exponential_moment(source, lambda, true);
        let heat_tail: Vec<f64> = times.iter().map(|&t| (-lambda * (t - t0)).exp() * moment).collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = times
            .iter()
            .zip(&heat_tail)
            .filter(|(_, v)| v.abs() >= f64::MIN_POSITIVE)
            .map(|(t, v)| (*t, v.abs().ln()))
            .unzip();
        let heat_fit = linear_fit(&xs, &ys).ok();
        let fractional_tail = psi_tail(lambda, alpha, source, times)?.values;
        let fractional_fit = log_log_fit(times, &fractional_tail).ok();
        out.push(ContrastMode {
            lambda,
            exponential_moment: moment,
            exponential_moment_scale: scale,
            heat_tail,
            heat_fit,
            fractional_tail,
            fractional_fit,
        });
    }
    Ok(ContrastReport { alpha, times: times.to_vec(), modes: out })
}

/// Two-level source, `1` on `[0, split)` and `w` on `[split, t₀]`, with `w`
/// chosen so that `∫ e^{λs} μ(s) ds = 0`.
pub fn vanishing_exponential_moment_source(
    lambda: f64,
    t0: f64,
    split: f64,
    profile: SpatialProfile,
) -> Result<SourceSpec, InverseError> {
    if !(split > 0.0 && split < t0) {
        return Err(InverseError::InvalidData("split must lie inside the support"));
    }
    let part = |a: f64, b: f64| {
        let src = SourceSpec::piecewise(vec![Segment::new(a, b, vec![1.0])], t0, SpatialProfile::zero(1))?;
        Ok::<f64, ForwardError>(exponential_moment(&src, lambda, false))
    };
    let w = -part(0.0, split)? / part(split, t0)?;
    Ok(SourceSpec::piecewise(vec![Segment::new(0.0, split, vec![1.0]), Segment::new(split, t0, vec![w])], t0, profile)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::laplacian_1d_dirichlet;

    #[test]
    fn modal_recovery_from_exact_sums() {
        let pi2 = std::f64::consts::PI.powi(2);
        let lambdas = [pi2, 4.0 * pi2];
        let ladder = ExponentLadder::new(0.7, 6).unwrap();
        let sums: Vec<Estimate> = ladder
            .ells()
            .iter()
            .map(|&l| {
                let v = lambdas[0].powi(-(l as i32)) + 0.5 * lambdas[1].powi(-(l as i32));
                Estimate { value: v, residual: 0.0, noise_floor: 0.0 }
            })
            .collect();
        let rec = recover_modal_amplitudes(&sums, &ladder, &lambdas, 2).unwrap();
        assert!((rec.amplitudes[0] - 1.0).abs() < 1e-8);
        assert!((rec.amplitudes[1] - 0.5).abs() < 1e-8);
        assert!((rec.deflation[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn single_mode_sums_are_consistent() {
        let lambda = 3.7_f64;
        let ladder = ExponentLadder::new(0.6, 4).unwrap();
        for (k, &l) in ladder.ells().iter().enumerate() {
            let a = 2.5 * lambda.powi(-(l as i32));
            assert!((a * lambda.powi(l as i32) - 2.5).abs() < 1e-12, "k={k}");
        }
        let sums: Vec<Estimate> = ladder
            .ells()
            .iter()
            .map(|&l| Estimate { value: 2.5 * lambda.powi(-(l as i32)), residual: 0.0, noise_floor: 0.0 })
            .collect();
        let rec = recover_modal_amplitudes(&sums, &ladder, &[lambda], 1).unwrap();
        assert!((rec.amplitudes[0] - 2.5).abs() < 1e-12);
        assert!((rec.deflation[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn recovery_errors() {
        let ladder = ExponentLadder::new(0.7, 2).unwrap();
        let sums = vec![Estimate { value: 1.0, residual: 0.0, noise_floor: 0.0 }; 2];
        assert!(matches!(
            recover_modal_amplitudes(&sums, &ladder, &[1.0, 2.0, 3.0], 3),
            Err(InverseError::InsufficientLadder { .. })
        ));
        assert!(matches!(
            recover_modal_amplitudes(&sums, &ladder, &[1.0, 1.005], 2),
            Err(InverseError::NearDegenerateSpectrum { .. })
        ));
        let zero = vec![Estimate { value: 0.0, residual: 0.0, noise_floor: 0.0 }; 2];
        let rec = recover_modal_amplitudes(&zero, &ladder, &[1.0, 4.0], 2).unwrap();
        assert!(rec.amplitudes.iter().all(|a| *a == 0.0));
    }

    #[test]
    fn engineered_source_kills_the_exponential_moment() {
        let lambda = std::f64::consts::PI.powi(2);
        let src = vanishing_exponential_moment_source(lambda, 1.0, 0.5, SpatialProfile::zero(1)).unwrap();
        let m = exponential_moment(&src, lambda, false);
        let scale = exponential_moment(&src, lambda, true);
        assert!(m.abs() < 1e-14 * scale);
    }

    #[test]
    fn degenerate_moments_are_rejected() {
        let system = laplacian_1d_dirichlet(1.0, 1).unwrap();
        let ladder = ExponentLadder::new(0.7, 2).unwrap();
        let zero = SourceSpec::constant(0.0, 1.0, SpatialProfile::zero(1)).unwrap();
        let mv = moments(&zero, 2);
        let times: Vec<f64> = (0..30).map(|i| 100.0 * 10f64.powf(i as f64 / 10.0)).collect();
        let data = TailData::new(times, vec![0.0; 30], 0.0).unwrap();
        assert!(matches!(
            extract_spectral_sums(&data, &ladder, &mv, 2, 2, ExtractionMode::LeastSquares),
            Err(InverseError::DegenerateMoments)
        ));
        assert!(system.len() == 1);
    }
}

//! Eigen-decompositions of one-dimensional elliptic operators
//! `Av = −(a v′)′ − c v` with Dirichlet ends, and the quantities built on them:
//! modal projections, fractional-power norms, observation pairings and the
//! summability and eigenvalue-growth diagnostics.
//!
//! Mode indices are zero-based: `eigenvalues()[0]` is `λ_1`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::fit::{linear_fit, LinearFit};
use crate::quadrature::simpson;

/// Uniform grid size used for inner products of the analytic backend.
pub const DEFAULT_GRID_POINTS: usize = 4097;
pub const DEFAULT_MODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("domain length must be positive, got {0}")]
    InvalidLength(f64),
    #[error("at least one mode is required")]
    NoModes,
    #[error("coefficients violate a >= {kappa_min}, c <= 0 at x={x} (a={a}, c={c})")]
    InvalidCoefficients { x: f64, a: f64, c: f64, kappa_min: f64 },
    #[error("{requested} modes requested from a grid with {interior} interior points")]
    TooManyModes { requested: usize, interior: usize },
    #[error("expected {expected} samples, got {got}")]
    SampleMismatch { expected: usize, got: usize },
    #[error("observation region [{lo}, {hi}] is not inside the domain [0, {length}]")]
    RegionMismatch { lo: f64, hi: f64, length: f64 },
    #[error("need at least {needed} modes, got {got}")]
    TooFewModes { needed: usize, got: usize },
    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Backend {
    /// `λ_n = (nπ/L)²`, `φ_n = √(2/L) sin(nπx/L)`, inner products by Simpson
    /// on `grid_points` nodes.
    Laplacian { grid_points: usize },
    /// Finite differences; eigenvectors on the nodes `x_i = i h`, `i = 0..=M+1`,
    /// normalized in the discrete product `h Σ v_i w_i`.
    Discrete { vectors: Vec<Vec<f64>>, a_left: f64, a_right: f64 },
}

/// Eigenpairs `(λ_n, φ_n)` of the operator, increasing in `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    dimension: usize,
    length: f64,
    eigenvalues: Vec<f64>,
    multiplicities: Vec<usize>,
    backend: Backend,
}

/// Boundary point of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

impl EigenSystem {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.backend, Backend::Laplacian { .. })
    }

    /// Nodes on which samples passed to [`EigenSystem::project`] live.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_len();
        let h = self.grid_step();
        (0..n).map(|i| i as f64 * h).collect()
    }

    fn grid_len(&self) -> usize {
        match &self.backend {
            Backend::Laplacian { grid_points } => *grid_points,
            Backend::Discrete { vectors, .. } => vectors[0].len(),
        }
    }

    fn grid_step(&self) -> f64 {
        self.length / (self.grid_len() - 1) as f64
    }

    fn check_mode(&self, n: usize) -> Result<(), SpectralError> {
        if n >= self.len() {
            return Err(SpectralError::ModeOutOfRange { index: n, modes: self.len() });
        }
        Ok(())
    }

    /// `φ_n(x)`; linear interpolation between nodes for the discrete backend.
    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<f64, SpectralError> {
        self.check_mode(n)?;
        Ok(self.eigenfunction_unchecked(n, x))
    }

    fn eigenfunction_unchecked(&self, n: usize, x: f64) -> f64 {
        match &self.backend {
            Backend::Laplacian { .. } => {
                let k = (n + 1) as f64;
                (2.0 / self.length).sqrt() * crate::special::sinpi(k * x / self.length)
            }
            Backend::Discrete { vectors, .. } => {
                let v = &vectors[n];
                let h = self.grid_step();
                let s = (x / h).clamp(0.0, (v.len() - 1) as f64);
                let i = (s.floor() as usize).min(v.len() - 2);
                let w = s - i as f64;
                (1.0 - w) * v[i] + w * v[i + 1]
            }
        }
    }

    /// `φ_n` sampled on [`EigenSystem::grid`].
    pub fn eigenfunction_on_grid(&self, n: usize) -> Result<Vec<f64>, SpectralError> {
        self.check_mode(n)?;
        Ok(match &self.backend {
            Backend::Discrete { vectors, .. } => vectors[n].clone(),
            Backend::Laplacian { .. } => self.grid().iter().map(|&x| self.eigenfunction_unchecked(n, x)).collect(),
        })
    }

    /// Outward conormal derivative `a ∂_ν φ_n` at an endpoint.
    pub fn flux(&self, n: usize, end: Endpoint) -> Result<f64, SpectralError> {
        self.check_mode(n)?;
        let sign = match end {
            Endpoint::Left => -1.0,
            Endpoint::Right => 1.0,
        };
        Ok(match &self.backend {
            Backend::Laplacian { .. } => {
                let k = (n + 1) as f64 * PI / self.length;
                let x = match end {
                    Endpoint::Left => 0.0,
                    Endpoint::Right => self.length,
                };
                sign * (2.0 / self.length).sqrt() * k * crate::special::cospi((n + 1) as f64 * x / self.length)
            }
            Backend::Discrete { vectors, a_left, a_right } => {
                let v = &vectors[n];
                let h = self.grid_step();
                let m = v.len() - 1;
                match end {
                    Endpoint::Left => -a_left * (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
                    Endpoint::Right => a_right * (3.0 * v[m] - 4.0 * v[m - 1] + v[m - 2]) / (2.0 * h),
                }
            }
        })
    }

    /// `∫ w v` for two sample vectors on the system grid.
    pub fn inner(&self, w: &[f64], v: &[f64]) -> Result<f64, SpectralError> {
        let n = self.grid_len();
        for s in [w, v] {
            if s.len() != n {
                return Err(SpectralError::SampleMismatch { expected: n, got: s.len() });
            }
        }
        let prod: Vec<f64> = w.iter().zip(v).map(|(a, b)| a * b).collect();
        let h = self.grid_step();
        Ok(match self.backend {
            Backend::Laplacian { .. } => simpson(&prod, h),
            // trapezoid: the product in which the eigenvectors are orthonormal
            Backend::Discrete { .. } => h * (prod.iter().sum::<f64>() - 0.5 * (prod[0] + prod[n - 1])),
        })
    }

    /// Modal coefficients `(f, φ_n)` of every retained mode.
    pub fn project(&self, f_samples: &[f64]) -> Result<Vec<f64>, SpectralError> {
        (0..self.len()).map(|n| project(f_samples, self, n)).collect()
    }

    /// Samples of `Σ_n c_n φ_n` on the system grid.
    pub fn reconstruct(&self, coefficients: &[f64]) -> Result<Vec<f64>, SpectralError> {
        if coefficients.len() > self.len() {
            return Err(SpectralError::SampleMismatch { expected: self.len(), got: coefficients.len() });
        }
        let mut out = vec![0.0; self.grid_len()];
        for (n, &c) in coefficients.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.eigenfunction_on_grid(n)?) {
                *o += c * p;
            }
        }
        Ok(out)
    }
}

/// Analytic eigenpairs of `−d²/dx²` on `(0, L)` with Dirichlet ends.
pub fn laplacian_1d_dirichlet(length: f64, modes: usize) -> Result<EigenSystem, SpectralError> {
    laplacian_1d_dirichlet_with_grid(length, modes, DEFAULT_GRID_POINTS)
}

pub fn laplacian_1d_dirichlet_with_grid(
    length: f64,
    modes: usize,
    grid_points: usize,
) -> Result<EigenSystem, SpectralError> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(SpectralError::InvalidLength(length));
    }
    if modes == 0 {
        return Err(SpectralError::NoModes);
    }
    let grid_points = grid_points.max(3) | 1;
    let eigenvalues = (1..=modes).map(|n| (n as f64 * PI / length).powi(2)).collect();
    Ok(EigenSystem {
        dimension: 1,
        length,
        eigenvalues,
        multiplicities: vec![1; modes],
        backend: Backend::Laplacian { grid_points },
    })
}

/// Finite-difference eigenpairs of `−(a v′)′ − c v` on `(0, L)`, Dirichlet,
/// with `interior` unknowns. Requires `a ≥ kappa_min > 0` and `c ≤ 0` on the
/// grid.
pub fn discretize_sturm_liouville<A, C>(
    a_coeff: A,
    c_coeff: C,
    length: f64,
    interior: usize,
    modes: usize,
    kappa_min: f64,
) -> Result<EigenSystem, SpectralError>
where
    A: Fn(f64) -> f64,
    C: Fn(f64) -> f64,
{
    if !(length > 0.0 && length.is_finite()) {
        return Err(SpectralError::InvalidLength(length));
    }
    if modes == 0 {
        return Err(SpectralError::NoModes);
    }
    if modes > interior {
        return Err(SpectralError::TooManyModes { requested: modes, interior });
    }
    let h = length / (interior + 1) as f64;
    let check = |x: f64| -> Result<(f64, f64), SpectralError> {
        let (a, c) = (a_coeff(x), c_coeff(x));
        if !(a >= kappa_min) || !(c <= 0.0) {
            return Err(SpectralError::InvalidCoefficients { x, a, c, kappa_min });
        }
        Ok((a, c))
    };
    // a at half nodes x_{i+1/2}, i = 0..=interior
    let a_half: Vec<f64> =
        (0..=interior).map(|i| check((i as f64 + 0.5) * h).map(|v| v.0)).collect::<Result<_, _>>()?;
    let mut diag = Vec::with_capacity(interior);
    for i in 1..=interior {
        let x = i as f64 * h;
        let (_, c) = check(x)?;
        diag.push((a_half[i - 1] + a_half[i]) / (h * h) - c);
    }
    let off: Vec<f64> = (1..interior).map(|i| -a_half[i] / (h * h)).collect();
    let (a_left, _) = check(0.0)?;
    let (a_right, _) = check(length)?;

    let tri = Tridiagonal { diag, off };
    let eigenvalues: Vec<f64> = (0..modes).map(|k| tri.kth_eigenvalue(k)).collect();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(modes);
    for &lambda in &eigenvalues {
        let mut v = tri.inverse_iteration(lambda);
        for prev in &vectors {
            let dot: f64 = v.iter().zip(&prev[1..=interior]).map(|(a, b)| a * b).sum::<f64>() * h;
            for (x, p) in v.iter_mut().zip(&prev[1..=interior]) {
                *x -= dot * p;
            }
        }
        let norm = (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
        // sign fixed by the slope at the left end
        let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
        let mut full = Vec::with_capacity(interior + 2);
        full.push(0.0);
        full.extend(v.iter().map(|x| sign * x / norm));
        full.push(0.0);
        vectors.push(full);
    }
    Ok(EigenSystem {
        dimension: 1,
        length,
        multiplicities: vec![1; modes],
        eigenvalues,
        backend: Backend::Discrete { vectors, a_left, a_right },
    })
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues below `x` (Sturm sequence of `T − xI`).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - x - if i == 0 { 0.0 } else { b2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + x.abs());
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// `k`-th smallest eigenvalue (zero-based) by bisection.
    fn kth_eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn inverse_iteration(&self, lambda: f64) -> Vec<f64> {
        let n = self.diag.len();
        let lu = ShiftedLu::new(self, lambda);
        // deterministic start with components in every eigenvector
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..3 {
            lu.solve(&mut v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// LU factors of `T − μI` with partial pivoting; a second superdiagonal
/// holds the fill-in from row interchanges.
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(t: &Tridiagonal, mu: f64) -> Self {
        let n = t.diag.len();
        let mut d: Vec<f64> = t.diag.iter().map(|x| x - mu).collect();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON * t.diag.iter().fold(f64::MIN_POSITIVE, |m, x| m.max(x.abs()));
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i] * b[i + 2];
            }
            b[i] = s / self.d[i];
        }
    }
}

/// Coefficients `f_n = (f, φ_n)` of a spatial factor and its declared
/// regularity `σ` (`Σ λ_n^{2σ} f_n² < ∞`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialProfile {
    pub modal_coefficients: Vec<f64>,
    pub regularity_sigma: f64,
}

impl SpatialProfile {
    pub fn new(modal_coefficients: Vec<f64>, regularity_sigma: f64) -> Self {
        Self { modal_coefficients, regularity_sigma }
    }

    /// The single mode `φ_{n}` (zero-based).
    pub fn single_mode(n: usize, modes: usize) -> Self {
        let mut c = vec![0.0; modes.max(n + 1)];
        c[n] = 1.0;
        Self::new(c, f64::INFINITY)
    }

    pub fn zero(modes: usize) -> Self {
        Self::new(vec![0.0; modes], f64::INFINITY)
    }

    pub fn from_samples(system: &EigenSystem, samples: &[f64], regularity_sigma: f64) -> Result<Self, SpectralError> {
        Ok(Self::new(system.project(samples)?, regularity_sigma))
    }

    pub fn coefficient(&self, n: usize) -> f64 {
        self.modal_coefficients.get(n).copied().unwrap_or(0.0)
    }

    pub fn difference(&self, other: &Self) -> Self {
        let n = self.modal_coefficients.len().max(other.modal_coefficients.len());
        let c = (0..n).map(|i| self.coefficient(i) - other.coefficient(i)).collect();
        Self::new(c, self.regularity_sigma.min(other.regularity_sigma))
    }

    pub fn is_zero(&self) -> bool {
        self.modal_coefficients.iter().all(|&c| c == 0.0)
    }
}

/// Coefficient `(f, φ_n)` of a sampled function.
pub fn project(f_samples: &[f64], system: &EigenSystem, n: usize) -> Result<f64, SpectralError> {
    let phi = system.eigenfunction_on_grid(n)?;
    system.inner(f_samples, &phi)
}

/// `(Σ λ_n^{2σ} f_n²)^{1/2}` over the retained modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerNorm {
    pub value: f64,
    /// Estimate of the omitted `Σ_{n>N} λ_n^{2σ} f_n²` from a power-law fit
    /// of the retained terms; infinite when they do not decay fast enough.
    pub truncation_tail: f64,
}

pub fn fractional_power_norm(profile: &SpatialProfile, system: &EigenSystem, sigma: f64) -> PowerNorm {
    let terms: Vec<f64> = profile
        .modal_coefficients
        .iter()
        .zip(system.eigenvalues())
        .map(|(&f, &l)| l.powf(2.0 * sigma) * f * f)
        .collect();
    let value = terms.iter().sum::<f64>().sqrt();
    let truncation_tail = power_law_tail(&terms);
    PowerNorm { value, truncation_tail }
}

/// Fits `|term_n| ≈ C n^{p}` on the last half of the non-zero terms and sums
/// the fitted law beyond the last index.
/// Infinite when the fitted decay is not summable.
pub fn power_law_tail(terms: &[f64]) -> f64 {
    tail_fit(terms).map_or(0.0, |(fit, n)| {
        let p = fit.slope;
        if p >= -1.0 {
            return f64::INFINITY;
        }
        // ∫_N^∞ C x^p dx
        fit.intercept.exp() * (n as f64).powf(p + 1.0) / (-(p + 1.0))
    })
}

fn tail_fit(terms: &[f64]) -> Option<(LinearFit, usize)> {
    let n = terms.len();
    let pts: Vec<(f64, f64)> =
        (n / 2..n).filter(|&i| terms[i] != 0.0).map(|i| (((i + 1) as f64).ln(), terms[i].abs().ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    linear_fit(&x, &y).ok().map(|f| (f, n))
}

/// What is measured: an interior average against a test function on a
/// subinterval, or a weighted sum of boundary fluxes.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationSpec {
    /// `(u, v)_{L²(ω)}` with `v` sampled uniformly on `ω = [lo, hi]`
    /// (an odd sample count gives Simpson accuracy).
    Interior { lo: f64, hi: f64, test_function: Vec<f64> },
    /// `Σ_j w_j (a ∂_ν u)(x_j)` over boundary points.
    Flux { endpoints: Vec<(Endpoint, f64)> },
}

impl ObservationSpec {
    /// Interior observation with `v` given as a closure.
    pub fn interior_fn(lo: f64, hi: f64, points: usize, v: impl Fn(f64) -> f64) -> Self {
        let points = points.max(3) | 1;
        let h = (hi - lo) / (points - 1) as f64;
        let test_function = (0..points).map(|i| v(lo + i as f64 * h)).collect();
        Self::Interior { lo, hi, test_function }
    }

    /// Interior observation against the eigenfunction `φ_n` of `system`.
    pub fn against_mode(system: &EigenSystem, n: usize, lo: f64, hi: f64) -> Result<Self, SpectralError> {
        system.check_mode(n)?;
        Ok(Self::interior_fn(lo, hi, DEFAULT_GRID_POINTS, |x| system.eigenfunction_unchecked(n, x)))
    }
}

/// Pairing coefficients `a_n` of a profile with an observation:
/// `f_n (φ_n, v)_ω` or `f_n Σ_j w_j a ∂_ν φ_n(x_j)`.
pub fn pairing_coefficients(
    profile: &SpatialProfile,
    system: &EigenSystem,
    spec: &ObservationSpec,
) -> Result<Vec<f64>, SpectralError> {
    let modes = system.len();
    match spec {
        ObservationSpec::Interior { lo, hi, test_function } => {
            if !(*lo >= 0.0 && *hi <= system.length && hi > lo) || test_function.len() < 2 {
                return Err(SpectralError::RegionMismatch { lo: *lo, hi: *hi, length: system.length });
            }
            let h = (hi - lo) / (test_function.len() - 1) as f64;
            (0..modes)
                .map(|n| {
                    let f = profile.coefficient(n);
                    if f == 0.0 {
                        return Ok(0.0);
                    }
                    let prod: Vec<f64> = test_function
                        .iter()
                        .enumerate()
                        .map(|(i, v)| v * system.eigenfunction_unchecked(n, lo + i as f64 * h))
                        .collect();
                    Ok(f * simpson(&prod, h))
                })
                .collect()
        }
        ObservationSpec::Flux { endpoints } => (0..modes)
            .map(|n| {
                let f = profile.coefficient(n);
                if f == 0.0 {
                    return Ok(0.0);
                }
                let mut s = 0.0;
                for &(end, w) in endpoints {
                    s += w * system.flux(n, end)?;
                }
                Ok(f * s)
            })
            .collect(),
    }
}

/// Cauchy–Schwarz bounds on the pairings: `|f_n| ‖φ_n‖_ω ‖v‖_ω` for interior
/// observations and `|f_n| Σ_j |w_j a ∂_ν φ_n(x_j)|` for fluxes.
pub fn pairing_bounds(
    profile: &SpatialProfile,
    system: &EigenSystem,
    spec: &ObservationSpec,
) -> Result<Vec<f64>, SpectralError> {
    let modes = system.len();
    match spec {
        ObservationSpec::Interior { lo, hi, test_function } => {
            if !(*lo >= 0.0 && *hi <= system.length && hi > lo) || test_function.len() < 2 {
                return Err(SpectralError::RegionMismatch { lo: *lo, hi: *hi, length: system.length });
            }
            let h = (hi - lo) / (test_function.len() - 1) as f64;
            let v_sq: Vec<f64> = test_function.iter().map(|v| v * v).collect();
            let v_norm = simpson(&v_sq, h).max(0.0).sqrt();
            Ok((0..modes)
                .map(|n| {
                    let f = profile.coefficient(n);
                    if f == 0.0 {
                        return 0.0;
                    }
                    let phi_sq: Vec<f64> = (0..test_function.len())
                        .map(|i| system.eigenfunction_unchecked(n, lo + i as f64 * h).powi(2))
                        .collect();
                    f.abs() * simpson(&phi_sq, h).max(0.0).sqrt() * v_norm
                })
                .collect())
        }
        ObservationSpec::Flux { endpoints } => (0..modes)
            .map(|n| {
                let f = profile.coefficient(n);
                if f == 0.0 {
                    return Ok(0.0);
                }
                let mut s = 0.0;
                for &(end, w) in endpoints {
                    s += (w * system.flux(n, end)?).abs();
                }
                Ok(f.abs() * s)
            })
            .collect(),
    }
}

/// `Σ_n c_n a_n` for modal time factors `c_n` and pairings `a_n`.
pub fn observe(modal_values: &[f64], pairings: &[f64]) -> f64 {
    modal_values.iter().zip(pairings).map(|(c, a)| c * a).sum()
}

/// Partial sums of `Σ|a_n/λ_n|` and a power-law fit of the terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport {
    pub partial_sums: Vec<f64>,
    /// Fitted `p` in `|a_n/λ_n| ≈ C n^p` on the last half of the modes
    /// (`−∞` when fewer than three of those terms are non-zero).
    pub tail_exponent: f64,
    /// Relative growth `(S_N − S_{N/2}) / S_N`.
    pub late_growth: f64,
    pub tail_estimate: f64,
    pub divergent: bool,
}

/// Exponent at or above which the terms are not summable.
pub const SUMMABILITY_EXPONENT_LIMIT: f64 = -1.05;
pub const SUMMABILITY_GROWTH_TOLERANCE: f64 = 0.1;

pub fn summability_report(pairings: &[f64], system: &EigenSystem) -> Result<SummabilityReport, SpectralError> {
    let n = pairings.len().min(system.len());
    if n < 10 {
        return Err(SpectralError::TooFewModes { needed: 10, got: n });
    }
    let terms: Vec<f64> = pairings.iter().zip(system.eigenvalues()).map(|(a, l)| (a / l).abs()).collect();
    let mut partial_sums = Vec::with_capacity(n);
    let mut acc = 0.0;
    for t in &terms {
        acc += t;
        partial_sums.push(acc);
    }
    let total = acc;
    let half = partial_sums[n / 2 - 1];
    let late_growth = if total > 0.0 { (total - half) / total } else { 0.0 };
    let tail_exponent = tail_fit(&terms).map_or(f64::NEG_INFINITY, |(f, _)| f.slope);
    let tail_estimate = power_law_tail(&terms);
    let divergent = tail_exponent >= SUMMABILITY_EXPONENT_LIMIT || late_growth > SUMMABILITY_GROWTH_TOLERANCE;
    Ok(SummabilityReport { partial_sums, tail_exponent, late_growth, tail_estimate, divergent })
}

/// `min_n λ_n / n^{2/d}`.
pub fn weyl_growth_check(system: &EigenSystem, d: usize) -> Result<f64, SpectralError> {
    if system.len() < 10 {
        return Err(SpectralError::TooFewModes { needed: 10, got: system.len() });
    }
    let e = 2.0 / d as f64;
    Ok(system.eigenvalues().iter().enumerate().map(|(i, l)| l / ((i + 1) as f64).powf(e)).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_eigenvalues() {
        let s = laplacian_1d_dirichlet(1.0, 3).unwrap();
        let pi2 = PI * PI;
        for (l, k) in s.eigenvalues().iter().zip([1.0, 4.0, 9.0]) {
            assert!((l - k * pi2).abs() < 1e-12);
        }
        let s = laplacian_1d_dirichlet(PI, 2).unwrap();
        assert!((s.eigenvalues()[0] - 1.0).abs() < 1e-15);
        assert!((s.eigenvalues()[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_orthonormality() {
        let s = laplacian_1d_dirichlet(1.0, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let v = s.inner(&s.eigenfunction_on_grid(i).unwrap(), &s.eigenfunction_on_grid(j).unwrap()).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn flux_of_sine_modes() {
        let s = laplacian_1d_dirichlet(1.0, 5).unwrap();
        for n in 0..5 {
            let k = (n + 1) as f64;
            let expected = 2f64.sqrt() * k * PI * if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((s.flux(n, Endpoint::Right).unwrap() - expected).abs() < 1e-12);
            // at the left end the outward normal points the other way
            assert!((s.flux(n, Endpoint::Left).unwrap() + 2f64.sqrt() * k * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn sturm_liouville_matches_continuum() {
        let s = discretize_sturm_liouville(|_| 1.0, |_| 0.0, 1.0, 2000, 3, 1e-12).unwrap();
        assert!(((s.eigenvalues()[0] - PI * PI) / (PI * PI)).abs() < 1e-5);
        let shifted = discretize_sturm_liouville(|_| 1.0, |_| -1.0, 1.0, 2000, 3, 1e-12).unwrap();
        for (a, b) in s.eigenvalues().iter().zip(shifted.eigenvalues()) {
            assert!((b - a - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn invalid_coefficients_rejected() {
        assert!(matches!(
            discretize_sturm_liouville(|_| 1.0, |_| 1.0, 1.0, 100, 3, 1e-12),
            Err(SpectralError::InvalidCoefficients { .. })
        ));
        assert!(matches!(
            discretize_sturm_liouville(|x| x - 0.5, |_| 0.0, 1.0, 100, 3, 1e-12),
            Err(SpectralError::InvalidCoefficients { .. })
        ));
    }

    #[test]
    fn projection_of_parabola() {
        let s = laplacian_1d_dirichlet(1.0, 6).unwrap();
        let f: Vec<f64> = s.grid().iter().map(|x| x * (1.0 - x)).collect();
        let c = s.project(&f).unwrap();
        for (n, cn) in c.iter().enumerate() {
            let k = (n + 1) as f64;
            let exact = if (n + 1) % 2 == 1 { 2f64.sqrt() * 4.0 / (k * PI).powi(3) } else { 0.0 };
            assert!((cn - exact).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn power_norm_examples() {
        let s = laplacian_1d_dirichlet(PI, 4).unwrap();
        let phi1 = SpatialProfile::single_mode(0, 4);
        assert!((fractional_power_norm(&phi1, &s, 1.0).value - 1.0).abs() < 1e-14);
        let two = SpatialProfile::new(vec![1.0, 1.0, 0.0, 0.0], 1.0);
        assert!((fractional_power_norm(&two, &s, 0.5).value - 5f64.sqrt()).abs() < 1e-14);
        assert!((fractional_power_norm(&two, &s, 0.0).value - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn observation_examples() {
        let s = laplacian_1d_dirichlet(1.0, 4).unwrap();
        let profile = SpatialProfile::single_mode(0, 4);
        let spec = ObservationSpec::against_mode(&s, 0, 0.0, 1.0).unwrap();
        let a = pairing_coefficients(&profile, &s, &spec).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-10);
        assert!((observe(&[1.0, 0.0, 0.0, 0.0], &a) - 1.0).abs() < 1e-10);
        assert_eq!(observe(&[0.0; 4], &a), 0.0);
        let outside = ObservationSpec::interior_fn(0.5, 1.5, 11, |_| 1.0);
        assert!(matches!(pairing_coefficients(&profile, &s, &outside), Err(SpectralError::RegionMismatch { .. })));
    }

    #[test]
    fn summability_examples() {
        let s = laplacian_1d_dirichlet(1.0, 32).unwrap();
        let conv: Vec<f64> = s.eigenvalues().iter().map(|l| l.powi(-2)).collect();
        assert!(!summability_report(&conv, &s).unwrap().divergent);
        let div: Vec<f64> = s.eigenvalues().to_vec();
        assert!(summability_report(&div, &s).unwrap().divergent);
        let mut single = vec![0.0; 32];
        single[0] = 1.0;
        let r = summability_report(&single, &s).unwrap();
        assert!(!r.divergent);
        assert_eq!(*r.partial_sums.last().unwrap(), 1.0 / s.eigenvalues()[0]);
    }

    #[test]
    fn weyl_constants() {
        let s = laplacian_1d_dirichlet(1.0, 20).unwrap();
        assert!((weyl_growth_check(&s, 1).unwrap() - PI * PI).abs() < 1e-10);
        let s = laplacian_1d_dirichlet(2.0, 20).unwrap();
        assert!((weyl_growth_check(&s, 1).unwrap() - PI * PI / 4.0).abs() < 1e-10);
    }
}

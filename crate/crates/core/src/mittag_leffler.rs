//! Two-parameter Mittag-Leffler function `E_{α,β}(x)` on the non-positive
//! real axis.
//!
//! [`ml_eval`] is a hybrid evaluator:
//!
//! * the power series while its terms do not cancel by more than a factor
//!   [`SERIES_CANCELLATION_LIMIT`];
//! * the algebraic asymptotic expansion, optimally truncated, plus for
//!   `1 < α ≤ 2` the oscillating contribution of the two poles, once the
//!   truncation error is below round-off;
//! * in between, the real-axis Laplace representation
//!   `t^{β−1} E_{α,β}(−t^α) = ∫_0^∞ e^{−rt} K(r) dr (+ pole pair)` integrated
//!   adaptively. For `β ≥ α + 1/2` the recurrence
//!   `E_{α,β}(x) = (E_{α,β−α}(x) − 1/Γ(β−α)) / x` is used first.
//!
//! `α = 1` uses `exp` or the Kummer transformation of the series, which has
//! no cancellation for `β > 1`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::quadrature::{adaptive_gk15, tanh_sinh};
use crate::special::{cospi, is_pole, ln_gamma, rgamma, sinpi};

/// Largest tolerated ratio `Σ|terms| / |Σ terms|` before the series is
/// abandoned.
pub const SERIES_CANCELLATION_LIMIT: f64 = 1e2;

/// The series is only attempted for `|x|^{1/α}` up to this value.
const SERIES_Z_LIMIT: f64 = 12.0;
const SERIES_MAX_TERMS: usize = 10_000;
const ASYMPTOTIC_MAX_TERMS: usize = 4000;
/// Required truncation error of the asymptotic route, relative to its scale.
const ASYMPTOTIC_ACCEPT: f64 = 2e-15;
/// `e^{−rt}` is dropped beyond `rt` equal to this.
const LAPLACE_CUTOFF: f64 = 60.0;
/// Largest argument for which the Kummer form at `α = 1` does not overflow.
const KUMMER_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlError {
    #[error("invalid Mittag-Leffler parameters alpha={alpha}, beta={beta} (need 0 < alpha <= 2, beta > 0)")]
    InvalidParameters { alpha: f64, beta: f64 },
    #[error("argument {0} is positive; only the non-positive axis is supported")]
    PositiveArgument(f64),
    #[error("series for x={x} did not converge within {terms} terms")]
    NonConvergent { x: f64, terms: usize },
    #[error("eta={eta} lies below the validity threshold {threshold} of the asymptotic expansion")]
    BelowValidityThreshold { eta: f64, threshold: f64 },
    #[error("asymptotic expansion needs at least one term")]
    TooFewTerms,
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

/// Order and second parameter of `E_{α,β}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams {
    alpha: f64,
    beta: f64,
}

impl MlParams {
    /// `0 < α ≤ 2` (`α = 2` is admitted for the `cos` identity), `β > 0`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self, MlError> {
        let ok = alpha.is_finite() && beta.is_finite() && alpha > 0.0 && alpha <= 2.0 && beta > 0.0;
        if !ok {
            return Err(MlError::InvalidParameters { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Outcome of a series summation.
#[derive(Debug, Clone, Copy)]
pub struct SeriesSum {
    pub value: f64,
    /// `Σ|terms|`, the scale of rounding errors.
    pub abs_sum: f64,
    pub terms: usize,
}

/// Partial sum of `Σ x^k / Γ(αk+β)`, stopped once the terms decrease and the
/// next one is below `tol·|sum|`.
pub fn ml_series(params: MlParams, x: f64, tol: f64) -> Result<f64, MlError> {
    if x > 0.0 {
        return Err(MlError::PositiveArgument(x));
    }
    if !(tol > 0.0) {
        return Err(MlError::BadTolerance(tol));
    }
    series_sum(params, x, tol).map(|s| s.value)
}

pub fn series_sum(params: MlParams, x: f64, tol: f64) -> Result<SeriesSum, MlError> {
    let MlParams { alpha, beta } = params;
    let ln_abs = x.abs().ln();
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut abs_sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut power = 1.0_f64;
    for k in 0..SERIES_MAX_TERMS {
        let arg = alpha * k as f64 + beta;
        let term = if k == 0 {
            rgamma(beta)
        } else if arg < 160.0 && power.is_finite() && power != 0.0 {
            power * rgamma(arg)
        } else {
            let sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            sign * (k as f64 * ln_abs - ln_gamma(arg)).exp()
        };
        // Neumaier summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        abs_sum += term.abs();
        let mag = term.abs();
        if x == 0.0 || (mag < prev && mag <= tol * (sum + comp).abs()) || (mag == 0.0 && k > 0) {
            return Ok(SeriesSum { value: sum + comp, abs_sum, terms: k + 1 });
        }
        prev = mag;
        power *= x;
    }
    Err(MlError::NonConvergent { x, terms: SERIES_MAX_TERMS })
}

/// Signed term `(−1)^{k+1} η^{−k} / Γ(β−αk)`; exactly zero at Gamma poles.
fn asymptotic_term(params: MlParams, k: usize, ln_eta: f64) -> f64 {
    let g = params.beta - params.alpha * k as f64;
    if is_pole(g) {
        return 0.0;
    }
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    let kf = k as f64;
    if g > 0.0 {
        return sign * rgamma(g) * (-kf * ln_eta).exp();
    }
    // 1/Γ(g) = sin(πg) Γ(1−g) / π
    sign * sinpi(g) / PI * (ln_gamma(1.0 - g) - kf * ln_eta).exp()
}

/// Coefficient `(−1)^{k+1}/Γ(β−αk)` of `η^{−k}`.
pub fn asymptotic_coefficient(params: MlParams, k: usize) -> f64 {
    let g = params.beta - params.alpha * k as f64;
    if is_pole(g) {
        return 0.0;
    }
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    sign * rgamma(g)
}

/// Contribution of the poles `s = e^{±iπ/α}` for `1 < α ≤ 2`, as a term of
/// `E_{α,β}(−η)`.
fn pole_pair(params: MlParams, eta: f64) -> f64 {
    let MlParams { alpha, beta } = params;
    if alpha <= 1.0 {
        return 0.0;
    }
    let t = eta.powf(1.0 / alpha);
    let (s, c) = (PI / alpha).sin_cos();
    2.0 / alpha * t.powf(1.0 - beta) * (t * c).exp() * (t * s + PI * (1.0 - beta) / alpha).cos()
}

fn pole_pair_amplitude(params: MlParams, eta: f64) -> f64 {
    let MlParams { alpha, beta } = params;
    if alpha < 1.0 {
        return 0.0;
    }
    if alpha == 1.0 {
        return eta.powf(1.0 - beta) * (-eta).exp();
    }
    let t = eta.powf(1.0 / alpha);
    2.0 / alpha * t.powf(1.0 - beta) * (t * (PI / alpha).cos()).exp()
}

/// Optimally truncated algebraic expansion: the terms are summed up to the
/// window of three consecutive terms with the smallest envelope, whose
/// envelope is returned as the error estimate.
fn optimal_asymptotic(params: MlParams, eta: f64) -> (f64, f64) {
    let ln_eta = eta.ln();
    let mut terms = Vec::with_capacity(64);
    let mut best_env = f64::INFINITY;
    let mut best_start = 0;
    let mut partial = 0.0_f64;
    for k in 1..=ASYMPTOTIC_MAX_TERMS {
        let t = asymptotic_term(params, k, ln_eta);
        partial += t;
        terms.push(t);
        let n = terms.len();
        if n < 3 {
            continue;
        }
        let env = terms[n - 3..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if env < best_env {
            best_env = env;
            best_start = n - 3;
        }
        if best_env <= 1e-18 * partial.abs() || best_env == 0.0 {
            break;
        }
        if env > 1e8 * best_env && n > best_start + 6 {
            break;
        }
    }
    let sum = terms[..best_start].iter().sum();
    (sum, best_env)
}

fn ml_alpha_one(beta: f64, eta: f64) -> f64 {
    if beta == 1.0 {
        return (-eta).exp();
    }
    if eta <= KUMMER_LIMIT {
        // E_{1,β}(−η) = e^{−η}/Γ(β) Σ_k (β−1)/(β−1+k) η^k/k!
        let b1 = beta - 1.0;
        let mut w = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            w *= eta / k;
            let term = w * b1 / (b1 + k);
            sum += term;
            if k > eta && term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            k += 1.0;
        }
        return (-eta).exp() * sum * rgamma(beta);
    }
    let params = MlParams { alpha: 1.0, beta };
    optimal_asymptotic(params, eta).0
}

/// `t^{β−1}E_{α,β}(−t^α)` minus its pole pair, with `r = u^{1/c}`,
/// `c = α − β + 1`, which turns the `r^{α−β}` endpoint behaviour into a
/// bounded integrand.
fn laplace_integral(alpha: f64, beta: f64, t: f64) -> f64 {
    let c = alpha - beta + 1.0;
    let sb = sinpi(beta);
    let sba = sinpi(beta - alpha);
    let ca = cospi(alpha);
    let u_max = (LAPLACE_CUTOFF / t).powf(c);
    let scale = 1.0 / (PI * c);
    let f = |u: f64| {
        let r = u.powf(1.0 / c);
        let ra = r.powf(alpha);
        let den = ra * ra + 2.0 * ra * ca + 1.0;
        (-r * t).exp() * (ra * sb + sba) / den * scale
    };
    // the denominator peaks at r = 1 when α is near one
    let knots: &[f64] = if u_max > 1.0 { &[0.0, 1.0, u_max] } else { &[0.0, u_max] };
    let mut total = 0.0;
    let mut scale = 0.0_f64;
    for w in knots.windows(2) {
        let ts = tanh_sinh(f, w[0], w[1], 1e-16 * scale, 1e-15);
        total += if ts.converged { ts.value } else { adaptive_gk15(f, w[0], w[1], 0.0, 1e-14, 4000).value };
        scale = scale.max(ts.abs_value);
    }
    total
}

fn laplace_band(params: MlParams, eta: f64) -> f64 {
    let MlParams { alpha, beta } = params;
    if beta >= alpha + 0.5 {
        let lower = MlParams { alpha, beta: beta - alpha };
        return (ml_eval(lower, -eta) - rgamma(beta - alpha)) / (-eta);
    }
    let t = eta.powf(1.0 / alpha);
    let integral = laplace_integral(alpha, beta, t);
    t.powf(1.0 - beta) * integral + pole_pair(params, eta)
}

/// `E_{α,β}(x)` for `x ≤ 0`; `NaN` for positive or `NaN` input.
pub fn ml_eval(params: MlParams, x: f64) -> f64 {
    if !(x <= 0.0) {
        return f64::NAN;
    }
    let MlParams { alpha, beta } = params;
    if x == 0.0 {
        return rgamma(beta);
    }
    let eta = -x;
    if alpha == 1.0 {
        return ml_alpha_one(beta, eta);
    }
    if x.is_infinite() {
        return 0.0;
    }
    let z = eta.powf(1.0 / alpha);
    if z <= SERIES_Z_LIMIT {
        if let Ok(s) = series_sum(params, x, 1e-17) {
            if s.abs_sum <= SERIES_CANCELLATION_LIMIT * s.value.abs() {
                return s.value;
            }
        }
    }
    let (alg, err) = optimal_asymptotic(params, eta);
    let scale = alg.abs().max(pole_pair_amplitude(params, eta));
    if err <= ASYMPTOTIC_ACCEPT * scale {
        return alg + pole_pair(params, eta);
    }
    laplace_band(params, eta)
}

/// Truncated algebraic expansion `E_{α,β}(−η) ≈ Σ_{k=1}^{N} c_k η^{−k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticTermSeries {
    params: MlParams,
    /// `(exponent k, coefficient c_k)`, zero coefficients at Gamma poles kept.
    pub terms: Vec<(f64, f64)>,
    /// Exponent of the first omitted power with non-zero coefficient
    /// (infinite when every algebraic coefficient vanishes).
    pub remainder_order: f64,
    /// Smallest grid value `10^{j/16}` from which on the remainder bound is
    /// below `10⁻³` of the smallest retained non-zero term.
    pub validity_threshold: f64,
    omitted_coefficient: f64,
}

const THRESHOLD_GRID_PER_DECADE: i32 = 16;
const THRESHOLD_GRID_MIN: i32 = -10 * THRESHOLD_GRID_PER_DECADE;
const THRESHOLD_GRID_MAX: i32 = 30 * THRESHOLD_GRID_PER_DECADE;

impl AsymptoticTermSeries {
    pub fn new(params: MlParams, n_terms: usize) -> Result<Self, MlError> {
        if n_terms == 0 {
            return Err(MlError::TooFewTerms);
        }
        let terms: Vec<(f64, f64)> = (1..=n_terms).map(|k| (k as f64, asymptotic_coefficient(params, k))).collect();
        let mut remainder_order = f64::INFINITY;
        let mut omitted_coefficient = 0.0;
        for k in n_terms + 1..=n_terms + 64 {
            let c = asymptotic_coefficient(params, k);
            if c != 0.0 {
                remainder_order = k as f64;
                omitted_coefficient = c;
                break;
            }
        }
        let mut series =
            Self { params, terms, remainder_order, omitted_coefficient, validity_threshold: f64::INFINITY };
        series.validity_threshold = series.find_threshold();
        Ok(series)
    }

    pub fn params(&self) -> MlParams {
        self.params
    }

    pub fn eval(&self, eta: f64) -> f64 {
        self.terms.iter().map(|&(e, c)| if c == 0.0 { 0.0 } else { c * eta.powf(-e) }).sum()
    }

    /// Twice the first omitted non-zero term plus the amplitude of the
    /// exponentially small part (`α ≥ 1`).
    pub fn remainder_bound(&self, eta: f64) -> f64 {
        let algebraic = if self.omitted_coefficient == 0.0 {
            0.0
        } else {
            2.0 * self.omitted_coefficient.abs() * eta.powf(-self.remainder_order)
        };
        algebraic + pole_pair_amplitude(self.params, eta)
    }

    fn ln_remainder_bound(&self, ln_eta: f64) -> f64 {
        let algebraic = if self.omitted_coefficient == 0.0 {
            f64::NEG_INFINITY
        } else {
            (2.0 * self.omitted_coefficient.abs()).ln() - self.remainder_order * ln_eta
        };
        let MlParams { alpha, beta } = self.params;
        let pair = if alpha < 1.0 {
            f64::NEG_INFINITY
        } else if alpha == 1.0 {
            (1.0 - beta) * ln_eta - ln_eta.exp()
        } else {
            let t = (ln_eta / alpha).exp();
            (2.0 / alpha).ln() + (1.0 - beta) * ln_eta / alpha + t * (PI / alpha).cos()
        };
        let hi = algebraic.max(pair);
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        hi + ((algebraic - hi).exp() + (pair - hi).exp()).ln()
    }

    // compared in logarithms so that large thresholds do not underflow
    fn holds_at(&self, eta: f64) -> bool {
        let ln_eta = eta.ln();
        let bound = self.ln_remainder_bound(ln_eta);
        let smallest = self
            .terms
            .iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|&(e, c)| c.abs().ln() - e * ln_eta)
            .min_by(f64::total_cmp);
        match smallest {
            Some(s) => bound < 1e-3f64.ln() + s,
            None => bound < 1e-16f64.ln(),
        }
    }

    fn find_threshold(&self) -> f64 {
        let grid = |j: i32| 10f64.powf(j as f64 / THRESHOLD_GRID_PER_DECADE as f64);
        if !self.holds_at(grid(THRESHOLD_GRID_MAX)) {
            return f64::INFINITY;
        }
        let mut j = THRESHOLD_GRID_MAX;
        while j > THRESHOLD_GRID_MIN && self.holds_at(grid(j - 1)) {
            j -= 1;
        }
        grid(j)
    }
}

/// `N`-term asymptotic value of `E_{α,β}(−η)` and its remainder bound.
pub fn ml_asymptotic(params: MlParams, eta: f64, n_terms: usize) -> Result<(f64, f64), MlError> {
    let series = AsymptoticTermSeries::new(params, n_terms)?;
    if !(eta >= series.validity_threshold) {
        return Err(MlError::BelowValidityThreshold { eta, threshold: series.validity_threshold });
    }
    Ok((series.eval(eta), series.remainder_bound(eta)))
}

/// `max_η |E_{α,α}(−η)|·(1+η)` over the grid.
pub fn ml_uniform_bound_check(alpha: f64, eta_grid: &[f64]) -> Result<f64, MlError> {
    let params = MlParams::new(alpha, alpha)?;
    Ok(eta_grid.iter().map(|&eta| ml_eval(params, -eta).abs() * (1.0 + eta)).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> MlParams {
        MlParams::new(a, b).unwrap()
    }

    #[test]
    fn parameters_are_validated() {
        assert!(MlParams::new(0.0, 1.0).is_err());
        assert!(MlParams::new(2.5, 1.0).is_err());
        assert!(MlParams::new(0.5, 0.0).is_err());
        assert!(MlParams::new(2.0, 1.0).is_ok());
    }

    #[test]
    fn series_examples() {
        let v = ml_series(p(0.5, 0.5), 0.0, 1e-16).unwrap();
        assert!((v - 0.564_189_583_547_756_3).abs() < 1e-15);
        let v = ml_series(p(1.0, 1.0), -1.0, 1e-16).unwrap();
        assert!((v - 0.367_879_441_171_442_33).abs() < 1e-15);
        let z = std::f64::consts::FRAC_PI_2;
        let v = ml_series(p(2.0, 1.0), -z * z, 1e-16).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(ml_series(p(0.5, 0.5), 1.0, 1e-16).is_err());
    }

    #[test]
    fn eval_examples() {
        assert!((ml_eval(p(1.5, 1.5), 0.0) - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-15);
        let v = ml_eval(p(1.0, 2.0), -2.0);
        assert!((v - 0.432_332_358_381_693_65).abs() < 1e-15);
    }

    #[test]
    fn alpha_one_terms_vanish() {
        let s = AsymptoticTermSeries::new(p(1.0, 1.0), 4).unwrap();
        assert!(s.terms.iter().all(|&(_, c)| c == 0.0));
        let (v, bound) = ml_asymptotic(p(1.0, 1.0), 50.0, 4).unwrap();
        assert_eq!(v, 0.0);
        assert!(bound < 1e-16);
    }

    #[test]
    fn half_order_pole_pattern() {
        // 0.5 − 0.5k is a pole for odd k
        let s = AsymptoticTermSeries::new(p(0.5, 0.5), 4).unwrap();
        let zero: Vec<bool> = s.terms.iter().map(|&(_, c)| c == 0.0).collect();
        assert_eq!(zero, vec![true, false, true, false]);
        assert_eq!(s.remainder_order, 6.0);
    }

    #[test]
    fn threshold_is_enforced() {
        let err = ml_asymptotic(p(0.5, 0.5), 10.0, 2).unwrap_err();
        assert!(matches!(err, MlError::BelowValidityThreshold { .. }));
        assert!(ml_asymptotic(p(0.5, 0.5), 100.0, 2).is_ok());
    }

    #[test]
    fn uniform_bound_at_alpha_one() {
        let grid: Vec<f64> = (0..7).map(|j| 10f64.powi(j)).collect();
        let c = ml_uniform_bound_check(1.0, &grid).unwrap();
        assert!((c - 2.0 / std::f64::consts::E).abs() < 1e-15);
    }
}

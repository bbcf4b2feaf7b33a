//! Arbitrary-precision reference values for `E_{α,β}(x)` on the non-positive
//! real axis and for the real Gamma function.
//!
//! This crate is deliberately independent of `fractail-core`: it shares no
//! code path with the double-precision evaluators it is used to check.
//!
//! Two routes are used:
//!
//! * the defining power series `Σ x^k / Γ(αk+β)`, summed in MPFR with enough
//!   guard bits to absorb the cancellation (`≈ |x|^{1/α} / ln 2` bits), and a
//!   geometric bound on the tail once term ratios are below one;
//! * far out on the axis (`|x|^{1/α} > 150`) the algebraic expansion
//!   `Σ (−1)^{k+1} |x|^{−k} / Γ(β−αk)` in MPFR, plus the pair of residue
//!   terms that exist for `1 < α < 2`. At that distance the optimally
//!   truncated remainder is below `e^{−150}`.

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

/// Digits requested by default for reference values.
pub const DEFAULT_DIGITS: u32 = 50;

/// Above this value of `|x|^{1/α}` the oracle switches to the asymptotic route.
pub const SERIES_Z_MAX: f64 = 150.0;

/// Working precision of the asymptotic route.
const ASYMPTOTIC_PREC: u32 = 320;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Series,
    Asymptotic,
}

/// A reference value rounded to `f64`, with the bound on the relative error of
/// the arbitrary-precision result (before the final rounding).
#[derive(Debug, Clone, Copy)]
pub struct Reference {
    pub value: f64,
    pub rel_error_bound: f64,
    pub route: Route,
    pub terms: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    /// `α` or `β` outside the supported range.
    BadParameters { alpha: f64, beta: f64 },
    /// Positive arguments are outside the scope of this oracle.
    PositiveArgument(f64),
    /// The series route would need an unreasonable number of bits.
    OutOfRange { x: f64 },
}

impl std::fmt::Display for OracleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::BadParameters { alpha, beta } => {
                write!(f, "unsupported parameters alpha={alpha}, beta={beta}")
            }
            Self::PositiveArgument(x) => write!(f, "argument {x} is positive"),
            Self::OutOfRange { x } => write!(f, "argument {x} is beyond the oracle range"),
        }
    }
}

impl std::error::Error for OracleError {}

/// Cached reference evaluator for one `(α, β)` pair.
///
/// The series coefficients `1/Γ(αk+β)` are computed once at the largest
/// precision the series route can require and reused for every argument.
pub struct MlOracle {
    alpha: f64,
    beta: f64,
    digits: u32,
    prec: u32,
    coeffs: Vec<Float>,
}

impl MlOracle {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, OracleError> {
        Self::with_digits(alpha, beta, DEFAULT_DIGITS)
    }

    pub fn with_digits(alpha: f64, beta: f64, digits: u32) -> Result<Self, OracleError> {
        if !(alpha > 0.0 && alpha <= 2.0 && beta > 0.0 && beta.is_finite()) {
            return Err(OracleError::BadParameters { alpha, beta });
        }
        let digit_bits = (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as u32;
        let z_max = if is_exact_integer(alpha) { 2000.0 } else { SERIES_Z_MAX };
        let prec = (z_max * std::f64::consts::LOG2_E).ceil() as u32 + digit_bits + 96;
        Ok(Self { alpha, beta, digits, prec, coeffs: Vec::new() })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Reference value of `E_{α,β}(x)` for `x ≤ 0`.
    pub fn eval(&mut self, x: f64) -> Result<Reference, OracleError> {
        if x > 0.0 {
            return Err(OracleError::PositiveArgument(x));
        }
        let z = (-x).powf(1.0 / self.alpha);
        let integer_order = is_exact_integer(self.alpha);
        if z <= SERIES_Z_MAX || integer_order {
            if integer_order && z > 2000.0 {
                return Err(OracleError::OutOfRange { x });
            }
            Ok(self.series(x, z))
        } else {
            Ok(self.asymptotic(-x))
        }
    }

    fn coeff(&mut self, k: usize) -> &Float {
        while self.coeffs.len() <= k {
            let j = self.coeffs.len();
            let arg = Float::with_val(self.prec, self.alpha) * j as u32 + self.beta;
            self.coeffs.push(recip_gamma(&arg));
        }
        &self.coeffs[k]
    }

    fn series(&mut self, x: f64, z: f64) -> Reference {
        let target_bits = (f64::from(self.digits) * std::f64::consts::LOG2_10) as i32 + 24;
        let work = ((z * std::f64::consts::LOG2_E).ceil() as u32 + target_bits as u32 + 64).min(self.prec);
        let xf = Float::with_val(work, x);
        let mut power = Float::with_val(work, 1u32);
        let mut sum = Float::with_val(work, 0u32);
        let mut abs_sum = Float::with_val(work, 0u32);
        let mut prev_abs = Float::with_val(work, 0u32);
        let mut k = 0usize;
        let tail_bound: f64;
        loop {
            let c = Float::with_val(work, self.coeff(k));
            let term = Float::with_val(work, &power * &c);
            let term_abs = Float::with_val(work, term.abs_ref());
            sum += &term;
            abs_sum += &term_abs;
            // After the peak the ratio |t_{k+1}/t_k| = |x| Γ(αk+β)/Γ(αk+α+β)
            // decreases with k (log-convexity of Γ), so a geometric tail bound
            // holds once it is below one.
            if k > 0 && term_abs < prev_abs && !sum.is_zero() {
                let ratio = Float::with_val(work, &term_abs / &prev_abs).to_f64();
                let rel = abs_ratio(&term_abs, &sum);
                if ratio < 0.9 && (rel == 0.0 || rel.log2() < -(target_bits as f64)) {
                    tail_bound = rel * ratio / (1.0 - ratio);
                    k += 1;
                    break;
                }
            }
            if term.is_zero() && k > 0 {
                tail_bound = 0.0;
                k += 1;
                break;
            }
            prev_abs = term_abs;
            power *= &xf;
            k += 1;
        }
        let rounding = abs_ratio(&abs_sum, &sum) * (k as f64 + 2.0) * 2f64.powi(-(work as i32));
        Reference { value: sum.to_f64(), rel_error_bound: tail_bound + rounding, route: Route::Series, terms: k }
    }

    /// Asymptotic route for `E_{α,β}(−eta)`.
    fn asymptotic(&mut self, eta: f64) -> Reference {
        let p = ASYMPTOTIC_PREC;
        let eta_f = Float::with_val(p, eta);
        let inv_eta = Float::with_val(p, 1u32) / &eta_f;
        let mut power = inv_eta.clone();
        let mut terms_mp: Vec<Float> = Vec::new();
        let mut min_abs: Option<Float> = None;
        let negligible = Float::with_val(p, 2u32).pow(-(p as i32) + 8);
        let mut k = 1u32;
        while k < 20_000 {
            let arg = Float::with_val(p, self.beta) - Float::with_val(p, self.alpha) * k;
            let mut term = Float::with_val(p, &power * recip_gamma(&arg));
            if k.is_multiple_of(2) {
                term = -term;
            }
            terms_mp.push(term);
            let n = terms_mp.len();
            if n >= 3 {
                let mut window = Float::with_val(p, 0u32);
                for t in &terms_mp[n - 3..] {
                    let a = Float::with_val(p, t.abs_ref());
                    if a > window {
                        window = a;
                    }
                }
                if let Some(m) = &min_abs {
                    if Float::with_val(p, &window / m) > 1e10 {
                        break;
                    }
                }
                if !window.is_zero() && min_abs.as_ref().is_none_or(|m| &window < m) {
                    min_abs = Some(window);
                }
            }
            // Three consecutive negligible terms relative to the leading one.
            if n > 3 {
                let lead = terms_mp.iter().find(|t| !t.is_zero()).map(|t| Float::with_val(p, t.abs_ref()));
                if let Some(lead) = lead {
                    let tiny = terms_mp[n - 3..]
                        .iter()
                        .all(|t| Float::with_val(p, t.abs_ref()) < Float::with_val(p, &lead * &negligible));
                    if tiny {
                        break;
                    }
                }
            }
            power *= &inv_eta;
            k += 1;
        }
        // Optimal truncation: stop before the smallest robust envelope
        // max(|t_j|, |t_{j+1}|, |t_{j+2}|); individual coefficients can be
        // accidentally tiny next to a pole of Γ.
        let env = |j: usize| -> Float {
            let mut m = Float::with_val(p, 0u32);
            for t in terms_mp.iter().skip(j).take(3) {
                let a = Float::with_val(p, t.abs_ref());
                if a > m {
                    m = a;
                }
            }
            m
        };
        let mut cut = terms_mp.len();
        let mut best = Float::with_val(p, 0u32);
        if terms_mp.len() >= 3 {
            best = env(terms_mp.len() - 3);
            for j in 1..terms_mp.len().saturating_sub(2) {
                let e = env(j);
                if e < best {
                    best = e;
                    cut = j;
                }
            }
            if cut == terms_mp.len() - 3 || cut > terms_mp.len() {
                cut = terms_mp.len();
            }
        }
        let mut sum = Float::with_val(p, 0u32);
        for t in &terms_mp[..cut] {
            sum += t;
        }
        let terms = cut;
        let last_rel = if sum.is_zero() { 0.0 } else { abs_ratio(&best, &sum) };
        if self.alpha > 1.0 && self.alpha < 2.0 {
            sum += self.residue_pair(&eta_f, p);
        }
        let rel = if sum.is_zero() { f64::INFINITY } else { last_rel };
        Reference { value: sum.to_f64(), rel_error_bound: rel, route: Route::Asymptotic, terms }
    }

    /// `(2/α) t^{1−β} e^{t cos(π/α)} cos(t sin(π/α) + π(1−β)/α)` with `t = η^{1/α}`.
    fn residue_pair(&self, eta: &Float, p: u32) -> Float {
        let pi = Float::with_val(p, Constant::Pi);
        let alpha = Float::with_val(p, self.alpha);
        let one_minus_beta = Float::with_val(p, 1u32) - Float::with_val(p, self.beta);
        let t = Float::with_val(p, eta.pow(Float::with_val(p, 1u32) / &alpha));
        let angle = Float::with_val(p, &pi / &alpha);
        let decay = Float::with_val(p, &t * angle.clone().cos()).exp();
        let phase = Float::with_val(p, &t * angle.sin()) + Float::with_val(p, &pi * &one_minus_beta) / &alpha;
        let amplitude = Float::with_val(p, 2u32) / &alpha * t.pow(&one_minus_beta);
        amplitude * decay * phase.cos()
    }
}

/// One-shot reference value (no coefficient reuse).
pub fn ml_reference(alpha: f64, beta: f64, x: f64) -> Result<Reference, OracleError> {
    MlOracle::new(alpha, beta)?.eval(x)
}

/// `Γ(x)` to `digits` significant digits, with the reflection formula
/// `Γ(x) = π / (sin(πx) Γ(1−x))` for negative arguments.
pub fn gamma_reference(x: f64, digits: u32) -> f64 {
    let prec = (f64::from(digits) * std::f64::consts::LOG2_10) as u32 + 64;
    let xf = Float::with_val(prec, x);
    if x < 0.0 {
        let pi = Float::with_val(prec, Constant::Pi);
        let s = Float::with_val(prec, &pi * &xf).sin();
        let g = (Float::with_val(prec, 1u32) - xf).gamma();
        (pi / (s * g)).to_f64()
    } else {
        xf.gamma().to_f64()
    }
}

fn abs_ratio(num: &Float, den: &Float) -> f64 {
    Float::with_val(num.prec().max(den.prec()), num / den).abs().to_f64()
}

fn recip_gamma(arg: &Float) -> Float {
    if arg.is_integer() && *arg <= 0 {
        return Float::with_val(arg.prec(), 0u32);
    }
    Float::with_val(arg.prec(), arg.gamma_ref()).recip()
}

fn is_exact_integer(v: f64) -> bool {
    v.fract() == 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_origin_is_reciprocal_gamma() {
        let r = ml_reference(0.5, 0.5, 0.0).unwrap();
        assert!((r.value - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn exponential_identity() {
        for &x in &[-0.1, -1.0, -10.0, -50.0] {
            let r = ml_reference(1.0, 1.0, x).unwrap();
            assert!(((r.value - x.exp()) / x.exp()).abs() < 1e-15, "x={x}");
        }
    }

    #[test]
    fn cosine_identity() {
        let z = 7.3f64;
        let r = ml_reference(2.0, 1.0, -z * z).unwrap();
        assert!((r.value - z.cos()).abs() < 1e-15);
    }

    #[test]
    fn routes_agree_in_the_overlap() {
        for &(alpha, beta) in &[
            (0.5, 0.5),
            (0.3, 1.0),
            (std::f64::consts::FRAC_1_SQRT_2, 1.0 + std::f64::consts::FRAC_1_SQRT_2),
            (1.5, 1.5),
            (1.9, 1.0),
        ] {
            let mut o = MlOracle::new(alpha, beta).unwrap();
            for &z in &[120.0f64, 140.0] {
                let x = -z.powf(alpha);
                let s = o.series(x, z);
                let a = o.asymptotic(-x);
                let rel = ((s.value - a.value) / a.value).abs();
                assert!(rel < 1e-15, "alpha={alpha} beta={beta} z={z}: {} vs {}", s.value, a.value);
                assert!(
                    s.rel_error_bound < 1e-40 && a.rel_error_bound < 1e-40,
                    "alpha={alpha} beta={beta} z={z}: {:e} {:e} terms {}",
                    s.rel_error_bound,
                    a.rel_error_bound,
                    a.terms
                );
            }
        }
    }

    #[test]
    fn erfc_closed_form_for_half_order() {
        // E_{1/2,1}(−x) = exp(x²) erfc(x)
        let x = 3.0f64;
        let r = ml_reference(0.5, 1.0, -x).unwrap();
        let prec = 256;
        let xf = Float::with_val(prec, x);
        let expect = (Float::with_val(prec, xf.square_ref()).exp() * xf.erfc()).to_f64();
        assert!(((r.value - expect) / expect).abs() < 1e-15);
    }

    #[test]
    fn reflection_gamma() {
        let g = gamma_reference(-0.5, 50);
        assert!((g + 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }
}

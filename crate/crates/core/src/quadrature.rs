//! Quadrature rules: fixed Gauss–Legendre, composite Simpson on uniform
//! grids and adaptive Gauss–Kronrod (7/15).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n`, started from the Tricomi approximation.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Mapped nodes and weights for `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Simpson rule on uniformly spaced samples. The sample count must
/// be odd; with an even count the last interval falls back to the trapezoid.
pub fn simpson(samples: &[f64], h: f64) -> f64 {
    let n = samples.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (samples[0] + samples[1]),
        _ => {
            let m = if n % 2 == 1 { n } else { n - 1 };
            let mut acc = samples[0] + samples[m - 1];
            for (i, s) in samples.iter().enumerate().take(m - 1).skip(1) {
                acc += if i % 2 == 1 { 4.0 * s } else { 2.0 * s };
            }
            let mut total = acc * h / 3.0;
            if m < n {
                total += 0.5 * h * (samples[n - 2] + samples[n - 1]);
            }
            total
        }
    }
}

/// Trapezoid rule on arbitrary nodes.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut gauss = fc * WG[3];
    let mut kronrod = fc * WGK[7];
    let mut abs_k = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), abs_k * h.abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    /// `∫|f|`, the scale against which rounding is judged.
    pub abs_value: f64,
    pub panels: usize,
}

/// Globally adaptive Gauss–Kronrod 7/15 on `[a, b]`: the panel with the
/// largest error estimate is bisected until the total estimate falls below
/// `max(abs_tol, rel_tol·|I|)` or `max_panels` is reached.
pub fn adaptive_gk15<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Integral {
    let (v, e, s) = kronrod15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut abs_total = s;
    let mut panels = 1;
    while total_err > abs_tol.max(rel_tol * total.abs()) && panels < max_panels {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1, s1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2, s2) = kronrod15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        abs_total += s1 + s2;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        panels += 1;
    }
    // re-sum to shed accumulated cancellation in the running total
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Integral { value, error, abs_value: abs_total, panels }
}

/// Result of [`tanh_sinh`].
#[derive(Debug, Clone, Copy)]
pub struct TanhSinh {
    pub value: f64,
    /// Difference between the last two levels.
    pub error: f64,
    pub abs_value: f64,
    pub converged: bool,
}

const TANH_SINH_REACH: f64 = 4.0;
const TANH_SINH_LEVELS: u32 = 9;

/// `(d, w)` at `τ = k·2^{−LEVELS}`: nodes sit `d·(b−a)` from either end with
/// weight `w·(b−a)` at unit step.
fn tanh_sinh_table() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 0.5f64.powi(TANH_SINH_LEVELS as i32);
        let n = (TANH_SINH_REACH / h) as usize;
        (0..=n)
            .map(|k| {
                let tau = k as f64 * h;
                let s = FRAC_PI_2 * tau.sinh();
                let d = 1.0 / (1.0 + (2.0 * s).exp());
                (d, PI * tau.cosh() * d * (1.0 - d))
            })
            .collect()
    })
}

/// Double-exponential quadrature on `[a, b]`. Integrable endpoint
/// singularities cost nothing extra; interior kinks should be split off by
/// the caller. Levels halve the step until two successive estimates agree to
/// `max(abs_tol, rel_tol·∫|f|)`.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> TanhSinh {
    let width = b - a;
    let table = tanh_sinh_table();
    let finest = table.len() - 1;
    let mut pair = |k: usize| -> (f64, f64) {
        let (d, w) = table[k];
        if w == 0.0 {
            return (0.0, 0.0);
        }
        let w = w * width;
        let (fl, fr) = (f(a + width * d), f(b - width * d));
        let (fl, fr) = (if fl.is_finite() { fl } else { 0.0 }, if fr.is_finite() { fr } else { 0.0 });
        (w * (fl + fr), w * (fl.abs() + fr.abs()))
    };
    let mut stride = 1usize << TANH_SINH_LEVELS;
    let mut h = 1.0;
    // τ = 0 is counted twice by `pair`
    let (c0, _) = pair(0);
    let mut sum = 0.5 * c0;
    let mut abs_sum = sum.abs();
    for k in (stride..=finest).step_by(stride) {
        let (v, av) = pair(k);
        sum += v;
        abs_sum += av;
    }
    let mut prev = sum * h;
    for _ in 0..TANH_SINH_LEVELS {
        h *= 0.5;
        stride /= 2;
        for k in (stride..=finest).step_by(2 * stride) {
            let (v, av) = pair(k);
            sum += v;
            abs_sum += av;
        }
        let value = sum * h;
        let error = (value - prev).abs();
        let abs_value = abs_sum * h;
        if error <= abs_tol.max(rel_tol * abs_value) {
            return TanhSinh { value, error, abs_value, converged: true };
        }
        prev = value;
    }
    TanhSinh { value: prev, error: f64::INFINITY, abs_value: abs_sum * h, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = 2f64.powi(16) / 16.0 - 3.0 * 32.0 / 5.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
        let w: f64 = gl.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sixty_four_points_integrate_smooth_functions() {
        let gl = GaussLegendre::new(64);
        let v = gl.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let n = 11;
        let h = 0.1;
        let s: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&s, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        let r = tanh_sinh(|x: f64| x.powf(-0.5) + (1.0 - x).powf(0.3), 0.0, 1.0, 0.0, 1e-13);
        assert!(r.converged);
        assert!((r.value - (2.0 + 1.0 / 1.3)).abs() < 1e-13, "{:?}", r);
        let r = tanh_sinh(|x: f64| (-x).exp(), 0.0, 60.0, 0.0, 1e-13);
        assert!((r.value + (-60.0f64).exp_m1()).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = adaptive_gk15(|x: f64| x.powf(-0.5), 0.0, 1.0, 0.0, 1e-12, 400);
        assert!((r.value - 2.0).abs() < 1e-9, "{:?}", r);
    }
}

//! Scenario files: TOML with a fixed schema. Unknown keys are errors.

use std::path::{Path, PathBuf};

use fractail_core::forward::{Segment, SourceSpec};
use fractail_core::spectral::{
    discretize_sturm_liouville, laplacian_1d_dirichlet, EigenSystem, Endpoint, ObservationSpec, SpatialProfile,
};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read scenario {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("scenario does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scenario field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Forward,
    Tail,
    Extract,
    Scalar,
    Uniqueness,
    HeatContrast,
    MlfTable,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Forward => "forward",
            Self::Tail => "tail",
            Self::Extract => "extract",
            Self::Scalar => "scalar",
            Self::Uniqueness => "uniqueness",
            Self::HeatContrast => "heat-contrast",
            Self::MlfTable => "mlf-table",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub experiment: ExperimentKind,
    pub alpha: f64,
    /// Seed of the noise generator.
    #[serde(default)]
    pub rng_seed: u64,
    /// Bound of the uniform additive noise put on observed data.
    #[serde(default)]
    pub noise_level: f64,
    pub operator: Option<OperatorTable>,
    pub source: Option<SourceTable>,
    pub observation: Option<ObservationTable>,
    pub grid: Option<GridTable>,
    pub tail: Option<TailTable>,
    pub extract: Option<ExtractTable>,
    pub scalar: Option<ScalarTable>,
    pub uniqueness: Option<UniquenessTable>,
    pub contrast: Option<ContrastTable>,
    pub mlf: Option<MlfTable>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    Laplacian,
    SturmLiouville,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorTable {
    pub kind: OperatorKind,
    pub length: f64,
    pub modes: usize,
    /// Finite-difference unknowns (Sturm–Liouville only).
    pub interior_points: Option<usize>,
    /// `(x, a(x))` knots, linearly interpolated.
    pub diffusion: Option<Vec<[f64; 2]>>,
    /// `(x, c(x))` knots with `c ≤ 0`; zero when absent.
    pub reaction: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentTable {
    pub start: f64,
    pub end: f64,
    /// Polynomial coefficients in `s`.
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceTable {
    pub t0: f64,
    /// `μ(s) = Σ c_k s^k` on `[0, t0]`.
    pub polynomial: Option<Vec<f64>>,
    pub segments: Option<Vec<SegmentTable>>,
    /// Modal coefficients `f_n`.
    #[serde(default = "first_mode")]
    pub profile: Vec<f64>,
    pub profile_sigma: Option<f64>,
}

fn first_mode() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationKind {
    /// Pairings equal to the modal coefficients of the profile.
    Modal,
    Interior,
    Flux,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    /// `v = φ_mode` (one-based).
    Mode,
    /// `v ≡ 1`.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointName {
    Left,
    Right,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxPoint {
    pub end: EndpointName,
    pub weight: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationTable {
    pub kind: ObservationKind,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub test: Option<TestFunction>,
    pub mode: Option<usize>,
    pub endpoints: Option<Vec<FluxPoint>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridTable {
    pub t_min: f64,
    pub t_max: f64,
    #[serde(default = "default_points_per_decade")]
    pub points_per_decade: usize,
}

/// Geometric grids default to 16 points per decade.
pub const DEFAULT_POINTS_PER_DECADE: usize = 16;

fn default_points_per_decade() -> usize {
    DEFAULT_POINTS_PER_DECADE
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailTable {
    pub ladder_terms: usize,
    pub moment_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionChoice {
    LeastSquares,
    Sequential,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractTable {
    pub ladder_terms: usize,
    pub moment_order: usize,
    #[serde(default = "default_extraction")]
    pub mode: ExtractionChoice,
    #[serde(default)]
    pub recover_modes: usize,
}

fn default_extraction() -> ExtractionChoice {
    ExtractionChoice::Both
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarTable {
    /// Offset `a` added to `J^α μ`.
    #[serde(default)]
    pub constant: f64,
    pub moment_order: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessTable {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub ladder_terms: usize,
    pub moment_order: usize,
    #[serde(default)]
    pub recover_modes: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastTable {
    pub modes: usize,
    /// Split point of a two-level source whose first exponential moment
    /// vanishes; compared against the scenario source when present.
    pub engineered_split: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlfTable {
    pub beta: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    #[serde(default = "default_mlf_points")]
    pub points: usize,
}

fn default_mlf_points() -> usize {
    200
}

/// Declared pass/fail thresholds. Absent entries are not checked.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest relative error against the arbitrary-precision oracle.
    pub max_oracle_error: Option<f64>,
    /// Relative error of recovered amplitudes or moments.
    pub recovery_rel: Option<f64>,
    /// Relative error of fitted decay exponents.
    pub exponent_rel: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputTable {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub plots: bool,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Ok((Self::from_toml(&text)?, text))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.experiment;
        let alpha_ok = match kind {
            ExperimentKind::HeatContrast => self.alpha > 0.0 && self.alpha < 2.0,
            ExperimentKind::MlfTable => self.alpha > 0.0 && self.alpha <= 2.0,
            ExperimentKind::Scalar => self.alpha > 0.0 && self.alpha < 1.0,
            _ => self.alpha > 0.0 && self.alpha < 2.0 && self.alpha != 1.0,
        };
        if !alpha_ok {
            return Err(invalid("alpha", format!("{} is outside the range allowed for {}", self.alpha, kind.name())));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(invalid("noise_level", "must be finite and non-negative"));
        }
        if kind == ExperimentKind::MlfTable {
            let mlf = self.mlf.as_ref().ok_or_else(|| invalid("mlf", "required for mlf-table"))?;
            if !(mlf.beta > 0.0 && mlf.beta.is_finite()) {
                return Err(invalid("mlf.beta", "must be positive"));
            }
            if !(mlf.eta_min > 0.0 && mlf.eta_max > mlf.eta_min && mlf.eta_max.is_finite()) {
                return Err(invalid("mlf.eta_min", "need 0 < eta_min < eta_max"));
            }
            if mlf.points < 2 {
                return Err(invalid("mlf.points", "need at least two points"));
            }
            return Ok(());
        }

        let op = self.operator.as_ref().ok_or_else(|| invalid("operator", "required"))?;
        if !(op.length > 0.0 && op.length.is_finite()) {
            return Err(invalid("operator.length", "must be positive"));
        }
        if op.modes == 0 {
            return Err(invalid("operator.modes", "must be at least 1"));
        }
        if op.kind == OperatorKind::SturmLiouville {
            let table =
                op.diffusion.as_ref().ok_or_else(|| invalid("operator.diffusion", "required for sturm-liouville"))?;
            check_knots(table, op.length, "operator.diffusion")?;
            if let Some(r) = &op.reaction {
                check_knots(r, op.length, "operator.reaction")?;
            }
        }

        let src = self.source.as_ref().ok_or_else(|| invalid("source", "required"))?;
        if !(src.t0 > 0.0 && src.t0.is_finite()) {
            return Err(invalid("source.t0", "must be positive"));
        }
        match (&src.polynomial, &src.segments) {
            (Some(_), Some(_)) => return Err(invalid("source.segments", "give either polynomial or segments")),
            (None, None) => return Err(invalid("source.polynomial", "give either polynomial or segments")),
            _ => {}
        }
        if src.profile.is_empty() {
            return Err(invalid("source.profile", "needs at least one coefficient"));
        }

        let grid = self.grid.as_ref().ok_or_else(|| invalid("grid", "required"))?;
        let min = match kind {
            ExperimentKind::Extract | ExperimentKind::Scalar => 2.0 * src.t0,
            _ => src.t0,
        };
        if !(grid.t_min > min) {
            return Err(invalid("grid.t_min", format!("must exceed {min} (t0 = {}), got {}", src.t0, grid.t_min)));
        }
        if !(grid.t_max > grid.t_min && grid.t_max.is_finite()) {
            return Err(invalid("grid.t_max", "must exceed grid.t_min"));
        }
        if grid.points_per_decade == 0 {
            return Err(invalid("grid.points_per_decade", "must be at least 1"));
        }

        let needs_obs = matches!(kind, ExperimentKind::Tail | ExperimentKind::Extract | ExperimentKind::Uniqueness);
        if needs_obs && self.observation.is_none() {
            return Err(invalid("observation", format!("required for {}", kind.name())));
        }
        if let Some(obs) = &self.observation {
            validate_observation(obs, op)?;
        }
        match kind {
            ExperimentKind::Tail => {
                self.tail.as_ref().ok_or_else(|| invalid("tail", "required for tail"))?;
            }
            ExperimentKind::Extract => {
                let ex = self.extract.as_ref().ok_or_else(|| invalid("extract", "required for extract"))?;
                if ex.ladder_terms == 0 {
                    return Err(invalid("extract.ladder_terms", "must be at least 1"));
                }
                if ex.recover_modes > ex.ladder_terms.min(op.modes) {
                    return Err(invalid("extract.recover_modes", "cannot exceed ladder_terms or operator.modes"));
                }
            }
            ExperimentKind::Scalar => {
                self.scalar.as_ref().ok_or_else(|| invalid("scalar", "required for scalar"))?;
            }
            ExperimentKind::Uniqueness => {
                let u = self.uniqueness.as_ref().ok_or_else(|| invalid("uniqueness", "required for uniqueness"))?;
                if u.ladder_terms == 0 {
                    return Err(invalid("uniqueness.ladder_terms", "must be at least 1"));
                }
            }
            ExperimentKind::HeatContrast => {
                let c = self.contrast.as_ref().ok_or_else(|| invalid("contrast", "required for heat-contrast"))?;
                if c.modes == 0 {
                    return Err(invalid("contrast.modes", "must be at least 1"));
                }
                if let Some(split) = c.engineered_split {
                    if !(split > 0.0 && split < src.t0) {
                        return Err(invalid("contrast.engineered_split", "must lie in (0, t0)"));
                    }
                }
            }
            ExperimentKind::Forward | ExperimentKind::MlfTable => {}
        }
        Ok(())
    }

    /// The eigensystem named by `[operator]`.
    pub fn eigensystem(&self) -> Result<EigenSystem, fractail_core::Error> {
        let op = self.operator.as_ref().expect("validated");
        Ok(match op.kind {
            OperatorKind::Laplacian => laplacian_1d_dirichlet(op.length, op.modes)?,
            OperatorKind::SturmLiouville => {
                let diffusion = op.diffusion.clone().expect("validated");
                let reaction = op.reaction.clone().unwrap_or_else(|| vec![[0.0, 0.0], [op.length, 0.0]]);
                let kappa = diffusion.iter().map(|k| k[1]).fold(f64::INFINITY, f64::min);
                let interior = op.interior_points.unwrap_or(400);
                discretize_sturm_liouville(
                    |x| interpolate(&diffusion, x),
                    |x| interpolate(&reaction, x),
                    op.length,
                    interior,
                    op.modes,
                    kappa,
                )?
            }
        })
    }

    pub fn profile(&self) -> SpatialProfile {
        let src = self.source.as_ref().expect("validated");
        SpatialProfile::new(src.profile.clone(), src.profile_sigma.unwrap_or(f64::INFINITY))
    }

    pub fn source_spec(&self) -> Result<SourceSpec, fractail_core::Error> {
        let src = self.source.as_ref().expect("validated");
        let profile = self.profile();
        Ok(match (&src.polynomial, &src.segments) {
            (Some(c), _) => SourceSpec::polynomial(c.clone(), src.t0, profile)?,
            (_, Some(segs)) => SourceSpec::piecewise(
                segs.iter().map(|s| Segment::new(s.start, s.end, s.coeffs.clone())).collect(),
                src.t0,
                profile,
            )?,
            (None, None) => unreachable!("validated"),
        })
    }

    pub fn observation_spec(&self, system: &EigenSystem) -> Result<Option<ObservationSpec>, fractail_core::Error> {
        let Some(obs) = &self.observation else { return Ok(None) };
        Ok(match obs.kind {
            ObservationKind::Modal => None,
            ObservationKind::Interior => {
                let (lo, hi) = (obs.lo.expect("validated"), obs.hi.expect("validated"));
                Some(match obs.test.unwrap_or(TestFunction::Unit) {
                    TestFunction::Mode => {
                        ObservationSpec::against_mode(system, obs.mode.expect("validated") - 1, lo, hi)?
                    }
                    TestFunction::Unit => ObservationSpec::interior_fn(lo, hi, 2001, |_| 1.0),
                })
            }
            ObservationKind::Flux => Some(ObservationSpec::Flux {
                endpoints: obs
                    .endpoints
                    .as_ref()
                    .expect("validated")
                    .iter()
                    .map(|p| {
                        let end = match p.end {
                            EndpointName::Left => Endpoint::Left,
                            EndpointName::Right => Endpoint::Right,
                        };
                        (end, p.weight)
                    })
                    .collect(),
            }),
        })
    }

    /// Geometric grid from `[grid]`, endpoints included.
    pub fn times(&self) -> Vec<f64> {
        let g = self.grid.as_ref().expect("validated");
        geometric_grid(g.t_min, g.t_max, g.points_per_decade)
    }
}

pub fn geometric_grid(t_min: f64, t_max: f64, per_decade: usize) -> Vec<f64> {
    let n = ((t_max / t_min).log10() * per_decade as f64).ceil().max(1.0) as usize;
    (0..=n).map(|i| if i == n { t_max } else { t_min * (t_max / t_min).powf(i as f64 / n as f64) }).collect()
}

fn check_knots(table: &[[f64; 2]], length: f64, field: &'static str) -> Result<(), ConfigError> {
    if table.len() < 2 {
        return Err(invalid(field, "needs at least two knots"));
    }
    if table.windows(2).any(|w| !(w[1][0] > w[0][0])) {
        return Err(invalid(field, "knots must be strictly increasing in x"));
    }
    if table[0][0] > 0.0 || table[table.len() - 1][0] < length {
        return Err(invalid(field, "knots must cover [0, operator.length]"));
    }
    Ok(())
}

fn interpolate(table: &[[f64; 2]], x: f64) -> f64 {
    let i = table.partition_point(|k| k[0] <= x).clamp(1, table.len() - 1);
    let ([x0, y0], [x1, y1]) = (table[i - 1], table[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn validate_observation(obs: &ObservationTable, op: &OperatorTable) -> Result<(), ConfigError> {
    match obs.kind {
        ObservationKind::Modal => Ok(()),
        ObservationKind::Interior => {
            let lo = obs.lo.ok_or_else(|| invalid("observation.lo", "required for interior"))?;
            let hi = obs.hi.ok_or_else(|| invalid("observation.hi", "required for interior"))?;
            if !(lo >= 0.0 && hi > lo && hi <= op.length) {
                return Err(invalid("observation.hi", format!("need 0 <= lo < hi <= {}", op.length)));
            }
            if obs.test == Some(TestFunction::Mode) {
                let mode = obs.mode.ok_or_else(|| invalid("observation.mode", "required when test = \"mode\""))?;
                if mode == 0 || mode > op.modes {
                    return Err(invalid("observation.mode", format!("must be in 1..={}", op.modes)));
                }
            }
            Ok(())
        }
        ObservationKind::Flux => {
            let points = obs.endpoints.as_ref().ok_or_else(|| invalid("observation.endpoints", "required for flux"))?;
            if points.is_empty() {
                return Err(invalid("observation.endpoints", "needs at least one endpoint"));
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FORWARD: &str = r#"
experiment = "forward"
alpha = 0.5

[operator]
kind = "laplacian"
length = 1.0
modes = 8

[source]
t0 = 1.0
polynomial = [1.0]

[grid]
t_min = 2.0
t_max = 1e4
"#;

    #[test]
    fn parses_minimal_forward() {
        let s = Scenario::from_toml(FORWARD).unwrap();
        assert_eq!(s.experiment, ExperimentKind::Forward);
        assert_eq!(s.grid.as_ref().unwrap().points_per_decade, DEFAULT_POINTS_PER_DECADE);
        let t = s.times();
        assert_eq!(t[0], 2.0);
        assert_eq!(*t.last().unwrap(), 1e4);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = FORWARD.replace("modes = 8", "modes = 8\nmodez = 3");
        let err = Scenario::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("modez"), "{err}");
    }

    #[test]
    fn grid_inside_support_names_the_field() {
        let text = FORWARD.replace("t_min = 2.0", "t_min = 0.5");
        match Scenario::from_toml(&text).unwrap_err() {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "grid.t_min"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn alpha_one_only_for_contrast() {
        let text = FORWARD.replace("alpha = 0.5", "alpha = 1.0");
        assert!(matches!(Scenario::from_toml(&text), Err(ConfigError::Invalid { field: "alpha", .. })));
    }

    #[test]
    fn interpolation_is_piecewise_linear() {
        let t = [[0.0, 1.0], [1.0, 3.0], [2.0, 3.0]];
        assert_eq!(interpolate(&t, 0.5), 2.0);
        assert_eq!(interpolate(&t, 1.5), 3.0);
        assert_eq!(interpolate(&t, 2.0), 3.0);
    }
}

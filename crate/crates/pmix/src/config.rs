//! Experiment configuration: JSON text in, validated parameters out.
//!
//! Parsing runs in two passes. The header (`kind`, `seed`, `replicates`,
//! `output`) is read first and `params` is kept as raw text, which is then
//! parsed into the parameter type of that kind. Diagnostics carry the
//! absolute line and column and the path of the offending field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{source_name}:{line}:{column}: {field}: {message}")]
    Syntax { source_name: String, line: usize, column: usize, field: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Coefficients,
    GraphMixed,
    UstatBounds,
    SteinVerify,
    ChaosVerify,
}

impl Kind {
    pub const ALL: [Kind; 5] =
        [Kind::Coefficients, Kind::GraphMixed, Kind::UstatBounds, Kind::SteinVerify, Kind::ChaosVerify];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Coefficients => "coefficients",
            Kind::GraphMixed => "graph-mixed",
            Kind::UstatBounds => "ustat-bounds",
            Kind::SteinVerify => "stein-verify",
            Kind::ChaosVerify => "chaos-verify",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Kind::Coefficients => "Monte Carlo estimates of the six portmanteau coefficients and the assembled bound",
            Kind::GraphMixed => "edge count against Poisson pattern counts in a random disk graph, with rate fits",
            Kind::UstatBounds => "Gaussian and Poisson U-statistic bounds and de-poissonization coefficients",
            Kind::SteinVerify => "Chen-Stein solutions for random test functions, residuals and factors",
            Kind::ChaosVerify => "pathwise product formula residuals and isometry checks on a cell space",
        }
    }
}

type ParamsParser = fn(&str, &str, (usize, usize)) -> Result<Params, ConfigError>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header<'a> {
    kind: Kind,
    seed: u64,
    replicates: u64,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(borrow, default)]
    params: Option<&'a RawValue>,
}

/// A parsed and validated experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub replicates: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub params: Params,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Params {
    Coefficients(CoefficientsParams),
    GraphMixed(GraphMixedParams),
    UstatBounds(UstatBoundsParams),
    SteinVerify(SteinVerifyParams),
    ChaosVerify(ChaosVerifyParams),
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_str_named(&text, &path.display().to_string())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_str_named(text, "<config>")
    }

    fn from_str_named(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        let header: Header = parse_at(text, source_name, "", (0, 0))?;
        let params = match header.params {
            None => None,
            Some(raw) => {
                let offset = raw.get().as_ptr() as usize - text.as_ptr() as usize;
                let prefix = &text[..offset];
                let line = prefix.matches('\n').count();
                let column = offset - prefix.rfind('\n').map_or(0, |i| i + 1);
                Some((raw.get(), (line, column)))
            }
        };
        let p = |f: ParamsParser| match params {
            Some((raw, at)) => f(raw, source_name, at),
            None => f("{}", source_name, (0, 0)),
        };
        let params = match header.kind {
            Kind::Coefficients => p(|t, s, a| parse_at(t, s, "params", a).map(Params::Coefficients))?,
            Kind::GraphMixed => p(|t, s, a| parse_at(t, s, "params", a).map(Params::GraphMixed))?,
            Kind::UstatBounds => p(|t, s, a| parse_at(t, s, "params", a).map(Params::UstatBounds))?,
            Kind::SteinVerify => p(|t, s, a| parse_at(t, s, "params", a).map(Params::SteinVerify))?,
            Kind::ChaosVerify => p(|t, s, a| parse_at(t, s, "params", a).map(Params::ChaosVerify))?,
        };
        let cfg =
            Self { kind: header.kind, seed: header.seed, replicates: header.replicates, output: header.output, params };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(r) = o.replicates {
            self.replicates = r;
        }
        if let Some(p) = &o.output {
            self.output = Some(p.clone());
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let min = match self.kind {
            Kind::SteinVerify => 1,
            _ => 10,
        };
        if self.replicates < min {
            return Err(ConfigError::invalid("replicates", format!("must be at least {min}")));
        }
        match &self.params {
            Params::Coefficients(p) => p.validate(),
            Params::GraphMixed(p) => p.validate(),
            Params::UstatBounds(p) => p.validate(),
            Params::SteinVerify(p) => p.validate(),
            Params::ChaosVerify(p) => p.validate(),
        }
    }

    /// The configuration as JSON, as echoed into the run manifest.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("configuration serializes")
    }
}

fn parse_at<'de, T: Deserialize<'de>>(
    text: &'de str,
    source_name: &str,
    prefix: &str,
    at: (usize, usize),
) -> Result<T, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| located(e, source_name, prefix, at))?;
    de.end().map_err(|e| syntax(&e, ".".into(), source_name, prefix, at))?;
    Ok(value)
}

fn located(
    e: serde_path_to_error::Error<serde_json::Error>,
    source_name: &str,
    prefix: &str,
    at: (usize, usize),
) -> ConfigError {
    let path = e.path().to_string();
    syntax(e.inner(), path, source_name, prefix, at)
}

fn syntax(e: &serde_json::Error, path: String, source_name: &str, prefix: &str, at: (usize, usize)) -> ConfigError {
    let field = match (prefix.is_empty(), path == ".") {
        (true, true) => "(root)".to_string(),
        (true, false) => path,
        (false, true) => prefix.to_string(),
        (false, false) => format!("{prefix}.{path}"),
    };
    let line = at.0 + e.line();
    let column = if e.line() == 1 { at.1 + e.column() } else { e.column() };
    // serde_json appends " at line L column C" relative to the parsed slice.
    let msg = e.to_string();
    let message = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m).to_string();
    ConfigError::Syntax { source_name: source_name.into(), line, column, field, message }
}

fn check(ok: bool, field: &str, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, message))
    }
}

fn check_grid(n_grid: &[f64], field: &str) -> Result<(), ConfigError> {
    check(!n_grid.is_empty(), field, "must not be empty")?;
    for (i, n) in n_grid.iter().enumerate() {
        check(*n > 0.0 && n.is_finite(), &format!("{field}[{i}]"), "must be positive and finite")?;
    }
    Ok(())
}

fn check_box(lower: &[f64], upper: &[f64], field: &str) -> Result<(), ConfigError> {
    check(!lower.is_empty() && lower.len() == upper.len(), field, "lower and upper need the same positive length")?;
    for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
        check(l < u, &format!("{field}.upper[{i}]"), "must exceed the lower corner")?;
    }
    Ok(())
}

/// A box with an optional piecewise-constant density, or a finite cell space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
        intensity: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<PiecewiseDensity>,
    },
    Cells {
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseDensity {
    pub cells: Vec<usize>,
    pub values: Vec<f64>,
}

impl MeasureSpec {
    fn validate(&self, field: &str) -> Result<(), ConfigError> {
        match self {
            MeasureSpec::Box { lower, upper, intensity, density } => {
                check_box(lower, upper, field)?;
                check(*intensity > 0.0 && intensity.is_finite(), &format!("{field}.intensity"), "must be positive")?;
                if let Some(d) = density {
                    check(d.cells.len() == lower.len(), &format!("{field}.density.cells"), "need one count per axis")?;
                    let total: usize = d.cells.iter().product();
                    check(d.values.len() == total, &format!("{field}.density.values"), "need one value per cell")?;
                }
                Ok(())
            }
            MeasureSpec::Cells { weights } => {
                check(!weights.is_empty(), &format!("{field}.weights"), "must not be empty")?;
                check(
                    weights.iter().all(|w| *w > 0.0 && w.is_finite()),
                    &format!("{field}.weights"),
                    "must be positive",
                )
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeasureSpec::Box { lower, .. } => lower.len(),
            MeasureSpec::Cells { .. } => 1,
        }
    }
}

/// Rule for the `z`-integrals inside the coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ZGridSpec {
    Adaptive {
        #[serde(default = "default_order")]
        order: usize,
        #[serde(default = "one")]
        subdivide: usize,
    },
    Cells {
        cells: Vec<usize>,
    },
    Tensor {
        cells: usize,
        #[serde(default = "default_tensor_order")]
        order: usize,
    },
}

fn default_order() -> usize {
    4
}
fn default_tensor_order() -> usize {
    3
}
fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionalSpec {
    /// `η(A)`.
    Window { lower: Vec<f64>, upper: Vec<f64> },
    /// `(η(A) − μ(A))/√μ(A)`.
    CenteredWindow { lower: Vec<f64>, upper: Vec<f64> },
    /// `I₁(h)` with one value per cell (cell spaces only).
    FirstChaos { values: Vec<f64> },
    /// `Σ h` over distinct tuples, `h` given per cell tuple (cell spaces only).
    UStatistic {
        order: usize,
        values: Vec<f64>,
        #[serde(default)]
        normalize: bool,
    },
    /// Induced copies of a pattern in the disk graph of radius `radius`.
    Pattern { pattern: String, radius: f64 },
    /// The pattern count, centred and scaled by its exact moments.
    NormalizedPattern { pattern: String, radius: f64 },
}

impl FunctionalSpec {
    fn validate(&self, field: &str, measure: &MeasureSpec) -> Result<(), ConfigError> {
        let cells = match measure {
            MeasureSpec::Cells { weights } => Some(weights.len()),
            MeasureSpec::Box { .. } => None,
        };
        match self {
            FunctionalSpec::Window { lower, upper } | FunctionalSpec::CenteredWindow { lower, upper } => {
                check_box(lower, upper, field)?;
                check(lower.len() == measure.dim(), field, "window dimension differs from the measure")
            }
            FunctionalSpec::FirstChaos { values } => {
                let m = cells.ok_or_else(|| ConfigError::invalid(field, "needs a cell-space measure"))?;
                check(values.len() == m, &format!("{field}.values"), "need one value per cell")
            }
            FunctionalSpec::UStatistic { order, values, .. } => {
                let m = cells.ok_or_else(|| ConfigError::invalid(field, "needs a cell-space measure"))?;
                check(
                    (1..=pmix_core::kernel::MAX_ORDER).contains(order),
                    &format!("{field}.order"),
                    "must lie in 1..=4",
                )?;
                check(values.len() == m.pow(*order as u32), &format!("{field}.values"), "need cells^order values")
            }
            FunctionalSpec::Pattern { pattern, radius } | FunctionalSpec::NormalizedPattern { pattern, radius } => {
                check(cells.is_none(), field, "needs a box measure")?;
                parse_pattern(pattern).map_err(|m| ConfigError::invalid(format!("{field}.pattern"), m))?;
                check(*radius > 0.0 && radius.is_finite(), &format!("{field}.radius"), "must be positive")
            }
        }
    }
}

/// Pattern names: `edge`, `triangle`, `pathK`, `completeK`, `starK`, or an
/// upper-triangle adjacency string such as `110`.
pub fn parse_pattern(s: &str) -> Result<pmix_core::geomgraph::GraphPattern, String> {
    use pmix_core::geomgraph::GraphPattern;
    let num = |p: &str| -> Result<usize, String> {
        let k: usize = s[p.len()..].parse().map_err(|_| format!("bad order in {s:?}"))?;
        if (2..=pmix_core::geomgraph::MAX_PATTERN_ORDER).contains(&k) {
            Ok(k)
        } else {
            Err(format!("order of {s:?} must lie in 2..=5"))
        }
    };
    let r = match s {
        "edge" => Ok(GraphPattern::edge()),
        "triangle" => Ok(GraphPattern::triangle()),
        _ if s.starts_with("path") => Ok(GraphPattern::path(num("path")?)),
        _ if s.starts_with("complete") => Ok(GraphPattern::complete(num("complete")?)),
        _ if s.starts_with("star") => {
            let k = num("star")?;
            GraphPattern::new(k, &(1..k).map(|j| (0, j)).collect::<Vec<_>>())
        }
        _ => GraphPattern::parse(s),
    };
    r.map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Row-major `m × m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsParams {
    pub measure: MeasureSpec,
    #[serde(default)]
    pub poisson: Vec<FunctionalSpec>,
    #[serde(default)]
    pub gaussian: Vec<FunctionalSpec>,
    #[serde(default)]
    pub target: TargetSpec,
    #[serde(default, alias = "zGrid", skip_serializing_if = "Option::is_none")]
    pub z_grid: Option<ZGridSpec>,
    #[serde(default)]
    pub refine: bool,
    /// Replicates of `V` for the distance surrogate; zero skips it.
    #[serde(default)]
    pub distance_replicates: u64,
}

impl CoefficientsParams {
    fn validate(&self) -> Result<(), ConfigError> {
        self.measure.validate("params.measure")?;
        check(!self.poisson.is_empty() || !self.gaussian.is_empty(), "params", "need at least one functional")?;
        for (i, f) in self.poisson.iter().enumerate() {
            f.validate(&format!("params.poisson[{i}]"), &self.measure)?;
        }
        for (i, f) in self.gaussian.iter().enumerate() {
            f.validate(&format!("params.gaussian[{i}]"), &self.measure)?;
        }
        let (d, m) = (self.poisson.len(), self.gaussian.len());
        if let Some(l) = &self.target.lambdas {
            check(l.len() == d, "params.target.lambdas", "need one value per Poisson component")?;
        }
        if let Some(c) = &self.target.covariance {
            check(c.len() == m * m, "params.target.covariance", "need m × m values")?;
        }
        match &self.z_grid {
            Some(ZGridSpec::Adaptive { order, subdivide }) => {
                check(self.measure.dim() == 1, "params.z_grid", "the adaptive rule is for lines")?;
                check(*order >= 1 && *subdivide >= 1, "params.z_grid", "order and subdivide must be positive")?;
            }
            Some(ZGridSpec::Cells { cells }) => {
                check(cells.len() == self.measure.dim(), "params.z_grid.cells", "need one count per axis")?;
                check(cells.iter().all(|c| *c > 0), "params.z_grid.cells", "must be positive")?;
            }
            Some(ZGridSpec::Tensor { cells, order }) => {
                check(*cells > 0 && *order > 0, "params.z_grid", "cells and order must be positive")?;
            }
            None => {}
        }
        if self.distance_replicates > 0 {
            check(m <= 1, "params.distance_replicates", "the distance surrogate needs m ≤ 1")?;
            check(self.distance_replicates >= 10, "params.distance_replicates", "must be 0 or at least 10")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphMixedParams {
    pub pattern0: String,
    pub patterns: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<PiecewiseDensity>,
    pub radius_scale: f64,
    #[serde(alias = "nGrid")]
    pub n_grid: Vec<f64>,
    /// Also run with exactly `n` i.i.d. points at each grid value.
    pub depoissonized: bool,
    /// Sample sizes for the coupled de-poissonization gap.
    pub gap_grid: Vec<u64>,
}

impl Default for GraphMixedParams {
    fn default() -> Self {
        Self {
            pattern0: "edge".into(),
            patterns: vec!["triangle".into(), "path3".into()],
            lower: vec![0.0],
            upper: vec![1.0],
            density: None,
            radius_scale: 1.0,
            n_grid: vec![250.0, 1000.0, 4000.0, 16000.0],
            depoissonized: false,
            gap_grid: Vec::new(),
        }
    }
}

impl GraphMixedParams {
    fn validate(&self) -> Result<(), ConfigError> {
        parse_pattern(&self.pattern0).map_err(|m| ConfigError::invalid("params.pattern0", m))?;
        check(!self.patterns.is_empty(), "params.patterns", "must not be empty")?;
        for (i, p) in self.patterns.iter().enumerate() {
            parse_pattern(p).map_err(|m| ConfigError::invalid(format!("params.patterns[{i}]"), m))?;
        }
        check_box(&self.lower, &self.upper, "params")?;
        check(self.radius_scale > 0.0 && self.radius_scale.is_finite(), "params.radius_scale", "must be positive")?;
        check_grid(&self.n_grid, "params.n_grid")?;
        if self.depoissonized {
            check(
                parse_pattern(&self.pattern0).map(|p| p.order()) == Ok(2),
                "params.depoissonized",
                "needs pattern0 = edge",
            )?;
        }
        for (i, n) in self.gap_grid.iter().enumerate() {
            check(*n >= 2, &format!("params.gap_grid[{i}]"), "must be at least 2")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UstatBoundsParams {
    /// Cell masses at `n = 1`; the grid scales them by `n`.
    pub weights: Vec<f64>,
    pub order: usize,
    #[serde(alias = "nGrid")]
    pub n_grid: Vec<f64>,
    /// Cells at most `band` apart form the Poisson-regime indicator set.
    pub band: usize,
    /// Limit `λ` for the Poisson bound; defaults to `λₙ` at the last grid value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub d_const: f64,
    /// Largest `l` tabulated for the de-poissonization coefficients.
    pub max_l: u64,
}

impl Default for UstatBoundsParams {
    fn default() -> Self {
        Self {
            weights: vec![1.0; 6],
            order: 2,
            n_grid: vec![1.0, 4.0, 16.0, 64.0, 256.0],
            band: 0,
            lambda: None,
            d_const: pmix_core::bounds::POISSON_BOUND_CONSTANT,
            max_l: 3,
        }
    }
}

impl UstatBoundsParams {
    fn validate(&self) -> Result<(), ConfigError> {
        check(
            !self.weights.is_empty() && self.weights.len() <= pmix_core::kernel::MAX_CELLS,
            "params.weights",
            "need 1..=32 cells",
        )?;
        check(self.weights.iter().all(|w| *w > 0.0 && w.is_finite()), "params.weights", "must be positive")?;
        check((2..=pmix_core::kernel::MAX_ORDER).contains(&self.order), "params.order", "must lie in 2..=4")?;
        check_grid(&self.n_grid, "params.n_grid")?;
        check(self.n_grid.iter().all(|n| n.fract() == 0.0), "params.n_grid", "must hold integers")?;
        check(self.d_const > 0.0, "params.d_const", "must be positive")?;
        if let Some(l) = self.lambda {
            check(l > 0.0, "params.lambda", "must be positive")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteinVerifyParams {
    pub lambdas: Vec<f64>,
    /// Residuals are checked for `0 ≤ x ≤ x_max`.
    pub x_max: u64,
    pub constants: Vec<ConstantCase>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantCase {
    pub lambdas: Vec<f64>,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl Default for SteinVerifyParams {
    fn default() -> Self {
        Self {
            lambdas: vec![0.25, 0.5, 1.0, 2.0, 5.0],
            x_max: 200,
            constants: vec![
                ConstantCase { lambdas: vec![1.0], m: 0, c: None },
                ConstantCase { lambdas: vec![1.0, 2.0], m: 0, c: None },
                ConstantCase { lambdas: vec![1.0], m: 1, c: Some(1.0) },
                ConstantCase { lambdas: vec![0.5, 3.0], m: 2, c: None },
            ],
        }
    }
}

impl SteinVerifyParams {
    fn validate(&self) -> Result<(), ConfigError> {
        check(!self.lambdas.is_empty(), "params.lambdas", "must not be empty")?;
        check(self.lambdas.iter().all(|l| *l > 0.0 && l.is_finite()), "params.lambdas", "must be positive")?;
        check(self.x_max >= 2, "params.x_max", "must be at least 2")?;
        for (i, c) in self.constants.iter().enumerate() {
            let f = format!("params.constants[{i}]");
            check(!c.lambdas.is_empty(), &format!("{f}.lambdas"), "must not be empty")?;
            check(c.lambdas.iter().all(|l| *l > 0.0), &format!("{f}.lambdas"), "must be positive")?;
            check(
                c.m != 1 || c.c.is_some_and(|c| c > 0.0),
                &format!("{f}.c"),
                "a positive variance is required when m = 1",
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosVerifyParams {
    pub masses: Vec<f64>,
    pub kernel_trials: usize,
    /// Sampled configurations per product-formula check.
    pub configurations: u64,
    pub entry_bound: f64,
    pub product_orders: Vec<[usize; 2]>,
    pub isometry_orders: Vec<[usize; 2]>,
}

impl Default for ChaosVerifyParams {
    fn default() -> Self {
        Self {
            masses: vec![0.5, 1.0, 0.75, 1.25, 0.6, 0.9],
            kernel_trials: 3,
            configurations: 200,
            entry_bound: 2.0,
            product_orders: vec![[1, 1], [1, 2], [2, 2]],
            isometry_orders: vec![[1, 1], [1, 2], [2, 2]],
        }
    }
}

impl ChaosVerifyParams {
    fn validate(&self) -> Result<(), ConfigError> {
        check(!self.masses.is_empty() && self.masses.len() <= 8, "params.masses", "need 1..=8 cells")?;
        check(self.masses.iter().all(|w| *w > 0.0 && w.is_finite()), "params.masses", "must be positive")?;
        check(self.kernel_trials > 0, "params.kernel_trials", "must be positive")?;
        check(self.configurations > 0, "params.configurations", "must be positive")?;
        check(self.entry_bound > 0.0 && self.entry_bound.is_finite(), "params.entry_bound", "must be positive")?;
        for (name, list) in [("product_orders", &self.product_orders), ("isometry_orders", &self.isometry_orders)] {
            for (i, [p, q]) in list.iter().enumerate() {
                check(
                    (1..=2).contains(p) && (1..=2).contains(q),
                    &format!("params.{name}[{i}]"),
                    "orders must lie in 1..=2",
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_seed_is_located() {
        let e = ExperimentConfig::parse("{\n  \"kind\": \"stein-verify\",\n  \"replicates\": 5\n}").unwrap_err();
        let s = e.to_string();
        assert!(s.contains("missing field `seed`"), "{s}");
        assert!(s.starts_with("<config>:4:"), "{s}");
    }

    #[test]
    fn params_errors_carry_absolute_position_and_path() {
        let text = "{\"kind\": \"graph-mixed\", \"seed\": 1, \"replicates\": 20,\n \"params\": {\n  \"n_grid\": [1, \"x\"]\n }}";
        match ExperimentConfig::parse(text).unwrap_err() {
            ConfigError::Syntax { line, field, .. } => {
                assert_eq!(line, 3);
                assert_eq!(field, "params.n_grid[1]");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = ExperimentConfig::parse(
            r#"{"kind": "stein-verify", "seed": 1, "replicates": 5, "params": {"lambda": [1]}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("params.lambda"), "{e}");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let e = ExperimentConfig::parse(
            r#"{"kind": "graph-mixed", "seed": 1, "replicates": 20, "params": {"n_grid": [10, -1]}}"#,
        )
        .unwrap_err();
        assert_eq!(e.to_string(), "params.n_grid[1]: must be positive and finite");
    }

    #[test]
    fn defaults_and_overrides() {
        let mut c = ExperimentConfig::parse(r#"{"kind": "chaos-verify", "seed": 3, "replicates": 100}"#).unwrap();
        assert!(matches!(c.params, Params::ChaosVerify(_)));
        c.apply(&Overrides { seed: Some(9), replicates: Some(5), output: None }).unwrap_err();
        c.apply(&Overrides { seed: Some(9), replicates: Some(50), output: None }).unwrap();
        assert_eq!((c.seed, c.replicates), (9, 50));
    }

    #[test]
    fn pattern_names() {
        assert_eq!(parse_pattern("path3").unwrap().order(), 3);
        assert!(parse_pattern("triangle").unwrap().is_isomorphic(&parse_pattern("111").unwrap()));
        assert_eq!(parse_pattern("star4").unwrap().edge_count(), 3);
        assert!(parse_pattern("100001").is_err());
        assert!(parse_pattern("path9").is_err());
    }
}

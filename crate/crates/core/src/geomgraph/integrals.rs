//! Integrals of the pattern kernel `h_{Γ,t}` against powers of the control
//! measure.
//!
//! On the line every such integral is a piecewise polynomial between
//! breakpoints of the form `p ± j·t` (configuration points, box faces and
//! density jumps, `j < k`). Gauss rules on those pieces are exact for
//! piecewise constant densities. In higher dimension the same tensor rule is
//! only approximate and results carry a bias flag.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::disk::induced_mask;
use super::pattern::GraphPattern;
use crate::error::{invalid, Error, Result};
use crate::math::{binomial, factorial, integrate_adaptive, GaussRule};
use crate::rng::{replicate_rng, StreamRng};
use crate::space::{ControlMeasure, Density};
use crate::stats::{Estimate, RunningStats};

/// Integration measure for the free variables.
#[derive(Debug, Clone)]
pub(crate) enum Base {
    Measure(ControlMeasure),
    /// Lebesgue measure on ℝᵐ.
    Lebesgue(usize),
}

/// Nested piecewise Gauss integration over points that must stay within
/// `reach·t` of every point already placed.
#[derive(Debug, Clone)]
pub(crate) struct Completion {
    base: Base,
    t: f64,
    reach: usize,
    rule: GaussRule,
    subdiv: usize,
    /// Per-axis locations where the base density may jump.
    fixed: Vec<Vec<f64>>,
}

impl Completion {
    pub(crate) fn new(base: Base, t: f64, reach: usize) -> Self {
        let dim = match &base {
            Base::Measure(m) => m.dim(),
            Base::Lebesgue(d) => *d,
        };
        let fixed = match &base {
            Base::Measure(m) => (0..dim).map(|a| m.breakpoints(a)).collect(),
            Base::Lebesgue(_) => vec![Vec::new(); dim],
        };
        let custom = matches!(&base, Base::Measure(m) if matches!(m.density_kind(), Density::Custom { .. }));
        let (order, subdiv) = match (dim, custom) {
            (1, false) => (5, 1),
            (1, true) => (8, 4),
            _ => (3, 2),
        };
        Self { base, t, reach, rule: GaussRule::new(order), subdiv, fixed }
    }

    pub(crate) fn dim(&self) -> usize {
        self.fixed.len()
    }

    /// True when the density is locally constant away from its breakpoints,
    /// so interior values may be rescaled from a Lebesgue integral.
    pub(crate) fn exact_interior(&self) -> bool {
        match &self.base {
            Base::Measure(m) => !matches!(m.density_kind(), Density::Custom { .. }),
            Base::Lebesgue(_) => true,
        }
    }

    /// True when results are exact up to round-off.
    pub(crate) fn exact(&self) -> bool {
        self.dim() == 1
            && match &self.base {
                Base::Measure(m) => !matches!(m.density_kind(), Density::Custom { .. }),
                Base::Lebesgue(_) => true,
            }
    }

    fn weight(&self, y: &[f64]) -> f64 {
        match &self.base {
            Base::Measure(m) => m.intensity_at(y),
            Base::Lebesgue(_) => 1.0,
        }
    }

    /// Breakpoints along `axis` for the next variable, given placed points.
    fn pieces(&self, pts: &[f64], axis: usize) -> Vec<f64> {
        let dim = self.dim();
        let span = self.reach as f64 * self.t;
        let (mut lo, mut hi) = match &self.base {
            Base::Measure(m) => (m.lower()[axis], m.upper()[axis]),
            Base::Lebesgue(_) => (f64::NEG_INFINITY, f64::INFINITY),
        };
        for p in pts.chunks(dim) {
            lo = lo.max(p[axis] - span);
            hi = hi.min(p[axis] + span);
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Vec::new();
        }
        let mut b = vec![lo, hi];
        let r = self.reach as i64;
        let anchors = pts.chunks(dim).map(|p| p[axis]).chain(self.fixed[axis].iter().copied());
        for a in anchors {
            for j in -r..=r {
                let x = a + j as f64 * self.t;
                if x > lo && x < hi {
                    b.push(x);
                }
            }
        }
        b.sort_by(f64::total_cmp);
        let tol = 1e-14 * (hi - lo).max(self.t);
        b.dedup_by(|x, y| (*x - *y).abs() <= tol);
        b
    }

    /// `∫ g(pts, y₁..y_r) Π w(y_i) dy` over `remaining = r` free points.
    pub(crate) fn integrate(&self, pts: &mut Vec<f64>, remaining: usize, g: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
        if remaining == 0 {
            return g(pts);
        }
        let dim = self.dim();
        let axes: Vec<Vec<f64>> = (0..dim).map(|a| self.pieces(pts, a)).collect();
        if axes.iter().any(|b| b.len() < 2) {
            return 0.0;
        }
        // One-dimensional node lists per axis.
        let nodes: Vec<Vec<(f64, f64)>> = axes
            .iter()
            .map(|b| {
                let mut out = Vec::new();
                for w in b.windows(2) {
                    let h = (w[1] - w[0]) / self.subdiv as f64;
                    for s in 0..self.subdiv {
                        let (a0, a1) = (w[0] + s as f64 * h, w[0] + (s + 1) as f64 * h);
                        out.extend(self.rule.mapped(a0, a1));
                    }
                }
                out
            })
            .collect();
        let base = pts.len();
        pts.resize(base + dim, 0.0);
        let mut idx = vec![0usize; dim];
        let mut total = 0.0;
        'outer: loop {
            let mut w = 1.0;
            for a in 0..dim {
                let (x, wa) = nodes[a][idx[a]];
                pts[base + a] = x;
                w *= wa;
            }
            let dens = self.weight(&pts[base..]);
            if dens != 0.0 {
                total += w * dens * self.integrate(pts, remaining - 1, g);
            }
            for a in 0..dim {
                idx[a] += 1;
                if idx[a] < nodes[a].len() {
                    continue 'outer;
                }
                idx[a] = 0;
            }
            break;
        }
        pts.truncate(base);
        total
    }
}

/// `1{graph on pts ≅ Γ}` for a flattened point list.
pub(crate) fn pattern_indicator(pattern: &GraphPattern, t: f64, pts: &[f64], dim: usize) -> f64 {
    let mut refs: [&[f64]; super::pattern::MAX_PATTERN_ORDER] = [&[]; super::pattern::MAX_PATTERN_ORDER];
    for (i, p) in pts.chunks(dim).enumerate() {
        refs[i] = p;
    }
    if pattern.matches(induced_mask(&refs[..pattern.order()], t)) {
        1.0
    } else {
        0.0
    }
}

/// `∫ 1{fixed ∪ y ≅ Γ} μ^{k−|fixed|}(dy)`.
pub(crate) fn completion_integral(c: &Completion, pattern: &GraphPattern, fixed: &[f64]) -> f64 {
    let dim = c.dim();
    let free = pattern.order() - fixed.len() / dim;
    let mut pts = fixed.to_vec();
    c.integrate(&mut pts, free, &mut |p: &[f64]| pattern_indicator(pattern, c.t, p, dim))
}

fn check_distinct(points: &[&[f64]]) -> Result<()> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i] == points[j] {
                return Err(Error::DuplicatePoint { index_a: i, index_b: j });
            }
        }
    }
    Ok(())
}

/// `h_{Γ,t}(x₁..x_k) = 1/k!` if the disk graph on the tuple is isomorphic to
/// `Γ`, else 0.
pub fn pattern_kernel(pattern: &GraphPattern, t: f64, points: &[&[f64]]) -> Result<f64> {
    if points.len() != pattern.order() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} points", pattern.order()),
            found: format!("{}", points.len()),
        });
    }
    check_distinct(points)?;
    Ok(if pattern.matches(induced_mask(points, t)) { 1.0 / factorial(pattern.order()) } else { 0.0 })
}

/// Value of a projection integral with its error information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionValue {
    pub value: f64,
    pub se: f64,
    /// Deterministic quadrature with no discretisation error.
    pub exact: bool,
    /// Monte Carlo standard error above 5% of the value (or too few nodes).
    pub undersampled: bool,
}

/// `h_i(x) = C(k, i) ∫ h_{Γ,t}(x, y) μ^{k−i}(dy)`.
///
/// Lines use exact piecewise Gauss quadrature; higher dimensions use
/// `mc_nodes` Monte Carlo samples restricted to the `(k−1)t` neighbourhood of
/// `x₁`, drawn from a stream seeded by `seed`.
pub fn pattern_projection(
    pattern: &GraphPattern,
    t: f64,
    i: usize,
    x: &[&[f64]],
    measure: &ControlMeasure,
    mc_nodes: usize,
    seed: u64,
) -> Result<ProjectionValue> {
    let k = pattern.order();
    if i == 0 || i > k || x.len() != i {
        return Err(invalid("i", format!("need 1 ≤ i ≤ {k} and i points, got i = {i} with {} points", x.len())));
    }
    if !(t > 0.0) {
        return Err(invalid("t", "radius must be positive"));
    }
    check_distinct(x)?;
    let dim = measure.dim();
    if x.iter().any(|p| p.len() != dim) {
        return Err(Error::ShapeMismatch { expected: format!("points of dimension {dim}"), found: "other".into() });
    }
    let scale = binomial(k, i) / factorial(k);
    if i == k {
        let v = pattern_kernel(pattern, t, x)?;
        return Ok(ProjectionValue { value: v, se: 0.0, exact: true, undersampled: false });
    }
    let flat: Vec<f64> = x.iter().flat_map(|p| p.iter().copied()).collect();
    if dim == 1 {
        let c = Completion::new(Base::Measure(measure.clone()), t, k - 1);
        let v = scale * completion_integral(&c, pattern, &flat);
        return Ok(ProjectionValue { value: v, se: 0.0, exact: c.exact(), undersampled: false });
    }
    let free = k - i;
    let span = (k - 1) as f64 * t;
    let lo: Vec<f64> = (0..dim).map(|a| (x[0][a] - span).max(measure.lower()[a])).collect();
    let hi: Vec<f64> = (0..dim).map(|a| (x[0][a] + span).min(measure.upper()[a])).collect();
    if lo.iter().zip(&hi).any(|(a, b)| b <= a) {
        return Ok(ProjectionValue { value: 0.0, se: 0.0, exact: true, undersampled: false });
    }
    let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let mut rng: StreamRng = replicate_rng(seed, 0);
    let mut stats = RunningStats::new();
    let mut pts = flat.clone();
    for _ in 0..mc_nodes {
        pts.truncate(flat.len());
        let mut w = 1.0;
        for _ in 0..free {
            let start = pts.len();
            for a in 0..dim {
                let u: f64 = rng.random();
                pts.push(lo[a] + u * (hi[a] - lo[a]));
            }
            w *= vol * measure.intensity_at(&pts[start..]);
        }
        stats.push(w * pattern_indicator(pattern, t, &pts, dim));
    }
    let value = scale * stats.mean();
    let se = scale * stats.se();
    let undersampled = mc_nodes < 100 || se > 0.05 * value.abs();
    Ok(ProjectionValue { value, se, exact: false, undersampled })
}

/// `∫ p(x)^k dx` for the sampling density of `measure`.
pub fn density_power_integral(measure: &ControlMeasure, k: usize) -> Result<f64> {
    let vol = measure.volume();
    match measure.density_kind() {
        Density::Uniform => Ok(libm::pow(vol, 1.0 - k as f64)),
        Density::PiecewiseConstant { cells, values } => {
            let cell_vol = vol / cells.iter().product::<usize>() as f64;
            Ok(values.iter().map(|v| libm::pow(*v, k as f64)).sum::<f64>() * cell_vol)
        }
        Density::Custom { f, .. } => {
            if measure.dim() != 1 {
                let c = Completion::new(Base::Measure(measure.with_intensity(1.0)?), 1.0, 1);
                let mut pts = Vec::new();
                return Ok(c.integrate(&mut pts, 1, &mut |y: &[f64]| libm::pow(f(y), k as f64 - 1.0)));
            }
            integrate_adaptive(|x| libm::pow(f(&[x]), k as f64), measure.lower()[0], measure.upper()[0], 1e-14, 1e-12)
        }
    }
}

/// `∫ h_{Γ,1}(0, y₂..y_k) dy` over `(ℝᵐ)^{k−1}`.
///
/// Exact on the line; Monte Carlo with `mc_samples` draws otherwise.
pub fn unit_pattern_integral(pattern: &GraphPattern, dim: usize, mc_samples: usize, seed: u64) -> Result<Estimate> {
    let k = pattern.order();
    if dim == 0 {
        return Err(invalid("dim", "dimension must be positive"));
    }
    if dim == 1 {
        let c = Completion::new(Base::Lebesgue(1), 1.0, k - 1);
        return Ok(Estimate::exact(completion_integral(&c, pattern, &[0.0]) / factorial(k)));
    }
    if mc_samples < 2 {
        return Err(invalid("mc_samples", "need at least two samples"));
    }
    let span = (k - 1) as f64;
    let vol = libm::pow(2.0 * span, (dim * (k - 1)) as f64);
    let mut rng: StreamRng = replicate_rng(seed, 0);
    let mut stats = RunningStats::new();
    let mut pts = vec![0.0; dim * k];
    for _ in 0..mc_samples {
        for v in pts[dim..].iter_mut() {
            let u: f64 = rng.random();
            *v = -span + 2.0 * span * u;
        }
        stats.push(vol * pattern_indicator(pattern, 1.0, &pts, dim));
    }
    let s = 1.0 / factorial(k);
    Ok(Estimate::new(s * stats.mean(), s * stats.se()))
}

/// The limit `a = ∫p^k · ∫h_{Γ,1}(0, y) dy` of `E[count]` in the regime
/// `t_n^m = n^{−k/(k−1)}`.
pub fn limiting_poisson_parameter(
    pattern: &GraphPattern,
    measure: &ControlMeasure,
    mc_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let dens = density_power_integral(measure, pattern.order())?;
    let unit = unit_pattern_integral(pattern, measure.dim(), mc_samples, seed)?;
    Ok(Estimate::new(dens * unit.value, dens * unit.se))
}

/// Exact first two moments of an induced pattern count under the Poisson
/// measure, from the chaos expansion `Var = Σ i!‖f_i‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternMoments {
    pub mean: f64,
    pub variance: f64,
    pub exact: bool,
}

pub fn pattern_moments(pattern: &GraphPattern, t: f64, measure: &ControlMeasure) -> Result<PatternMoments> {
    if !(t > 0.0) {
        return Err(invalid("t", "radius must be positive"));
    }
    let c = Completion::new(Base::Measure(measure.clone()), t, pattern.order() - 1);
    moments_with(&c, pattern)
}

pub(crate) fn moments_with(c: &Completion, pattern: &GraphPattern) -> Result<PatternMoments> {
    let k = pattern.order();
    let kf = factorial(k);
    let mean = completion_integral(c, pattern, &[]) / kf;
    let mut variance = factorial(k) * mean / kf;
    for i in 1..k {
        let scale = binomial(k, i) / kf;
        let inner = c.clone();
        let mut pts = Vec::new();
        let norm2 = c.integrate(&mut pts, i, &mut |x: &[f64]| {
            let f = scale * completion_integral(&inner, pattern, x);
            f * f
        });
        variance += factorial(i) * norm2;
    }
    Ok(PatternMoments { mean, variance, exact: c.exact() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        let tri = GraphPattern::triangle();
        let close: [&[f64]; 3] = [&[0.0], &[0.1], &[0.2]];
        assert!((pattern_kernel(&tri, 0.5, &close).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let isolated: [&[f64]; 3] = [&[0.0], &[0.1], &[5.0]];
        assert_eq!(pattern_kernel(&tri, 0.5, &isolated).unwrap(), 0.0);
        assert_eq!(pattern_kernel(&GraphPattern::path(3), 0.5, &isolated).unwrap(), 0.0);
        let dup: [&[f64]; 3] = [&[0.0], &[0.0], &[0.2]];
        assert!(pattern_kernel(&tri, 0.5, &dup).is_err());
    }

    #[test]
    fn edge_projection_interval_length() {
        let m = ControlMeasure::uniform_unit(1, 1.0).unwrap();
        let v = pattern_projection(&GraphPattern::edge(), 0.2, 1, &[&[0.5]], &m, 0, 0).unwrap();
        assert!((v.value - 0.4).abs() < 1e-14 && v.exact);
        // Near the boundary only [0, 0.2) remains.
        let v = pattern_projection(&GraphPattern::edge(), 0.2, 1, &[&[0.0]], &m, 0, 0).unwrap();
        assert!((v.value - 0.2).abs() < 1e-14);
        let v = pattern_projection(&GraphPattern::edge(), 0.2, 2, &[&[0.0], &[0.1]], &m, 0, 0).unwrap();
        assert_eq!(v.value, 0.5);
    }

    #[test]
    fn limiting_parameter_oracles() {
        // Triangle region {|a|<1, |b|<1, |a−b|<1} has area 3. Path region, by
        // centre vertex: 0 gives 4 − 3 = 1; a gives 2∫₀¹ a da = 1; b likewise.
        let unif = ControlMeasure::uniform_unit(1, 1.0).unwrap();
        let tri = limiting_poisson_parameter(&GraphPattern::triangle(), &unif, 0, 0).unwrap();
        assert!((tri.value - 0.5).abs() < 1e-13, "{}", tri.value);
        let wide = ControlMeasure::uniform(vec![0.0], vec![2.0], 1.0).unwrap();
        let tri2 = limiting_poisson_parameter(&GraphPattern::triangle(), &wide, 0, 0).unwrap();
        assert!((tri2.value - 0.125).abs() < 1e-13);
        let path = limiting_poisson_parameter(&GraphPattern::path(3), &unif, 0, 0).unwrap();
        assert!((path.value - 0.5).abs() < 1e-13, "{}", path.value);
    }

    #[test]
    fn zero_density_cell_contributes_nothing() {
        // Density 0 on [0, ½) and 2 on [½, 1]: ∫f³ = ½·8 = 4.
        let d = crate::space::Density::PiecewiseConstant { cells: vec![2], values: vec![0.0, 2.0] };
        let m = ControlMeasure::new(vec![0.0], vec![1.0], d, 30.0).unwrap();
        let tri = limiting_poisson_parameter(&GraphPattern::triangle(), &m, 0, 0).unwrap();
        assert!((tri.value - 2.0).abs() < 1e-13, "{}", tri.value);
        for r in 0..20 {
            let c = crate::space::sample_configuration(&m, &mut crate::rng::replicate_rng(4, r)).unwrap();
            assert!(c.points().all(|x| x[0] >= 0.5));
        }
    }

    #[test]
    fn edge_moments_closed_form() {
        // Uniform on [0, 1] with intensity n: E = n²(2t − t²)/2 and
        // Var = E + n³ ∫ L(x)² dx with L(x) = |[x−t, x+t] ∩ [0, 1]|.
        let n = 50.0;
        let t = 0.1;
        let m = ControlMeasure::uniform_unit(1, n).unwrap();
        let mo = pattern_moments(&GraphPattern::edge(), t, &m).unwrap();
        let mean = n * n * (2.0 * t - t * t) / 2.0;
        // ∫L² = (1 − 2t)(2t)² + 2∫₀ᵗ (x + t)² dx = 4t²(1 − 2t) + 14t³/3.
        let l2 = 4.0 * t * t * (1.0 - 2.0 * t) + 14.0 * t * t * t / 3.0;
        assert!((mo.mean - mean).abs() < 1e-10 * mean);
        assert!((mo.variance - (mean + n * n * n * l2)).abs() < 1e-10 * mo.variance);
    }
}

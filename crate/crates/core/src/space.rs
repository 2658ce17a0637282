//! Control measures on boxes of ℝᵐ and Poisson configurations.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Error, Result};
use crate::math::integrate_adaptive;

/// A density callback shared across threads.
pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Probability density of the sampling law on the control box.
#[derive(Clone)]
pub enum Density {
    /// Constant density `1 / vol(box)`.
    Uniform,
    /// Constant on the cells of a regular grid over the box. `cells[i]` is the
    /// number of cells along axis `i`; `values` is row-major with the first
    /// axis varying slowest.
    PiecewiseConstant { cells: Vec<usize>, values: Vec<f64> },
    /// Arbitrary bounded density; `bound` must dominate it on the box.
    Custom { f: DensityFn, bound: f64 },
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Uniform => write!(f, "Uniform"),
            Density::PiecewiseConstant { cells, values } => {
                f.debug_struct("PiecewiseConstant").field("cells", cells).field("values", values).finish()
            }
            Density::Custom { bound, .. } => write!(f, "Custom {{ bound: {bound} }}"),
        }
    }
}

/// The control measure `μₙ = n·p` restricted to an axis-aligned box.
#[derive(Debug, Clone)]
pub struct ControlMeasure {
    lower: Vec<f64>,
    upper: Vec<f64>,
    density: Density,
    intensity: f64,
    density_bound: f64,
}

/// Axis-aligned half-open sub-box `[lower, upper)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Window {
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lower).zip(&self.upper).all(|((&v, &lo), &hi)| v >= lo && v < hi)
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    fn overlap_volume(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let mut v = 1.0;
        for i in 0..self.dim() {
            let a = self.lower[i].max(lo[i]);
            let b = self.upper[i].min(hi[i]);
            if b <= a {
                return 0.0;
            }
            v *= b - a;
        }
        v
    }

    pub fn intersects(&self, other: &Window) -> bool {
        self.overlap_volume(&other.lower, &other.upper) > 0.0
    }
}

impl ControlMeasure {
    /// Uniform density on `[lower, upper]` with total mass `intensity`.
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, intensity: f64) -> Result<Self> {
        Self::new(lower, upper, Density::Uniform, intensity)
    }

    pub fn uniform_unit(dim: usize, intensity: f64) -> Result<Self> {
        Self::uniform(vec![0.0; dim], vec![1.0; dim], intensity)
    }

    pub fn new(lower: Vec<f64>, upper: Vec<f64>, density: Density, intensity: f64) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(invalid("box", "corners must have the same positive dimension"));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(invalid("box", "lower corner must be strictly below the upper corner"));
        }
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return Err(invalid("intensity", "must be a finite nonnegative number"));
        }
        let vol: f64 = lower.iter().zip(&upper).map(|(a, b)| b - a).product();
        let density_bound = match &density {
            Density::Uniform => 1.0 / vol,
            Density::PiecewiseConstant { cells, values } => {
                if cells.len() != lower.len() || cells.iter().product::<usize>() != values.len() || cells.contains(&0) {
                    return Err(invalid("density", "cell grid does not match the value table"));
                }
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(invalid("density", "values must be finite and nonnegative"));
                }
                let ncell = values.len() as f64;
                let total: f64 = values.iter().sum::<f64>() * vol / ncell;
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid("density", alloc::format!("integrates to {total}, not 1")));
                }
                values.iter().cloned().fold(0.0, f64::max)
            }
            Density::Custom { bound, .. } => {
                if !(*bound > 0.0) || !bound.is_finite() {
                    return Err(invalid("density_bound", "must be positive and finite"));
                }
                *bound
            }
        };
        let m = Self { lower, upper, density, intensity, density_bound };
        if let Density::Custom { .. } = m.density {
            let total = m.probability_of(&m.full_window(), 1e-10)?;
            if (total - 1.0).abs() > 1e-6 {
                return Err(invalid("density", alloc::format!("integrates to {total}, not 1")));
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn density_bound(&self) -> f64 {
        self.density_bound
    }

    pub fn density_kind(&self) -> &Density {
        &self.density
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    /// Same box and density with a different total mass.
    pub fn with_intensity(&self, intensity: f64) -> Result<Self> {
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return Err(invalid("intensity", "must be a finite nonnegative number"));
        }
        let mut m = self.clone();
        m.intensity = intensity;
        Ok(m)
    }

    /// Replace the stored density bound (used to test the bound check).
    pub fn with_density_bound(mut self, bound: f64) -> Self {
        self.density_bound = bound;
        self
    }

    /// Closed-box membership.
    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((&v, &lo), &hi)| v >= lo && v <= hi)
    }

    /// Sampling density `p(x)`; zero outside the box.
    pub fn density(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match &self.density {
            Density::Uniform => 1.0 / self.volume(),
            Density::PiecewiseConstant { cells, values } => values[self.cell_index(cells, x)],
            Density::Custom { f, .. } => f(x),
        }
    }

    /// Intensity of `μₙ` at `x`, i.e. `n·p(x)`.
    pub fn intensity_at(&self, x: &[f64]) -> f64 {
        self.intensity * self.density(x)
    }

    fn cell_index(&self, cells: &[usize], x: &[f64]) -> usize {
        let mut idx = 0;
        for i in 0..self.dim() {
            let w = (self.upper[i] - self.lower[i]) / cells[i] as f64;
            let c = (((x[i] - self.lower[i]) / w) as usize).min(cells[i] - 1);
            idx = idx * cells[i] + c;
        }
        idx
    }

    /// Coordinates along `axis` where the density may jump (box faces included).
    pub fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let (lo, hi) = (self.lower[axis], self.upper[axis]);
        match &self.density {
            Density::PiecewiseConstant { cells, .. } => {
                let k = cells[axis];
                (0..=k).map(|j| lo + (hi - lo) * j as f64 / k as f64).collect()
            }
            _ => vec![lo, hi],
        }
    }

    pub fn full_window(&self) -> Window {
        Window { lower: self.lower.clone(), upper: self.upper.clone() }
    }

    /// A window inside the box.
    pub fn window(&self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Window> {
        if lower.len() != self.dim() || upper.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("{} coordinates", self.dim()),
                found: alloc::format!("{} / {}", lower.len(), upper.len()),
            });
        }
        for i in 0..self.dim() {
            if !(lower[i] < upper[i]) {
                return Err(invalid("window", "needs positive volume"));
            }
            if lower[i] < self.lower[i] || upper[i] > self.upper[i] {
                return Err(invalid("window", "must lie inside the control box"));
            }
        }
        Ok(Window { lower, upper })
    }

    /// `∫_A p` (a probability, without the factor n).
    pub fn probability_of(&self, window: &Window, rel_tol: f64) -> Result<f64> {
        match &self.density {
            Density::Uniform => Ok(window.overlap_volume(&self.lower, &self.upper) / self.volume()),
            Density::PiecewiseConstant { cells, values } => {
                let dim = self.dim();
                let mut total = 0.0;
                let mut idx = vec![0usize; dim];
                let mut lo = vec![0.0; dim];
                let mut hi = vec![0.0; dim];
                for v in values.iter() {
                    for i in 0..dim {
                        let w = (self.upper[i] - self.lower[i]) / cells[i] as f64;
                        lo[i] = self.lower[i] + w * idx[i] as f64;
                        hi[i] = lo[i] + w;
                    }
                    if *v != 0.0 {
                        total += v * window.overlap_volume(&lo, &hi);
                    }
                    // Odometer increment, last axis fastest.
                    for i in (0..dim).rev() {
                        idx[i] += 1;
                        if idx[i] < cells[i] {
                            break;
                        }
                        idx[i] = 0;
                    }
                }
                Ok(total)
            }
            Density::Custom { f, .. } => {
                let lo: Vec<f64> = (0..self.dim()).map(|i| window.lower[i].max(self.lower[i])).collect();
                let hi: Vec<f64> = (0..self.dim()).map(|i| window.upper[i].min(self.upper[i])).collect();
                if lo.iter().zip(&hi).any(|(a, b)| b <= a) {
                    return Ok(0.0);
                }
                let mut x = vec![0.0; self.dim()];
                nested_integral(&**f, &lo, &hi, &mut x, 0, rel_tol)
            }
        }
    }
}

fn nested_integral(
    f: &(dyn Fn(&[f64]) -> f64 + Send + Sync),
    lo: &[f64],
    hi: &[f64],
    x: &mut [f64],
    axis: usize,
    rel_tol: f64,
) -> Result<f64> {
    let dim = lo.len();
    let mut failure = None;
    let v = integrate_adaptive(
        |t| {
            x[axis] = t;
            if axis + 1 == dim {
                f(x)
            } else {
                let mut inner = x.to_vec();
                match nested_integral(f, lo, hi, &mut inner, axis + 1, rel_tol) {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            }
        },
        lo[axis],
        hi[axis],
        1e-14,
        rel_tol,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `μₙ(A) = n·∫_A p`.
pub fn control_mass(measure: &ControlMeasure, window: &Window) -> Result<f64> {
    Ok(measure.intensity * measure.probability_of(window, 1e-8)?)
}

/// A finite multiset of points of ℝᵐ, stored with flattened coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Configuration {
    dim: usize,
    coords: Vec<f64>,
}

impl Configuration {
    pub fn empty(dim: usize) -> Self {
        Self { dim, coords: Vec::new() }
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::ShapeMismatch {
                    expected: alloc::format!("{dim} coordinates"),
                    found: alloc::format!("{}", p.len()),
                });
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords })
    }

    /// One-dimensional configuration from scalar positions.
    pub fn from_scalars(xs: &[f64]) -> Self {
        Self { dim: 1, coords: xs.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    /// `self + δ_z` without a box check.
    pub fn with_point(&self, z: &[f64]) -> Self {
        let mut out = self.clone();
        out.push(z);
        out
    }

    /// The first `n` points (used for nested de-poissonized samples).
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self { dim: self.dim, coords: self.coords[..n * self.dim].to_vec() }
    }

    /// Error on the first pair of coincident points.
    pub fn check_distinct(&self) -> Result<()> {
        let n = self.len();
        if n < 2 {
            return Ok(());
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.point(a).partial_cmp(self.point(b)).unwrap_or(core::cmp::Ordering::Equal));
        for w in order.windows(2) {
            if self.point(w[0]) == self.point(w[1]) {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::DuplicatePoint { index_a: a, index_b: b });
            }
        }
        Ok(())
    }
}

/// Draw a realization of the Poisson process with control `measure`.
pub fn sample_configuration<R: Rng + ?Sized>(measure: &ControlMeasure, rng: &mut R) -> Result<Configuration> {
    let count = sample_poisson(measure.intensity, rng);
    sample_iid(measure, count, rng)
}

/// `count` i.i.d. points with density `p` (the de-poissonized sample).
pub fn sample_iid<R: Rng + ?Sized>(measure: &ControlMeasure, count: u64, rng: &mut R) -> Result<Configuration> {
    let dim = measure.dim();
    let mut config = Configuration { dim, coords: Vec::with_capacity(dim * count as usize) };
    let mut x = vec![0.0; dim];
    for _ in 0..count {
        loop {
            for i in 0..dim {
                let u: f64 = rng.random();
                x[i] = measure.lower[i] + u * (measure.upper[i] - measure.lower[i]);
            }
            if let Density::Uniform = measure.density {
                break;
            }
            let p = measure.density(&x);
            if p > measure.density_bound {
                return Err(Error::DensityBoundViolated { point: x.clone(), value: p, bound: measure.density_bound });
            }
            let u: f64 = rng.random();
            if u * measure.density_bound < p {
                break;
            }
        }
        config.push(&x);
    }
    Ok(config)
}

pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as u64
}

/// `config + δ_z`; the input is left untouched.
pub fn add_point(measure: &ControlMeasure, config: &Configuration, z: &[f64]) -> Result<Configuration> {
    if !measure.contains(z) {
        return Err(Error::OutsideBox { point: z.to_vec() });
    }
    let mut out = config.clone();
    out.push(z);
    Ok(out)
}

/// Number of configuration points inside the half-open window.
pub fn window_count(config: &Configuration, window: &Window) -> u64 {
    config.points().filter(|p| window.contains(p)).count() as u64
}

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::space::{control_mass, window_count, Configuration, ControlMeasure, Window};

/// Which Malliavin path a functional supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    UStatistic,
    MultipleIntegral,
    Composite,
}

/// A functional evaluated on one fixed configuration, ready for many
/// derivative queries.
pub trait Prepared {
    /// `F(ω)`.
    fn value(&self) -> f64;
    /// `D_z F(ω) = F(ω + δ_z) − F(ω)`.
    fn derivative(&self, z: &[f64]) -> f64;
    /// `−D_z L⁻¹ F(ω)`.
    fn neg_dlinv(&self, z: &[f64]) -> Result<f64>;
}

/// A deterministic map from configurations to reals.
pub trait Functional: Send + Sync {
    fn structure(&self) -> Structure;

    fn prepare<'a>(&'a self, config: &'a Configuration) -> Result<Box<dyn Prepared + 'a>>;

    /// `E[F]` when it is known in closed form.
    fn mean(&self) -> Option<f64> {
        None
    }

    /// Offsets `δ` such that, in dimension one, `z ↦ D_zF` and `z ↦ D_zL⁻¹F`
    /// are smooth away from `x + δ` for configuration points `x`.
    fn point_offsets(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Configuration-independent break locations (dimension one).
    fn fixed_breaks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Whether `D` and `DL⁻¹` are computed without discretisation error.
    fn quadrature_exact(&self) -> bool {
        true
    }
}

pub fn evaluate(f: &dyn Functional, config: &Configuration) -> Result<f64> {
    Ok(f.prepare(config)?.value())
}

/// `D_z F(ω)`; `z` must lie in the control box.
pub fn mall_d(f: &dyn Functional, measure: &ControlMeasure, config: &Configuration, z: &[f64]) -> Result<f64> {
    if !measure.contains(z) {
        return Err(Error::OutsideBox { point: z.to_vec() });
    }
    Ok(f.prepare(config)?.derivative(z))
}

/// `D_z L⁻¹ F(ω)` (note the sign: this is minus the quantity used in the
/// bound coefficients).
pub fn mall_dlinv(f: &dyn Functional, config: &Configuration, z: &[f64]) -> Result<f64> {
    Ok(-f.prepare(config)?.neg_dlinv(z)?)
}

/// `η(A)`: the count in a window, equal to `μ(A) + I₁(1_A)`.
#[derive(Debug, Clone)]
pub struct WindowCount {
    window: Window,
    mass: f64,
}

impl WindowCount {
    pub fn new(measure: &ControlMeasure, window: Window) -> Result<Self> {
        let mass = control_mass(measure, &window)?;
        Ok(Self { window, mass })
    }

    /// Use a precomputed `μ(A)`, e.g. one summed exactly like a z-rule.
    pub fn with_mass(window: Window, mass: f64) -> Self {
        Self { window, mass }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

struct PreparedWindow<'a> {
    w: &'a WindowCount,
    count: f64,
}

impl Prepared for PreparedWindow<'_> {
    fn value(&self) -> f64 {
        self.count
    }

    fn derivative(&self, z: &[f64]) -> f64 {
        if self.w.window.contains(z) {
            1.0
        } else {
            0.0
        }
    }

    fn neg_dlinv(&self, z: &[f64]) -> Result<f64> {
        Ok(self.derivative(z))
    }
}

impl Functional for WindowCount {
    fn structure(&self) -> Structure {
        Structure::MultipleIntegral
    }

    fn prepare<'a>(&'a self, config: &'a Configuration) -> Result<Box<dyn Prepared + 'a>> {
        Ok(Box::new(PreparedWindow { w: self, count: window_count(config, &self.window) as f64 }))
    }

    fn mean(&self) -> Option<f64> {
        Some(self.mass)
    }

    fn fixed_breaks(&self) -> Vec<f64> {
        alloc::vec![self.window.lower()[0], self.window.upper()[0]]
    }
}

/// `scale · (F − shift)`.
#[derive(Clone)]
pub struct Affine {
    inner: Arc<dyn Functional>,
    shift: f64,
    scale: f64,
}

impl Affine {
    pub fn new(inner: Arc<dyn Functional>, shift: f64, scale: f64) -> Self {
        Self { inner, shift, scale }
    }

    pub fn inner(&self) -> &Arc<dyn Functional> {
        &self.inner
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

struct PreparedAffine<'a> {
    inner: Box<dyn Prepared + 'a>,
    shift: f64,
    scale: f64,
}

impl Prepared for PreparedAffine<'_> {
    fn value(&self) -> f64 {
        self.scale * (self.inner.value() - self.shift)
    }

    fn derivative(&self, z: &[f64]) -> f64 {
        self.scale * self.inner.derivative(z)
    }

    fn neg_dlinv(&self, z: &[f64]) -> Result<f64> {
        Ok(self.scale * self.inner.neg_dlinv(z)?)
    }
}

impl Functional for Affine {
    fn structure(&self) -> Structure {
        self.inner.structure()
    }

    fn prepare<'a>(&'a self, config: &'a Configuration) -> Result<Box<dyn Prepared + 'a>> {
        Ok(Box::new(PreparedAffine { inner: self.inner.prepare(config)?, shift: self.shift, scale: self.scale }))
    }

    fn mean(&self) -> Option<f64> {
        self.inner.mean().map(|m| self.scale * (m - self.shift))
    }

    fn point_offsets(&self) -> Vec<f64> {
        self.inner.point_offsets()
    }

    fn fixed_breaks(&self) -> Vec<f64> {
        self.inner.fixed_breaks()
    }

    fn quadrature_exact(&self) -> bool {
        self.inner.quadrature_exact()
    }
}

type EvalFn = dyn Fn(&Configuration) -> f64 + Send + Sync;

/// An opaque functional: `D` by re-evaluation, no `DL⁻¹`.
#[derive(Clone)]
pub struct ClosureFunctional {
    name: String,
    f: Arc<EvalFn>,
}

impl ClosureFunctional {
    pub fn new<F: Fn(&Configuration) -> f64 + Send + Sync + 'static>(name: &str, f: F) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }
}

struct PreparedClosure<'a> {
    c: &'a ClosureFunctional,
    config: &'a Configuration,
    value: f64,
}

impl Prepared for PreparedClosure<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn derivative(&self, z: &[f64]) -> f64 {
        (self.c.f)(&self.config.with_point(z)) - self.value
    }

    fn neg_dlinv(&self, _z: &[f64]) -> Result<f64> {
        Err(Error::MissingDecomposition(self.c.name.clone()))
    }
}

impl Functional for ClosureFunctional {
    fn structure(&self) -> Structure {
        Structure::Composite
    }

    fn prepare<'a>(&'a self, config: &'a Configuration) -> Result<Box<dyn Prepared + 'a>> {
        let value = (self.f)(config);
        Ok(Box::new(PreparedClosure { c: self, config, value }))
    }
}

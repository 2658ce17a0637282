use alloc::boxed::Box;
use alloc::vec::Vec;

use super::disk::DiskGraph;
use super::integrals::{completion_integral, moments_with, Base, Completion, PatternMoments};
use super::pattern::GraphPattern;
use crate::chaos::{Functional, Prepared, Structure};
use crate::error::{invalid, Result};
use crate::math::factorial;
use crate::space::{Configuration, ControlMeasure};

/// Induced count of a pattern in the disk graph, as a U-statistic with
/// kernel `h_{Γ,t}` and exact Malliavin operators.
///
/// `D_zF` is the number of induced copies using `z`. For `−D_zL⁻¹F` the
/// chaos expansion gives
/// `Σ_{j<k} (j!/k!) Σ_{X ⊂ η, |X| = j} ∫ 1{{z} ∪ X ∪ y ≅ Γ} μ^{k−1−j}(dy)`,
/// whose top term is `D_zF / k`.
#[derive(Debug, Clone)]
pub struct PatternFunctional {
    pattern: GraphPattern,
    t: f64,
    measure: ControlMeasure,
    completion: Completion,
    moments: PatternMoments,
    /// `∫ h_{Γ,t}(0, y) dy` (Lebesgue); the `j = 0` term far from density jumps
    /// is this times the local intensity to the power `k − 1`.
    interior: f64,
}

impl PatternFunctional {
    pub fn new(pattern: GraphPattern, t: f64, measure: ControlMeasure) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(invalid("t", "radius must be positive and finite"));
        }
        let k = pattern.order();
        let completion = Completion::new(Base::Measure(measure.clone()), t, k - 1);
        let moments = moments_with(&completion, &pattern)?;
        let lebesgue = Completion::new(Base::Lebesgue(measure.dim()), t, k - 1);
        let origin = alloc::vec![0.0; measure.dim()];
        let interior = completion_integral(&lebesgue, &pattern, &origin) / factorial(k);
        Ok(Self { pattern, t, measure, completion, moments, interior })
    }

    pub fn pattern(&self) -> &GraphPattern {
        &self.pattern
    }

    pub fn radius(&self) -> f64 {
        self.t
    }

    pub fn measure(&self) -> &ControlMeasure {
        &self.measure
    }

    /// Exact mean and variance under the Poisson measure.
    pub fn moments(&self) -> PatternMoments {
        self.moments
    }

    /// `∫ h_{Γ,t}(z, y) μ^{k−1}(dy)`.
    pub fn isolated_term(&self, z: &[f64]) -> f64 {
        let k = self.pattern.order();
        let span = (k - 1) as f64 * self.t;
        let clear = self.completion.exact_interior()
            && (0..self.measure.dim()).all(|a| self.measure.breakpoints(a).iter().all(|b| (b - z[a]).abs() >= span));
        if clear {
            return libm::pow(self.measure.intensity_at(z), (k - 1) as f64) * self.interior;
        }
        completion_integral(&self.completion, &self.pattern, z) / factorial(k)
    }
}

struct PreparedPattern<'a> {
    f: &'a PatternFunctional,
    graph: DiskGraph<'a>,
    value: f64,
}

impl Prepared for PreparedPattern<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn derivative(&self, z: &[f64]) -> f64 {
        self.graph.count_with_point(z, &self.f.pattern) as f64
    }

    fn neg_dlinv(&self, z: &[f64]) -> Result<f64> {
        let f = self.f;
        let k = f.pattern.order();
        let kf = factorial(k);
        let mut total = f.isolated_term(z) + self.derivative(z) / k as f64;
        if k > 2 {
            let near = self.graph.points_near(z, (k - 1) as f64 * f.t);
            let dim = z.len();
            let mut fixed: Vec<f64> = Vec::with_capacity(k * dim);
            for j in 1..k - 1 {
                let w = factorial(j) / kf;
                for_each_subset(near.len(), j, |idx| {
                    fixed.clear();
                    fixed.extend_from_slice(z);
                    for &i in idx {
                        fixed.extend_from_slice(self.graph.config().point(near[i] as usize));
                    }
                    total += w * completion_integral(&f.completion, &f.pattern, &fixed);
                });
            }
        }
        Ok(total)
    }
}

fn for_each_subset<F: FnMut(&[usize])>(n: usize, j: usize, mut f: F) {
    if j > n {
        return;
    }
    let mut idx: Vec<usize> = (0..j).collect();
    loop {
        f(&idx);
        let mut a = j;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            if idx[a] < n - j + a {
                idx[a] += 1;
                for b in a + 1..j {
                    idx[b] = idx[b - 1] + 1;
                }
                break;
            }
        }
    }
}

impl Functional for PatternFunctional {
    fn structure(&self) -> Structure {
        Structure::UStatistic
    }

    fn prepare<'a>(&'a self, config: &'a Configuration) -> Result<Box<dyn Prepared + 'a>> {
        let graph = DiskGraph::new(config, self.t)?;
        let value = graph.count_patterns(&[&self.pattern])[0] as f64;
        Ok(Box::new(PreparedPattern { f: self, graph, value }))
    }

    fn mean(&self) -> Option<f64> {
        Some(self.moments.mean)
    }

    fn point_offsets(&self) -> Vec<f64> {
        let r = self.pattern.order() as i64 - 1;
        (-r..=r).map(|j| j as f64 * self.t).collect()
    }

    fn fixed_breaks(&self) -> Vec<f64> {
        let r = self.pattern.order() as i64 - 1;
        let mut out = Vec::new();
        for b in self.measure.breakpoints(0) {
            for j in -r..=r {
                out.push(b + j as f64 * self.t);
            }
        }
        out
    }

    fn quadrature_exact(&self) -> bool {
        self.moments.exact
    }
}

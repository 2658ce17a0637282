use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::functional::{Functional, Prepared, Structure};
use crate::error::{invalid, Error, Result};
use crate::math::{binomial, factorial};
use crate::space::{Configuration, ControlMeasure};

/// Largest number of product-quadrature nodes allowed for one projection.
pub const QUADRATURE_BUDGET: f64 = 1e8;

type KernelFn = dyn Fn(&[&[f64]]) -> f64 + Send + Sync;

/// `F = Σ_{x ∈ η^k_≠} h(x)` for a symmetric `h` on `(ℝᵐ)^k`.
#[derive(Clone)]
pub struct UStatistic {
    order: usize,
    h: Arc<KernelFn>,
    measure: ControlMeasure,
    quad_nodes: usize,
}

impl core::fmt::Debug for UStatistic {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("UStatistic").field("order", &self.order).field("measure", &self.measure).finish()
    }
}

impl UStatistic {
    pub fn new<H>(order: usize, h: H, measure: ControlMeasure) -> Result<Self>
    where
        H: Fn(&[&[f64]]) -> f64 + Send + Sync + 'static,
    {
        if order == 0 {
            return Err(invalid("order", "must be at least 1"));
        }
        Ok(Self { order, h: Arc::new(h), measure, quad_nodes: 64 })
    }

    /// Nodes per axis used by the `DL⁻¹` quadrature.
    pub fn with_quad_nodes(mut self, nodes: usize) -> Self {
        self.quad_nodes = nodes.max(1);
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn measure(&self) -> &ControlMeasure {
        &self.measure
    }

    pub fn kernel(&self, x: &[&[f64]]) -> f64 {
        (self.h)(x)
    }

    /// Spot-check symmetry on random tuples and random permutations.
    pub fn check_symmetry<R: Rng + ?Sized>(&self, rng: &mut R, trials: usize) -> Result<()> {
        let m = self.measure.dim();
        let k = self.order;
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let pts: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    (0..m)
                        .map(|a| {
                            let u: f64 = rng.random();
                            self.measure.lower()[a] + u * (self.measure.upper()[a] - self.measure.lower()[a])
                        })
                        .collect()
                })
                .collect();
            let mut perm: Vec<usize> = (0..k).collect();
            for i in (1..k).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            let a: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
            let b: Vec<&[f64]> = perm.iter().map(|&i| pts[i].as_slice()).collect();
            worst = worst.max(((self.h)(&a) - (self.h)(&b)).abs());
        }
        if worst > 1e-12 {
            Err(Error::NotSymmetric { deviation: worst })
        } else {
            Ok(())
        }
    }

    /// `fᵢ = C(k,i) ∫ h(x, y) μ^{k−i}(dy)` by midpoint product quadrature
    /// with `quad_nodes` points per axis.
    pub fn hoeffding_projection(&self, i: usize, quad_nodes: usize) -> Result<Projection> {
        let k = self.order;
        if i == 0 || i > k {
            return Err(invalid("i", alloc::format!("projection index must lie in 1..={k}")));
        }
        let nodes = libm::pow(quad_nodes as f64, (self.measure.dim() * (k - i)) as f64);
        if nodes > QUADRATURE_BUDGET {
            return Err(Error::QuadratureBudget { nodes, budget: QUADRATURE_BUDGET });
        }
        Ok(Projection {
            u: self.clone(),
            i,
            grid: if i == k { ProductGrid::empty() } else { ProductGrid::new(&self.measure, quad_nodes) },
        })
    }

    /// `Σ_{x ∈ η^j_≠} ∫ h(z, x, y) μ^{k−1−j}(dy)`, one term of `−D_zL⁻¹F`.
    fn local_term(&self, config: &Configuration, z: &[f64], j: usize, grid: &ProductGrid) -> f64 {
        let mut fixed: Vec<&[f64]> = vec![z];
        let mut acc = 0.0;
        ordered_tuples(config, j, &mut Vec::new(), &mut |xs| {
            fixed.truncate(1);
            fixed.extend(xs.iter().map(|&i| config.point(i)));
            acc += grid.integrate(self.order - 1 - j, &mut fixed, &*self.h);
        });
        acc
    }
}

/// Midpoint rule for one variable of `μ`: cell centers and masses.
#[derive(Debug, Clone)]
struct ProductGrid {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl ProductGrid {
    fn empty() -> Self {
        Self { points: Vec::new(), weights: Vec::new() }
    }

    fn new(measure: &ControlMeasure, nodes: usize) -> Self {
        let m = measure.dim();
        let total = nodes.pow(m as u32);
        let vol = measure.volume() / total as f64;
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rest = flat;
            let mut p = vec![0.0; m];
            for a in (0..m).rev() {
                let i = rest % nodes;
                rest /= nodes;
                let w = (measure.upper()[a] - measure.lower()[a]) / nodes as f64;
                p[a] = measure.lower()[a] + (i as f64 + 0.5) * w;
            }
            weights.push(measure.intensity_at(&p) * vol);
            points.push(p);
        }
        Self { points, weights }
    }

    /// `∫ h(fixed, y) μ^j(dy)`.
    fn integrate<'a>(&'a self, j: usize, fixed: &mut Vec<&'a [f64]>, h: &KernelFn) -> f64 {
        if j == 0 {
            return h(fixed);
        }
        let mut acc = 0.0;
        for (p, &w) in self.points.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            fixed.push(p);
            acc += w * self.integrate(j - 1, fixed, h);
            fixed.pop();
        }
        acc
    }
}

/// A lazily evaluated projection `fᵢ` of a [`UStatistic`].
#[derive(Debug, Clone)]
pub struct Projection {
    u: UStatistic,
    i: usize,
    grid: ProductGrid,
}

impl Projection {
    pub fn order(&self) -> usize {
        self.i
    }

    pub fn eval(&self, x: &[&[f64]]) -> f64 {
        let k = self.u.order;
        if self.i == k {
            return self.u.kernel(x);
        }
        let mut fixed: Vec<&[f64]> = x.to_vec();
        binomial(k, self.i) * self.grid.integrate(k - self.i, &mut fixed, &*self.u.h)
    }
}

fn ordered_tuples(config: &Configuration, j: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if cur.len() == j {
        f(cur);
        return;
    }
    for i in 0..config.len() {
        if cur.contains(&i) {
            continue;
        }
        cur.push(i);
        ordered_tuples(config, j, cur, f);
        cur.pop();
    }
}

/// `Σ_{x ∈ η^k_≠} h(x)` as `k!` times the sum over `k`-subsets.
pub fn ustat_eval(u: &UStatistic, config: &Configuration) -> Result<f64> {
    config.check_distinct()?;
    Ok(subset_sum(u, config, None))
}

/// Sum of `h` over `k`-subsets times `k!`, optionally forcing an extra point.
fn subset_sum(u: &UStatistic, config: &Configuration, forced: Option<&[f64]>) -> f64 {
    let k = u.order;
    let free = if forced.is_some() { k - 1 } else { k };
    let n = config.len();
    if n < free {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..free).collect();
    let mut pts: Vec<&[f64]> = Vec::with_capacity(k);
    let mut acc = 0.0;
    loop {
        pts.clear();
        if let Some(z) = forced {
            pts.push(z);
        }
        pts.extend(idx.iter().map(|&i| config.point(i)));
        acc += (u.h)(&pts);
        // Next combination in lexicographic order.
        let mut pos = free;
        loop {
            if pos == 0 {
                return acc * factorial(k);
            }
            pos -= 1;
            if idx[pos] < n - free + pos {
                idx[pos] += 1;
                for q in pos + 1..free {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
}

struct PreparedU<'a> {
    u: &'a UStatistic,
    config: &'a Configuration,
    value: f64,
    grid: ProductGrid,
}

impl Prepared for PreparedU<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn derivative(&self, z: &[f64]) -> f64 {
        // k·Σ over ordered (k−1)-tuples = k! · Σ over (k−1)-subsets.
        subset_sum(self.u, self.config, Some(z))
    }

    fn neg_dlinv(&self, z: &[f64]) -> Result<f64> {
        let k = self.u.order;
        Ok((0..k).map(|j| self.u.local_term(self.config, z, j, &self.grid)).sum())
    }
}

impl Functional for UStatistic {
    fn structure(&self) -> Structure {
        Structure::UStatistic
    }

    fn prepare<'a>(&'a self, config: &'a Configuration) -> Result<Box<dyn Prepared + 'a>> {
        let value = ustat_eval(self, config)?;
        let nodes = libm::pow(self.quad_nodes as f64, (self.measure.dim() * (self.order - 1)) as f64);
        if nodes > QUADRATURE_BUDGET {
            return Err(Error::QuadratureBudget { nodes, budget: QUADRATURE_BUDGET });
        }
        let grid = ProductGrid::new(&self.measure, self.quad_nodes);
        Ok(Box::new(PreparedU { u: self, config, value, grid }))
    }

    /// `DL⁻¹` integrates `h` on a midpoint grid, exact only for order one.
    fn quadrature_exact(&self) -> bool {
        self.order == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use crate::space::sample_configuration;

    fn close_pairs(radius: f64) -> impl Fn(&[&[f64]]) -> f64 + Send + Sync {
        move |x: &[&[f64]]| if (x[0][0] - x[1][0]).abs() < radius { 0.5 } else { 0.0 }
    }

    #[test]
    fn hand_enumeration() {
        let m = ControlMeasure::uniform_unit(1, 1.0).unwrap();
        let u = UStatistic::new(2, close_pairs(0.6), m.clone()).unwrap();
        assert_eq!(ustat_eval(&u, &Configuration::empty(1)).unwrap(), 0.0);
        let c = Configuration::from_scalars(&[0.0, 0.5, 1.0]);
        assert_eq!(ustat_eval(&u, &c).unwrap(), 2.0);
        let dup = Configuration::from_scalars(&[0.2, 0.2]);
        assert!(matches!(ustat_eval(&u, &dup), Err(Error::DuplicatePoint { .. })));
    }

    #[test]
    fn ordered_sum_oracle() {
        let m = ControlMeasure::uniform_unit(1, 25.0).unwrap();
        let h = |x: &[&[f64]]| libm::cos(x[0][0] * x[1][0] * 7.0);
        let u = UStatistic::new(2, h, m.clone()).unwrap();
        let c = sample_configuration(&m, &mut replicate_rng(2, 0)).unwrap();
        let mut ordered = 0.0;
        for i in 0..c.len() {
            for j in 0..c.len() {
                if i != j {
                    ordered += h(&[c.point(i), c.point(j)]);
                }
            }
        }
        let v = ustat_eval(&u, &c).unwrap();
        assert!((v - ordered).abs() < 1e-12 * (1.0 + ordered.abs()));
    }

    #[test]
    fn edge_projection() {
        let m = ControlMeasure::uniform_unit(1, 1.0).unwrap();
        let u = UStatistic::new(2, close_pairs(0.2), m).unwrap();
        let f1 = u.hoeffding_projection(1, 2000).unwrap();
        let v = f1.eval(&[&[0.5]]);
        assert!((v - 0.4).abs() < 1e-9, "{v}");
        let f2 = u.hoeffding_projection(2, 2000).unwrap();
        assert_eq!(f2.eval(&[&[0.5], &[0.6]]), 0.5);
    }

    #[test]
    fn budget_guard() {
        let m = ControlMeasure::uniform_unit(2, 1.0).unwrap();
        let u = UStatistic::new(4, |_: &[&[f64]]| 1.0, m).unwrap();
        assert!(matches!(u.hoeffding_projection(1, 100), Err(Error::QuadratureBudget { .. })));
    }

    #[test]
    fn symmetry_spot_check() {
        let m = ControlMeasure::uniform_unit(1, 1.0).unwrap();
        let good = UStatistic::new(2, close_pairs(0.3), m.clone()).unwrap();
        assert!(good.check_symmetry(&mut replicate_rng(0, 0), 200).is_ok());
        let bad = UStatistic::new(2, |x: &[&[f64]]| x[0][0], m).unwrap();
        assert!(bad.check_symmetry(&mut replicate_rng(0, 0), 200).is_err());
    }

    #[test]
    fn derivative_matches_add_one_cost() {
        let m = ControlMeasure::uniform_unit(1, 15.0).unwrap();
        let u = UStatistic::new(3, |x: &[&[f64]]| x[0][0] * x[1][0] * x[2][0], m.clone()).unwrap().with_quad_nodes(8);
        let c = sample_configuration(&m, &mut replicate_rng(8, 1)).unwrap();
        let p = u.prepare(&c).unwrap();
        let z = [0.37];
        let direct = ustat_eval(&u, &c.with_point(&z)).unwrap() - ustat_eval(&u, &c).unwrap();
        assert!((p.derivative(&z) - direct).abs() < 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn product_kernel_dlinv() {
        // h = x·y·w, μ = n·Lebesgue on [0,1]; ∫ y μ(dy) = n/2 exactly under the midpoint rule.
        let n = 6.0;
        let m = ControlMeasure::uniform_unit(1, n).unwrap();
        let u = UStatistic::new(3, |x: &[&[f64]]| x[0][0] * x[1][0] * x[2][0], m.clone()).unwrap().with_quad_nodes(4);
        let c = Configuration::from_scalars(&[0.1, 0.4, 0.7]);
        let z = 0.3;
        let s1: f64 = 1.2;
        let s2: f64 = 0.1 * 0.4 + 0.1 * 0.7 + 0.4 * 0.7;
        let expected = z * (n / 2.0) * (n / 2.0) + z * s1 * (n / 2.0) + z * 2.0 * s2;
        let got = u.prepare(&c).unwrap().neg_dlinv(&[z]).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} {expected}");
    }
}

//! Exact multiple integrals for kernels that are constant on grid cells.
//!
//! Points of a configuration are distinct, but several may share a cell. A
//! sum over ordered tuples of distinct points therefore reduces to a sum over
//! cell tuples weighted by products of falling factorials of cell counts.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::kernel::{contract, symmetrize, DiscreteMeasure, SymKernel, Tensor};
use crate::math::{binomial, factorial};
use crate::space::{sample_poisson, Configuration, ControlMeasure, Density};

/// Regular cell grid over a control box, carrying the induced cell space.
#[derive(Debug, Clone)]
pub struct CellGrid {
    measure: ControlMeasure,
    cells: Vec<usize>,
    space: Arc<DiscreteMeasure>,
}

impl CellGrid {
    /// Grid whose cell masses are the control mass of each cell.
    pub fn regular(measure: ControlMeasure, cells: Vec<usize>) -> Result<Self> {
        if cells.len() != measure.dim() || cells.contains(&0) {
            return Err(invalid("cells", "need a positive cell count per axis"));
        }
        let total: usize = cells.iter().product();
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; cells.len()];
        for _ in 0..total {
            let lo: Vec<f64> = (0..cells.len()).map(|a| axis_edge(&measure, &cells, a, idx[a])).collect();
            let hi: Vec<f64> = (0..cells.len()).map(|a| axis_edge(&measure, &cells, a, idx[a] + 1)).collect();
            let w = measure.window(lo, hi)?;
            weights.push(crate::space::control_mass(&measure, &w)?);
            for a in (0..cells.len()).rev() {
                idx[a] += 1;
                if idx[a] < cells[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        let space = Arc::new(DiscreteMeasure::new(weights)?);
        Ok(Self { measure, cells, space })
    }

    /// Cells `[i/M, (i+1)/M)` of `[0, 1]` with prescribed masses.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let space = DiscreteMeasure::new(weights)?;
        let total = space.total_mass();
        let m = space.cells();
        let values = space.weights().iter().map(|w| w * m as f64 / total).collect();
        let measure =
            ControlMeasure::new(vec![0.0], vec![1.0], Density::PiecewiseConstant { cells: vec![m], values }, total)?;
        Ok(Self { measure, cells: vec![m], space: Arc::new(space) })
    }

    pub fn measure(&self) -> &ControlMeasure {
        &self.measure
    }

    pub fn space(&self) -> &Arc<DiscreteMeasure> {
        &self.space
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.space.cells()
    }

    /// Cell containing `x` (points on the upper face go to the last cell).
    pub fn cell_of(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        for (a, &n) in self.cells.iter().enumerate() {
            let lo = self.measure.lower()[a];
            let w = (self.measure.upper()[a] - lo) / n as f64;
            let c = libm::floor((x[a] - lo) / w).max(0.0) as usize;
            idx = idx * n + c.min(n - 1);
        }
        idx
    }

    /// Center of cell `c`.
    pub fn center(&self, mut c: usize) -> Vec<f64> {
        let d = self.cells.len();
        let mut out = vec![0.0; d];
        for a in (0..d).rev() {
            let i = c % self.cells[a];
            c /= self.cells[a];
            out[a] =
                0.5 * (axis_edge(&self.measure, &self.cells, a, i) + axis_edge(&self.measure, &self.cells, a, i + 1));
        }
        out
    }

    /// Indicator of the cells whose centers lie in a half-open window.
    pub fn cells_in(&self, window: &crate::space::Window) -> Vec<bool> {
        (0..self.cell_count()).map(|c| window.contains(&self.center(c))).collect()
    }

    pub fn counts(&self, config: &Configuration) -> Vec<u32> {
        let mut out = vec![0u32; self.cell_count()];
        for p in config.points() {
            out[self.cell_of(p)] += 1;
        }
        out
    }
}

fn axis_edge(measure: &ControlMeasure, cells: &[usize], axis: usize, i: usize) -> f64 {
    let lo = measure.lower()[axis];
    let hi = measure.upper()[axis];
    if i == cells[axis] {
        hi
    } else {
        lo + (hi - lo) * i as f64 / cells[axis] as f64
    }
}

/// Independent `Poisson(wᵢ)` cell counts: the law of the grid counts of a
/// Poisson process with the matching control.
pub fn sample_counts<R: Rng + ?Sized>(space: &DiscreteMeasure, rng: &mut R) -> Vec<u32> {
    space.weights().iter().map(|&w| sample_poisson(w, rng) as u32).collect()
}

/// `Σ_{x ∈ η^q_≠} g(x)` for a kernel constant on cells.
pub fn distinct_sum(g: &SymKernel, counts: &[u32]) -> f64 {
    let q = g.order();
    if q == 0 {
        return g.values()[0];
    }
    let occupied: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    if occupied.is_empty() {
        return 0.0;
    }
    let mut remaining: Vec<u32> = counts.to_vec();
    distinct_rec(g.values(), counts.len(), q, 0, 0, &occupied, &mut remaining)
}

fn distinct_rec(
    values: &[f64],
    m: usize,
    q: usize,
    depth: usize,
    flat: usize,
    occupied: &[usize],
    remaining: &mut [u32],
) -> f64 {
    if depth == q {
        return values[flat];
    }
    let mut acc = 0.0;
    for &c in occupied {
        let avail = remaining[c];
        if avail == 0 {
            continue;
        }
        remaining[c] -= 1;
        acc += avail as f64 * distinct_rec(values, m, q, depth + 1, flat * m + c, occupied, remaining);
        remaining[c] += 1;
    }
    acc
}

/// A symmetric kernel with all its marginals `f̄ᵢ = ∫ f dμ^{q−i}` cached.
#[derive(Debug, Clone)]
pub struct PreparedKernel {
    marginals: Vec<SymKernel>,
}

impl PreparedKernel {
    pub fn new(f: SymKernel) -> Self {
        let q = f.order();
        let mut marginals: Vec<SymKernel> = (0..q).map(|i| f.integrate_out(q - i)).collect();
        marginals.push(f);
        Self { marginals }
    }

    pub fn order(&self) -> usize {
        self.marginals.len() - 1
    }

    pub fn kernel(&self) -> &SymKernel {
        &self.marginals[self.order()]
    }

    /// `f̄ᵢ`, the kernel with `q − i` arguments integrated out.
    pub fn marginal(&self, i: usize) -> &SymKernel {
        &self.marginals[i]
    }

    /// `I_q(f)` on a configuration given by cell counts.
    pub fn eval(&self, counts: &[u32]) -> f64 {
        let q = self.order();
        let mut acc = 0.0;
        for i in 0..=q {
            let sign = if (q - i).is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += sign * binomial(q, i) * distinct_sum(&self.marginals[i], counts);
        }
        acc
    }
}

/// `I_q(f)` by inclusion–exclusion over distinct sub-tuples. Rejects
/// tensors that are not symmetric.
pub fn multiple_integral_eval(f: &Tensor, grid: &CellGrid, config: &Configuration) -> Result<f64> {
    let counts = grid.counts(config);
    multiple_integral_counts(f, &counts)
}

pub fn multiple_integral_counts(f: &Tensor, counts: &[u32]) -> Result<f64> {
    if counts.len() != f.space().cells() {
        return Err(Error::ShapeMismatch {
            expected: alloc::format!("{} cell counts", f.space().cells()),
            found: alloc::format!("{}", counts.len()),
        });
    }
    let k = SymKernel::from_tensor_any_order(f.clone())?;
    Ok(PreparedKernel::new(k).eval(counts))
}

/// Right-hand side of the product formula,
/// `Σ_r r! C(p,r) C(q,r) Σ_l C(r,l) I_{p+q−r−l}(sym(f ⋆_r^l g))`.
pub fn product_formula_rhs(f: &SymKernel, g: &SymKernel, counts: &[u32]) -> Result<f64> {
    let (p, q) = (f.order(), g.order());
    let mut total = 0.0;
    for r in 0..=p.min(q) {
        let outer = factorial(r) * binomial(p, r) * binomial(q, r);
        for l in 0..=r {
            let c = contract(f, g, r, l)?;
            let term = PreparedKernel::new(symmetrize(&c)).eval(counts);
            total += outer * binomial(r, l) * term;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space_a() -> (Arc<DiscreteMeasure>, Vec<bool>) {
        (Arc::new(DiscreteMeasure::new(vec![1.0, 1.0, 0.5]).unwrap()), vec![true, true, false])
    }

    #[test]
    fn compensated_count() {
        let (s, a) = space_a();
        let f = SymKernel::indicator_power(s.clone(), &a, 1).unwrap();
        // Three points in A, one outside.
        let counts = [2, 1, 1];
        assert_eq!(PreparedKernel::new(f).eval(&counts), 1.0);
        let zero = SymKernel::from_values(s, 2, vec![0.0; 9]).unwrap();
        assert_eq!(PreparedKernel::new(zero).eval(&counts), 0.0);
    }

    #[test]
    fn second_order_indicator() {
        let (s, a) = space_a();
        let f = SymKernel::indicator_power(s, &a, 2).unwrap();
        assert_eq!(PreparedKernel::new(f).eval(&[2, 1, 0]), -2.0);
    }

    #[test]
    fn distinct_sum_matches_point_enumeration() {
        let s = Arc::new(DiscreteMeasure::new(vec![1.0, 2.0, 0.5]).unwrap());
        let g = SymKernel::from_fn(s, 2, |i| (1 + i[0] + i[1]) as f64).unwrap();
        let counts = [3u32, 0, 2];
        let labels: Vec<usize> =
            counts.iter().enumerate().flat_map(|(c, &n)| core::iter::repeat_n(c, n as usize)).collect();
        let mut brute = 0.0;
        for a in 0..labels.len() {
            for b in 0..labels.len() {
                if a != b {
                    brute += g.get(&[labels[a], labels[b]]);
                }
            }
        }
        assert_eq!(distinct_sum(&g, &counts), brute);
    }

    #[test]
    fn nonsymmetric_rejected() {
        let s = Arc::new(DiscreteMeasure::new(vec![1.0, 1.0]).unwrap());
        let t = Tensor::new(s, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(multiple_integral_counts(&t, &[1, 1]), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn grid_cells_and_centers() {
        let g = CellGrid::from_weights(vec![1.0, 2.0, 1.0, 4.0]).unwrap();
        assert_eq!(g.cell_of(&[0.0]), 0);
        assert_eq!(g.cell_of(&[0.3]), 1);
        assert_eq!(g.cell_of(&[1.0]), 3);
        assert_eq!(g.center(2), vec![0.625]);
        let m = ControlMeasure::uniform_unit(2, 8.0).unwrap();
        let r = CellGrid::regular(m, vec![2, 2]).unwrap();
        assert_eq!(r.space().weights(), &[2.0; 4]);
        assert_eq!(r.cell_of(&[0.7, 0.2]), 2);
    }
}

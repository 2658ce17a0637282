use alloc::boxed::Box;
use alloc::vec::Vec;

use super::cells::{distinct_sum, CellGrid, PreparedKernel};
use super::functional::{Functional, Prepared, Structure};
use crate::error::{invalid, Error, Result};
use crate::kernel::SymKernel;
use crate::math::{binomial, factorial};
use crate::space::Configuration;

/// `F = E[F] + Σᵢ Iᵢ(fᵢ)` with finitely many cell kernels.
#[derive(Debug, Clone)]
pub struct ChaosDecomposition {
    mean: f64,
    projections: Vec<SymKernel>,
}

impl ChaosDecomposition {
    /// `projections[i − 1]` must have order `i`.
    pub fn new(mean: f64, projections: Vec<SymKernel>) -> Result<Self> {
        if projections.is_empty() {
            return Err(Error::MissingDecomposition("no chaos projections supplied".into()));
        }
        let space = projections[0].space().clone();
        for (i, f) in projections.iter().enumerate() {
            if f.order() != i + 1 {
                return Err(invalid(
                    "projections",
                    alloc::format!("entry {i} has order {}, expected {}", f.order(), i + 1),
                ));
            }
            if f.space() != &space {
                return Err(invalid("projections", "kernels live on different cell spaces"));
            }
        }
        Ok(Self { mean, projections })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn order(&self) -> usize {
        self.projections.len()
    }

    /// `fᵢ` for `1 ≤ i ≤ order`.
    pub fn projection(&self, i: usize) -> &SymKernel {
        &self.projections[i - 1]
    }

    pub fn projections(&self) -> &[SymKernel] {
        &self.projections
    }

    /// `Var F = Σᵢ i! ‖fᵢ‖²`.
    pub fn variance(&self) -> f64 {
        self.projections.iter().enumerate().map(|(i, f)| factorial(i + 1) * f.norm(2) * f.norm(2)).sum()
    }
}

/// A functional with a known finite chaos expansion on a cell grid.
#[derive(Debug, Clone)]
pub struct CellChaos {
    grid: CellGrid,
    decomposition: ChaosDecomposition,
    kernels: Vec<PreparedKernel>,
    /// `sections[i − 1][c]` is `fᵢ(c, ·)`.
    sections: Vec<Vec<PreparedKernel>>,
}

impl CellChaos {
    pub fn new(grid: CellGrid, decomposition: ChaosDecomposition) -> Result<Self> {
        if decomposition.projection(1).space() != grid.space() {
            return Err(invalid("grid", "decomposition lives on a different cell space"));
        }
        let kernels = decomposition.projections.iter().map(|f| PreparedKernel::new(f.clone())).collect();
        let sections = decomposition
            .projections
            .iter()
            .map(|f| (0..grid.cell_count()).map(|c| PreparedKernel::new(f.section(c))).collect())
            .collect();
        Ok(Self { grid, decomposition, kernels, sections })
    }

    /// `I₁(h)` for a cell function `h`.
    pub fn first_chaos(grid: CellGrid, h: SymKernel) -> Result<Self> {
        Self::new(grid, ChaosDecomposition::new(0.0, alloc::vec![h])?)
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn decomposition(&self) -> &ChaosDecomposition {
        &self.decomposition
    }

    pub fn eval_counts(&self, counts: &[u32]) -> f64 {
        self.decomposition.mean + self.kernels.iter().map(|k| k.eval(counts)).sum::<f64>()
    }

    /// `D_zF` for `z` in cell `c`: `Σᵢ i·I_{i−1}(fᵢ(c,·))`.
    pub fn derivative_counts(&self, counts: &[u32], c: usize) -> f64 {
        self.sections.iter().enumerate().map(|(i, s)| (i + 1) as f64 * s[c].eval(counts)).sum()
    }

    /// `−D_zL⁻¹F` for `z` in cell `c`: `Σᵢ I_{i−1}(fᵢ(c,·))`.
    pub fn neg_dlinv_counts(&self, counts: &[u32], c: usize) -> f64 {
        self.sections.iter().map(|s| s[c].eval(counts)).sum()
    }
}

struct PreparedCellChaos<'a> {
    f: &'a CellChaos,
    counts: Vec<u32>,
}

impl Prepared for PreparedCellChaos<'_> {
    fn value(&self) -> f64 {
        self.f.eval_counts(&self.counts)
    }

    fn derivative(&self, z: &[f64]) -> f64 {
        self.f.derivative_counts(&self.counts, self.f.grid.cell_of(z))
    }

    fn neg_dlinv(&self, z: &[f64]) -> Result<f64> {
        Ok(self.f.neg_dlinv_counts(&self.counts, self.f.grid.cell_of(z)))
    }
}

impl Functional for CellChaos {
    fn structure(&self) -> Structure {
        Structure::MultipleIntegral
    }

    fn prepare<'a>(&'a self, config: &'a Configuration) -> Result<Box<dyn Prepared + 'a>> {
        Ok(Box::new(PreparedCellChaos { f: self, counts: self.grid.counts(config) }))
    }

    fn mean(&self) -> Option<f64> {
        Some(self.decomposition.mean)
    }

    fn fixed_breaks(&self) -> Vec<f64> {
        grid_breaks(&self.grid)
    }
}

fn grid_breaks(grid: &CellGrid) -> Vec<f64> {
    let m = grid.measure();
    let n = grid.cells_per_axis()[0];
    (0..=n).map(|i| m.lower()[0] + (m.upper()[0] - m.lower()[0]) * i as f64 / n as f64).collect()
}

/// `F = Σ_{x ∈ η^k_≠} h(x)` for a cell kernel `h`.
#[derive(Debug, Clone)]
pub struct CellUStatistic {
    grid: CellGrid,
    h: SymKernel,
    /// `sections[c]` is `h(c, ·)` with its marginals cached.
    sections: Vec<PreparedKernel>,
}

impl CellUStatistic {
    pub fn new(grid: CellGrid, h: SymKernel) -> Result<Self> {
        if h.space() != grid.space() {
            return Err(invalid("grid", "kernel lives on a different cell space"));
        }
        let sections = (0..grid.cell_count()).map(|c| PreparedKernel::new(h.section(c))).collect();
        Ok(Self { grid, h, sections })
    }

    pub fn order(&self) -> usize {
        self.h.order()
    }

    pub fn kernel(&self) -> &SymKernel {
        &self.h
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    /// `fᵢ = C(k,i) ∫ h dμ^{k−i}`; exact on the cell space.
    pub fn hoeffding_projection(&self, i: usize) -> Result<SymKernel> {
        let k = self.order();
        if i == 0 || i > k {
            return Err(invalid("i", alloc::format!("projection index must lie in 1..={k}")));
        }
        if i == k {
            return Ok(self.h.clone());
        }
        Ok(self.h.integrate_out(k - i).scaled(binomial(k, i)))
    }

    pub fn decomposition(&self) -> Result<ChaosDecomposition> {
        let k = self.order();
        let projections = (1..=k).map(|i| self.hoeffding_projection(i)).collect::<Result<Vec<_>>>()?;
        ChaosDecomposition::new(self.expectation(), projections)
    }

    /// `E F = ∫ h dμ^k`.
    pub fn expectation(&self) -> f64 {
        self.h.integrate_out(self.order()).values()[0]
    }

    pub fn eval_counts(&self, counts: &[u32]) -> f64 {
        distinct_sum(&self.h, counts)
    }

    /// `D_zF = k Σ_{x ∈ η^{k−1}_≠} h(z, x)` for `z` in cell `c`.
    pub fn derivative_counts(&self, counts: &[u32], c: usize) -> f64 {
        self.order() as f64 * distinct_sum(self.sections[c].kernel(), counts)
    }

    /// `−D_zL⁻¹F = Σ_{j<k} Σ_{x ∈ η^j_≠} ∫ h(z, x, y) μ^{k−1−j}(dy)`.
    ///
    /// Follows from the projection formula since
    /// `Σ_{i>j} (−1)^{i−1−j} C(k,i) C(i−1,j) = 1` for `0 ≤ j < k`.
    pub fn neg_dlinv_counts(&self, counts: &[u32], c: usize) -> f64 {
        let s = &self.sections[c];
        (0..self.order()).map(|j| distinct_sum(s.marginal(j), counts)).sum()
    }
}

struct PreparedCellU<'a> {
    f: &'a CellUStatistic,
    counts: Vec<u32>,
}

impl Prepared for PreparedCellU<'_> {
    fn value(&self) -> f64 {
        self.f.eval_counts(&self.counts)
    }

    fn derivative(&self, z: &[f64]) -> f64 {
        self.f.derivative_counts(&self.counts, self.f.grid.cell_of(z))
    }

    fn neg_dlinv(&self, z: &[f64]) -> Result<f64> {
        Ok(self.f.neg_dlinv_counts(&self.counts, self.f.grid.cell_of(z)))
    }
}

impl Functional for CellUStatistic {
    fn structure(&self) -> Structure {
        Structure::UStatistic
    }

    fn prepare<'a>(&'a self, config: &'a Configuration) -> Result<Box<dyn Prepared + 'a>> {
        Ok(Box::new(PreparedCellU { f: self, counts: self.grid.counts(config) }))
    }

    fn mean(&self) -> Option<f64> {
        Some(self.expectation())
    }

    fn fixed_breaks(&self) -> Vec<f64> {
        grid_breaks(&self.grid)
    }
}

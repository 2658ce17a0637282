use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::chaos::{CellGrid, Functional};
use crate::error::{invalid, Result};
use crate::math::GaussRule;
use crate::space::{Configuration, ControlMeasure};

/// How the inner integral `∫ · μ(dz)` is discretised in every replicate.
#[derive(Debug, Clone)]
pub enum ZGrid {
    /// One node per cell at its centre, weighted by the cell mass. Exact for
    /// integrands that are constant on cells.
    Cells(CellGrid),
    /// Lines only: Gauss rules on the pieces between the box faces, density
    /// jumps, the functionals' fixed breaks and `x + δ` for configuration
    /// points `x` and the functionals' point offsets `δ`.
    Adaptive { order: usize, subdivide: usize },
    /// Regular cells per axis with a tensor Gauss rule in each.
    Tensor { cells: usize, order: usize },
}

impl ZGrid {
    pub fn adaptive() -> Self {
        ZGrid::Adaptive { order: 4, subdivide: 1 }
    }

    /// The same rule with every cell or piece halved.
    pub fn refined(&self) -> Option<Self> {
        match self {
            ZGrid::Cells(_) => None,
            ZGrid::Adaptive { order, subdivide } => Some(ZGrid::Adaptive { order: *order, subdivide: 2 * subdivide }),
            ZGrid::Tensor { cells, order } => Some(ZGrid::Tensor { cells: 2 * cells, order: *order }),
        }
    }

    pub fn validate(&self, measure: &ControlMeasure) -> Result<()> {
        match self {
            ZGrid::Cells(g) => {
                if g.measure().dim() != measure.dim() {
                    return Err(invalid("z_grid", "cell grid dimension differs from the control measure"));
                }
            }
            ZGrid::Adaptive { order, subdivide } => {
                if measure.dim() != 1 {
                    return Err(invalid("z_grid", format!("adaptive rule needs dimension 1, got {}", measure.dim())));
                }
                if *order == 0 || *subdivide == 0 {
                    return Err(invalid("z_grid", "order and subdivide must be positive"));
                }
            }
            ZGrid::Tensor { cells, order } => {
                if *cells == 0 || *order == 0 {
                    return Err(invalid("z_grid", "cells and order must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Quadrature nodes and `μ`-weights for one configuration.
    pub fn rule(&self, measure: &ControlMeasure, config: &Configuration, fs: &[Arc<dyn Functional>]) -> ZRule {
        self.rule_with_breaks(measure, config, fs, &[])
    }

    /// As [`ZGrid::rule`], with additional break locations for the adaptive
    /// rule (window faces, say).
    pub fn rule_with_breaks(
        &self,
        measure: &ControlMeasure,
        config: &Configuration,
        fs: &[Arc<dyn Functional>],
        extra: &[f64],
    ) -> ZRule {
        match self {
            ZGrid::Cells(g) => {
                let space = g.space();
                let mut nodes = Vec::with_capacity(g.cell_count() * measure.dim());
                let mut weights = Vec::with_capacity(g.cell_count());
                for c in 0..g.cell_count() {
                    nodes.extend(g.center(c));
                    weights.push(space.weight(c));
                }
                ZRule { dim: measure.dim(), nodes, weights, pieces: g.cell_count() }
            }
            ZGrid::Adaptive { order, subdivide } => {
                let (lo, hi) = (measure.lower()[0], measure.upper()[0]);
                let mut b = measure.breakpoints(0);
                b.push(lo);
                b.push(hi);
                b.extend_from_slice(extra);
                for f in fs {
                    b.extend(f.fixed_breaks());
                    let offsets = f.point_offsets();
                    if !offsets.is_empty() {
                        for x in config.points() {
                            b.extend(offsets.iter().map(|d| x[0] + d));
                        }
                    }
                }
                b.retain(|x| *x >= lo && *x <= hi);
                b.sort_by(f64::total_cmp);
                b.dedup();
                let rule = GaussRule::new(*order);
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                let mut pieces = 0;
                for w in b.windows(2) {
                    if w[1] <= w[0] {
                        continue;
                    }
                    let h = (w[1] - w[0]) / *subdivide as f64;
                    for s in 0..*subdivide {
                        let a0 = w[0] + s as f64 * h;
                        let a1 = if s + 1 == *subdivide { w[1] } else { a0 + h };
                        pieces += 1;
                        for (x, wx) in rule.mapped(a0, a1) {
                            let d = measure.intensity_at(&[x]);
                            if d != 0.0 {
                                nodes.push(x);
                                weights.push(wx * d);
                            }
                        }
                    }
                }
                ZRule { dim: 1, nodes, weights, pieces }
            }
            ZGrid::Tensor { cells, order } => {
                let dim = measure.dim();
                let rule = GaussRule::new(*order);
                let axes: Vec<Vec<(f64, f64)>> = (0..dim)
                    .map(|a| {
                        let (lo, hi) = (measure.lower()[a], measure.upper()[a]);
                        let h = (hi - lo) / *cells as f64;
                        (0..*cells).flat_map(|c| rule.mapped(lo + c as f64 * h, lo + (c + 1) as f64 * h)).collect()
                    })
                    .collect();
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                let mut idx = vec![0usize; dim];
                let mut z = vec![0.0; dim];
                'outer: loop {
                    let mut w = 1.0;
                    for a in 0..dim {
                        let (x, wx) = axes[a][idx[a]];
                        z[a] = x;
                        w *= wx;
                    }
                    let d = measure.intensity_at(&z);
                    if d != 0.0 {
                        nodes.extend_from_slice(&z);
                        weights.push(w * d);
                    }
                    for a in 0..dim {
                        idx[a] += 1;
                        if idx[a] < axes[a].len() {
                            continue 'outer;
                        }
                        idx[a] = 0;
                    }
                    break;
                }
                ZRule { dim, nodes, weights, pieces: cells.pow(dim as u32) }
            }
        }
    }

    /// `∫ f dμ` with the configuration-free version of the rule. Used to
    /// compute targets such as `μ(A)` with exactly the summation that the
    /// estimators apply.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(
        &self,
        measure: &ControlMeasure,
        fs: &[Arc<dyn Functional>],
        f: F,
    ) -> f64 {
        self.rule(measure, &Configuration::empty(measure.dim()), fs).integrate(f)
    }
}

/// Nodes and weights of a discretised `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    pieces: usize,
}

impl ZRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Number of cells or pieces the rule was assembled from.
    pub fn pieces(&self) -> usize {
        self.pieces
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.node(i))).sum()
    }
}

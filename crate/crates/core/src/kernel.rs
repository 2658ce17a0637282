//! Dense symmetric kernels on a finite weighted cell space.
//!
//! A [`DiscreteMeasure`] is read as a partition of a non-atomic space into
//! `M` cells of masses `w₁…w_M`; a kernel is a function that is constant on
//! products of cells. Every integral against `μ^q` is then a finite weighted
//! sum, so norms and contractions below are exact up to rounding.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Largest supported number of cells.
pub const MAX_CELLS: usize = 32;
/// Largest supported order of a symmetric kernel.
pub const MAX_ORDER: usize = 4;
/// Largest dense tensor a contraction may produce.
const MAX_ENTRIES: usize = 1 << 24;

/// Finite cell space with positive cell masses.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() > MAX_CELLS {
            return Err(invalid("weights", alloc::format!("need 1..={MAX_CELLS} cells, got {}", weights.len())));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(invalid("weights", "cell masses must be positive and finite"));
        }
        Ok(Self { weights })
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, cell: usize) -> f64 {
        self.weights[cell]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `μ(A)` for a set of cells, summed in increasing cell order.
    pub fn mass_of(&self, cells: &[bool]) -> f64 {
        self.weights.iter().zip(cells).filter(|(_, &c)| c).map(|(w, _)| *w).sum()
    }

    /// `μ^q` mass of every cell tuple, row-major.
    fn product_weights(&self, q: usize) -> Vec<f64> {
        let m = self.cells();
        let mut out = vec![1.0; m.pow(q as u32)];
        for (flat, v) in out.iter_mut().enumerate() {
            let mut rest = flat;
            for _ in 0..q {
                *v *= self.weights[rest % m];
                rest /= m;
            }
        }
        out
    }
}

/// Dense order-`q` tensor over the cells of a shared space; not necessarily
/// symmetric. Order 0 is a scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    order: usize,
    space: Arc<DiscreteMeasure>,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(space: Arc<DiscreteMeasure>, order: usize, values: Vec<f64>) -> Result<Self> {
        let expected = space.cells().checked_pow(order as u32).filter(|n| *n <= MAX_ENTRIES);
        match expected {
            Some(n) if n == values.len() => {}
            Some(n) => {
                return Err(Error::ShapeMismatch {
                    expected: alloc::format!("{n} values"),
                    found: values.len().to_string(),
                })
            }
            None => return Err(Error::Unsupported("tensor too large for dense storage".into())),
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "entries must be finite"));
        }
        Ok(Self { order, space, values })
    }

    pub fn zeros(space: Arc<DiscreteMeasure>, order: usize) -> Self {
        let n = space.cells().pow(order as u32);
        Self { order, space, values: vec![0.0; n] }
    }

    pub fn from_fn<F: FnMut(&[usize]) -> f64>(space: Arc<DiscreteMeasure>, order: usize, mut f: F) -> Result<Self> {
        let m = space.cells();
        let mut idx = vec![0usize; order];
        let n = m.pow(order as u32);
        let mut values = Vec::with_capacity(n);
        for flat in 0..n {
            unflatten(flat, m, &mut idx);
            values.push(f(&idx));
        }
        Self::new(space, order, values)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn space(&self) -> &Arc<DiscreteMeasure> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[flatten(idx, self.space.cells())]
    }

    /// Largest deviation between `f` and any of its argument permutations.
    pub fn asymmetry(&self) -> f64 {
        let m = self.space.cells();
        let perms = permutations(self.order);
        let mut idx = vec![0usize; self.order];
        let mut permuted = vec![0usize; self.order];
        let mut worst: f64 = 0.0;
        for (flat, &v) in self.values.iter().enumerate() {
            unflatten(flat, m, &mut idx);
            for p in &perms {
                for (j, &pj) in p.iter().enumerate() {
                    permuted[j] = idx[pj];
                }
                worst = worst.max((v - self.values[flatten(&permuted, m)]).abs());
            }
        }
        worst
    }

    /// `(Σ |f|^p Π w)^{1/p}`.
    pub fn norm(&self, p: u32) -> f64 {
        let w = self.space.product_weights(self.order);
        let s: f64 = self.values.iter().zip(&w).map(|(v, w)| libm::pow(v.abs(), p as f64) * w).sum();
        libm::pow(s, 1.0 / p as f64)
    }

    pub fn inner(&self, other: &Tensor) -> Result<f64> {
        same_space(&self.space, &other.space)?;
        if self.order != other.order {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("order {}", self.order),
                found: alloc::format!("order {}", other.order),
            });
        }
        let w = self.space.product_weights(self.order);
        Ok(self.values.iter().zip(&other.values).zip(&w).map(|((a, b), w)| a * b * w).sum())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Tensor, b: f64) -> Result<Tensor> {
        same_space(&self.space, &other.space)?;
        if self.order != other.order {
            return Err(invalid("order", "linear combination needs equal orders"));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Tensor { order: self.order, space: self.space.clone(), values })
    }

    pub fn scaled(&self, c: f64) -> Tensor {
        Tensor { order: self.order, space: self.space.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }
}

/// A tensor validated (or made) symmetric under permutation of its arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct SymKernel(Tensor);

/// Symmetry tolerance used on construction.
pub const SYMMETRY_TOL: f64 = 1e-12;

impl SymKernel {
    /// Validate symmetry of an order `1..=4` tensor.
    pub fn new(tensor: Tensor) -> Result<Self> {
        if tensor.order == 0 || tensor.order > MAX_ORDER {
            return Err(Error::Unsupported(alloc::format!("kernel order {} outside 1..={MAX_ORDER}", tensor.order)));
        }
        Self::from_tensor_any_order(tensor)
    }

    /// Like [`SymKernel::new`] but accepts order 0 (constants) and the larger
    /// orders produced by contractions.
    pub fn from_tensor_any_order(tensor: Tensor) -> Result<Self> {
        let dev = tensor.asymmetry();
        if dev > SYMMETRY_TOL * (1.0 + tensor.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
            return Err(Error::NotSymmetric { deviation: dev });
        }
        Ok(Self(tensor))
    }

    pub fn from_values(space: Arc<DiscreteMeasure>, order: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(Tensor::new(space, order, values)?)
    }

    pub fn from_fn<F: FnMut(&[usize]) -> f64>(space: Arc<DiscreteMeasure>, order: usize, f: F) -> Result<Self> {
        Self::new(Tensor::from_fn(space, order, f)?)
    }

    /// Constant kernel of order 0.
    pub fn constant(space: Arc<DiscreteMeasure>, c: f64) -> Self {
        Self(Tensor { order: 0, space, values: vec![c] })
    }

    /// `1_A ⊗ … ⊗ 1_A` (order `q`).
    pub fn indicator_power(space: Arc<DiscreteMeasure>, set: &[bool], q: usize) -> Result<Self> {
        Self::from_fn(space, q, |idx| if idx.iter().all(|&i| set[i]) { 1.0 } else { 0.0 })
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.order
    }

    pub fn space(&self) -> &Arc<DiscreteMeasure> {
        &self.0.space
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.0.get(idx)
    }

    pub fn norm(&self, p: u32) -> f64 {
        self.0.norm(p)
    }

    pub fn inner(&self, other: &SymKernel) -> Result<f64> {
        self.0.inner(&other.0)
    }

    pub fn scaled(&self, c: f64) -> SymKernel {
        SymKernel(self.0.scaled(c))
    }

    /// `f(c, ·)`: the order `q−1` section at the first argument.
    pub fn section(&self, cell: usize) -> SymKernel {
        let m = self.space().cells();
        let block = m.pow(self.order() as u32 - 1);
        let values = self.0.values[cell * block..(cell + 1) * block].to_vec();
        SymKernel(Tensor { order: self.order() - 1, space: self.space().clone(), values })
    }

    /// `∫ f(x, y) μ^j(dy)` over the last `j` arguments; order `q − j`.
    pub fn integrate_out(&self, j: usize) -> SymKernel {
        debug_assert!(j <= self.order());
        let m = self.space().cells();
        let block = m.pow(j as u32);
        let w = self.space().product_weights(j);
        let values = self.0.values.chunks_exact(block).map(|c| c.iter().zip(&w).map(|(v, w)| v * w).sum()).collect();
        SymKernel(Tensor { order: self.order() - j, space: self.space().clone(), values })
    }
}

fn same_space(a: &Arc<DiscreteMeasure>, b: &Arc<DiscreteMeasure>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(invalid("space", "kernels live on different cell spaces"))
    }
}

#[inline]
fn flatten(idx: &[usize], m: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * m + i)
}

#[inline]
fn unflatten(mut flat: usize, m: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % m;
        flat /= m;
    }
}

fn permutations(q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..q).collect();
    permute(&mut cur, 0, &mut out);
    out
}

fn permute(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == cur.len() {
        out.push(cur.clone());
        return;
    }
    for i in k..cur.len() {
        cur.swap(k, i);
        permute(cur, k + 1, out);
        cur.swap(k, i);
    }
}

/// Canonical symmetrization `(1/q!) Σ_σ f∘σ`.
pub fn symmetrize(f: &Tensor) -> SymKernel {
    let m = f.space.cells();
    let q = f.order;
    let perms = permutations(q);
    let mut idx = vec![0usize; q];
    let mut permuted = vec![0usize; q];
    let inv = 1.0 / perms.len() as f64;
    let mut values = vec![0.0; f.values.len()];
    for (flat, out) in values.iter_mut().enumerate() {
        unflatten(flat, m, &mut idx);
        let mut s = 0.0;
        for p in &perms {
            for (j, &pj) in p.iter().enumerate() {
                permuted[j] = idx[pj];
            }
            s += f.values[flatten(&permuted, m)];
        }
        *out = s * inv;
    }
    SymKernel(Tensor { order: q, space: f.space.clone(), values })
}

/// Contraction `f ⋆_r^l g` of order `p + q − r − l`.
///
/// Arguments of the result are ordered `(γ₁…γ_{r−l}, t₁…t_{p−r}, s₁…s_{q−r})`:
/// the shared but not integrated variables first, then the free variables of
/// `f`, then those of `g`. `r = l = 0` gives the tensor product.
pub fn contract(f: &SymKernel, g: &SymKernel, r: usize, l: usize) -> Result<Tensor> {
    contract_tensors(f.tensor(), g.tensor(), r, l)
}

/// [`contract`] on tensors that are symmetric by construction or whose
/// argument order the caller controls: the `r` shared variables are the
/// leading arguments of both, the first `l` of them integrated.
pub fn contract_tensors(f: &Tensor, g: &Tensor, r: usize, l: usize) -> Result<Tensor> {
    same_space(&f.space, &g.space)?;
    let (p, q) = (f.order, g.order);
    if l > r || r > p.min(q) {
        return Err(invalid("(r, l)", alloc::format!("need 0 ≤ l ≤ r ≤ min(p, q) = {}", p.min(q))));
    }
    let m = f.space.cells();
    let out_order = p + q - r - l;
    let n_out = m
        .checked_pow(out_order as u32)
        .filter(|n| *n <= MAX_ENTRIES)
        .ok_or_else(|| Error::Unsupported("contraction result too large".into()))?;
    let n_alpha = m.pow(l as u32);
    let alpha_w = f.space.product_weights(l);
    let n_gamma = m.pow((r - l) as u32);
    let n_t = m.pow((p - r) as u32);
    let n_s = m.pow((q - r) as u32);
    let mut values = vec![0.0; n_out];
    for gamma in 0..n_gamma {
        for t in 0..n_t {
            for s in 0..n_s {
                let mut acc = 0.0;
                for (alpha, &w) in alpha_w.iter().enumerate().take(n_alpha) {
                    let shared = alpha * n_gamma + gamma;
                    acc += w * f.values[shared * n_t + t] * g.values[shared * n_s + s];
                }
                values[(gamma * n_t + t) * n_s + s] = acc;
            }
        }
    }
    Ok(Tensor { order: out_order, space: f.space.clone(), values })
}

/// Norm of a kernel with exponent 2, 3 or 4.
pub fn norm(f: &SymKernel, p: u32) -> Result<f64> {
    if !(2..=4).contains(&p) {
        return Err(invalid("p", "exponent must be 2, 3 or 4"));
    }
    Ok(f.norm(p))
}

/// One value of item (3): `∫ ‖fᵢ(z,·) ⋆_r^l fⱼ(z,·)‖₂ μ(dz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionContraction {
    pub i: usize,
    pub j: usize,
    pub r: usize,
    pub l: usize,
    pub value: f64,
}

/// Finiteness report for the technical assumptions on a kernel family.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `(i, r, ‖fᵢ ⋆_{qᵢ}^{qᵢ−r} fᵢ‖₂)`.
    pub self_contractions: Vec<(usize, usize, f64)>,
    /// `(i, r, l, sup |fᵢ| ⋆_r^l |fᵢ|)` for `qᵢ ≥ 2`.
    pub absolute_sups: Vec<(usize, usize, usize, f64)>,
    pub section_integrals: Vec<SectionContraction>,
    pub all_finite: bool,
    /// Every kernel is bounded with support in `B × … × B`, `μ(B) < ∞`;
    /// the assumptions then hold without inspecting the values above.
    pub bounded_rectangle: bool,
    /// Cells of the smallest such `B`.
    pub support: Vec<bool>,
}

/// Evaluate every quantity of the technical kernel assumptions.
pub fn check_assumptions(kernels: &[SymKernel]) -> Result<AssumptionReport> {
    let Some(first) = kernels.first() else {
        return Ok(AssumptionReport {
            self_contractions: Vec::new(),
            absolute_sups: Vec::new(),
            section_integrals: Vec::new(),
            all_finite: true,
            bounded_rectangle: true,
            support: Vec::new(),
        });
    };
    let space = first.space().clone();
    for k in kernels {
        same_space(&space, k.space())?;
    }
    let m = space.cells();
    let mut self_contractions = Vec::new();
    let mut absolute_sups = Vec::new();
    let mut section_integrals = Vec::new();
    for (i, f) in kernels.iter().enumerate() {
        let q = f.order();
        for r in 1..=q {
            let c = contract(f, f, q, q - r)?;
            self_contractions.push((i, r, c.norm(2)));
        }
        if q >= 2 {
            let abs = SymKernel(Tensor {
                order: q,
                space: space.clone(),
                values: f.values().iter().map(|v| v.abs()).collect(),
            });
            for r in 1..=q {
                for l in 1..=r {
                    let c = contract(&abs, &abs, r, l)?;
                    let sup = c.values.iter().fold(0.0f64, |a, v| a.max(*v));
                    absolute_sups.push((i, r, l, sup));
                }
            }
        }
    }
    for (i, fi) in kernels.iter().enumerate() {
        for (j, fj) in kernels.iter().enumerate() {
            let (qi, qj) = (fi.order(), fj.order());
            if qi.max(qj) <= 1 {
                continue;
            }
            let lo = qi.abs_diff(qj).max(1);
            let hi = qi + qj - 2;
            for r in 0..=(qi - 1).min(qj - 1) {
                for l in 0..=r {
                    let k = qi + qj - 2 - r - l;
                    if k < lo || k > hi {
                        continue;
                    }
                    let mut value = 0.0;
                    for z in 0..m {
                        let c = contract_tensors(fi.section(z).tensor(), fj.section(z).tensor(), r, l)?;
                        value += space.weight(z) * c.norm(2);
                    }
                    section_integrals.push(SectionContraction { i, j, r, l, value });
                }
            }
        }
    }
    let mut support = vec![false; m];
    let mut idx = vec![0usize; MAX_ORDER.max(8)];
    let mut bounded = true;
    for f in kernels {
        let q = f.order();
        for (flat, v) in f.values().iter().enumerate() {
            bounded &= v.is_finite();
            if *v != 0.0 {
                unflatten(flat, m, &mut idx[..q]);
                for &c in &idx[..q] {
                    support[c] = true;
                }
            }
        }
    }
    let all_finite = self_contractions.iter().all(|x| x.2.is_finite())
        && absolute_sups.iter().all(|x| x.3.is_finite())
        && section_integrals.iter().all(|x| x.value.is_finite());
    Ok(AssumptionReport {
        self_contractions,
        absolute_sups,
        section_integrals,
        all_finite,
        bounded_rectangle: bounded && space.total_mass().is_finite(),
        support,
    })
}

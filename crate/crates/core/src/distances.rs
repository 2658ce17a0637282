//! Probability metrics: total variation on `ℤ₊^d`, one-dimensional
//! Wasserstein-1 and a dictionary lower bound for the mixed metric built from
//! test functions `1{j ∈ E}·φ(x)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{normal_cdf, normal_pdf, poisson_horizon, poisson_pmf};

/// Tail mass discarded when a Poisson law is tabulated.
pub const POISSON_TAIL: f64 = 1e-12;

/// Largest box coordinate used by the dictionary; bucket `BOX_CAP` stands
/// for every value `≥ BOX_CAP`.
pub const BOX_CAP: u64 = 10;

/// A finitely supported law on `ℤ₊^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    dim: usize,
    mass: BTreeMap<Vec<u64>, f64>,
}

impl Pmf {
    pub fn new(dim: usize, mass: BTreeMap<Vec<u64>, f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(invalid("pmf", "empty support"));
        }
        for (k, &p) in &mass {
            if k.len() != dim {
                return Err(Error::ShapeMismatch {
                    expected: format!("{dim} coordinates"),
                    found: format!("{}", k.len()),
                });
            }
            if !(p >= 0.0) {
                return Err(invalid("pmf", format!("negative mass {p} at {k:?}")));
            }
        }
        Ok(Self { dim, mass })
    }

    /// Empirical law of integer vectors, each with weight `1/len`.
    pub fn from_samples<S: AsRef<[u64]>>(samples: &[S]) -> Result<Self> {
        let first = samples.first().ok_or_else(|| invalid("samples", "empty sample"))?;
        let dim = first.as_ref().len();
        let w = 1.0 / samples.len() as f64;
        let mut mass = BTreeMap::new();
        for s in samples {
            let s = s.as_ref();
            if s.len() != dim {
                return Err(Error::ShapeMismatch {
                    expected: format!("{dim} coordinates"),
                    found: format!("{}", s.len()),
                });
            }
            *mass.entry(s.to_vec()).or_insert(0.0) += w;
        }
        Ok(Self { dim, mass })
    }

    /// Product of independent Poisson laws, each truncated at tail mass
    /// `POISSON_TAIL / d`.
    pub fn poisson_product(lambdas: &[f64]) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(invalid("lambdas", "empty support"));
        }
        if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(invalid("lambdas", format!("{l} is not a nonnegative intensity")));
        }
        let tail = POISSON_TAIL / lambdas.len() as f64;
        let tables: Vec<Vec<f64>> =
            lambdas.iter().map(|&l| (0..=poisson_horizon(l, tail)).map(|k| poisson_pmf(k, l)).collect()).collect();
        let mut mass = BTreeMap::new();
        let mut idx = vec![0usize; lambdas.len()];
        loop {
            let p: f64 = idx.iter().zip(&tables).map(|(&i, t)| t[i]).product();
            mass.insert(idx.iter().map(|&i| i as u64).collect(), p);
            if !advance(&mut idx, |a| tables[a].len()) {
                break;
            }
        }
        Ok(Self { dim: lambdas.len(), mass })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mass(&self, x: &[u64]) -> f64 {
        self.mass.get(x).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Vec<u64>, f64)> + '_ {
        self.mass.iter().map(|(k, &p)| (k, p))
    }
}

/// Odometer step over a mixed-radix index; false once it wraps.
fn advance<F: Fn(usize) -> usize>(idx: &mut [usize], radix: F) -> bool {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < radix(a) {
            return true;
        }
        idx[a] = 0;
    }
    false
}

/// `sup_E |P(E) − Q(E)|`, attained as half the L¹ distance.
pub fn tv_distance(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.dim != q.dim {
        return Err(Error::ShapeMismatch { expected: format!("dimension {}", p.dim), found: format!("{}", q.dim) });
    }
    let mut total = 0.0;
    for (k, &a) in &p.mass {
        total += (a - q.mass(k)).abs();
    }
    for (k, &b) in &q.mass {
        if !p.mass.contains_key(k) {
            total += b;
        }
    }
    Ok(0.5 * total)
}

/// Wasserstein-1 distance between two empirical laws on ℝ.
///
/// Equal sizes reduce to the mean gap of sorted samples. Otherwise the
/// quantile coupling is integrated exactly over the merged breakpoints
/// `i/|P|` and `j/|Q|`.
pub fn wasserstein1(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(invalid("samples", "empty sample"));
    }
    if p.iter().chain(q).any(|x| !x.is_finite()) {
        return Err(invalid("samples", "non-finite sample"));
    }
    let mut a = p.to_vec();
    let mut b = q.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    if a.len() == b.len() {
        let s: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        return Ok(s / a.len() as f64);
    }
    let (na, nb) = (a.len() as u128, b.len() as u128);
    // Walk the merged grid in units of 1/(na·nb) to keep breakpoints exact.
    let (mut i, mut j, mut u) = (0usize, 0usize, 0u128);
    let mut total = 0.0;
    let denom = (na * nb) as f64;
    while i < a.len() && j < b.len() {
        let next_a = (i as u128 + 1) * nb;
        let next_b = (j as u128 + 1) * na;
        let next = next_a.min(next_b);
        total += (a[i] - b[j]).abs() * (next - u) as f64 / denom;
        u = next;
        if next == next_a {
            i += 1;
        }
        if next == next_b {
            j += 1;
        }
    }
    Ok(total)
}

/// Samples in `ℤ₊^d × ℝ^m`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    d: usize,
    m: usize,
    ints: Vec<u64>,
    reals: Vec<f64>,
    len: usize,
}

impl EmpiricalLaw {
    pub fn new(d: usize, m: usize) -> Self {
        Self { d, m, ints: Vec::new(), reals: Vec::new(), len: 0 }
    }

    pub fn push(&mut self, ints: &[u64], reals: &[f64]) -> Result<()> {
        if ints.len() != self.d || reals.len() != self.m {
            return Err(Error::ShapeMismatch {
                expected: format!("({}, {})", self.d, self.m),
                found: format!("({}, {})", ints.len(), reals.len()),
            });
        }
        if reals.iter().any(|x| !x.is_finite()) {
            return Err(invalid("reals", "non-finite sample"));
        }
        self.ints.extend_from_slice(ints);
        self.reals.extend_from_slice(reals);
        self.len += 1;
        Ok(())
    }

    pub fn int_dim(&self) -> usize {
        self.d
    }

    pub fn real_dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ints(&self, i: usize) -> &[u64] {
        &self.ints[i * self.d..(i + 1) * self.d]
    }

    pub fn reals(&self, i: usize) -> &[f64] {
        &self.reals[i * self.m..(i + 1) * self.m]
    }

    /// Law of the integer part.
    pub fn integer_marginal(&self) -> Result<Pmf> {
        let rows: Vec<&[u64]> = (0..self.len).map(|i| self.ints(i)).collect();
        Pmf::from_samples(&rows)
    }

    /// Samples of real coordinate `j`.
    pub fn real_marginal(&self, j: usize) -> Vec<f64> {
        (0..self.len).map(|i| self.reals(i)[j]).collect()
    }
}

/// Nested grid: the union of `linspace(-r, r, j)` for `j = 2..=size`, so a
/// larger size always contains the smaller dictionary.
fn nested_grid(radius: f64, size: usize) -> Vec<f64> {
    let mut g: Vec<f64> = Vec::new();
    for j in 2..=size.max(2) {
        for i in 0..j {
            g.push(-radius + 2.0 * radius * i as f64 / (j - 1) as f64);
        }
    }
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    g
}

/// Range of the intercept grid; `clamp(±3) = ±1` makes constants available.
const INTERCEPT_RADIUS: f64 = 3.0;

/// The affine parts `(a, b)` of the dictionary for a given size.
pub fn dictionary_maps(size: usize) -> Vec<(f64, f64)> {
    let slopes = nested_grid(1.0, size);
    let intercepts = nested_grid(INTERCEPT_RADIUS, size);
    let mut out = Vec::with_capacity(slopes.len() * intercepts.len());
    for &a in &slopes {
        for &b in &intercepts {
            out.push((a, b));
        }
    }
    out
}

#[inline]
fn clamp_affine(a: f64, b: f64, x: f64) -> f64 {
    (a * x + b).clamp(-1.0, 1.0)
}

/// `E[clamp(aN + b, −1, 1)]` for a standard normal `N`.
pub fn gaussian_clamp_mean(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return b.clamp(-1.0, 1.0);
    }
    let s = a.abs();
    let lo = (-1.0 - b) / s;
    let hi = (1.0 - b) / s;
    let inside = b * (normal_cdf(hi) - normal_cdf(lo)) + s * (normal_pdf(lo) - normal_pdf(hi));
    inside - normal_cdf(lo) + (1.0 - normal_cdf(hi))
}

fn bucket(x: u64) -> usize {
    x.min(BOX_CAP) as usize
}

/// Inclusive prefix sums over a `(BOX_CAP+1)^d` table, axis `a` having
/// stride `(BOX_CAP+1)^a`.
fn prefix_sums(table: &[f64], d: usize) -> Vec<f64> {
    let side = BOX_CAP as usize + 1;
    let mut pre = table.to_vec();
    let mut stride = 1;
    for _ in 0..d {
        for idx in 0..pre.len() {
            if (idx / stride) % side != 0 {
                pre[idx] += pre[idx - stride];
            }
        }
        stride *= side;
    }
    pre
}

fn box_sum(pre: &[f64], lo: &[usize], hi: &[usize], axis_stride: &[usize]) -> f64 {
    let d = lo.len();
    let mut s = 0.0;
    'corner: for corner in 0..(1usize << d) {
        let mut off = 0usize;
        let mut sign = 1.0;
        for a in 0..d {
            if corner >> a & 1 == 1 {
                if lo[a] == 0 {
                    continue 'corner;
                }
                off += (lo[a] - 1) * axis_stride[a];
                sign = -sign;
            } else {
                off += hi[a] * axis_stride[a];
            }
        }
        s += sign * pre[off];
    }
    s
}

/// Largest `|P(E) − Q(E)|` over boxes `E = Π [lo_a, hi_a]` of buckets, with
/// `P` and `Q` given as bucket tables. Both sides are summed identically so
/// equal inputs give exactly zero.
fn max_box_gap(p: &[f64], q: &[f64], d: usize) -> f64 {
    let side = BOX_CAP as usize + 1;
    let (pp, pq) = (prefix_sums(p, d), prefix_sums(q, d));
    let axis_stride: Vec<usize> = (0..d).map(|a| side.pow(a as u32)).collect();
    let mut lo = vec![0usize; d];
    let mut hi = vec![0usize; d];
    let mut best: f64 = 0.0;
    loop {
        let gap = box_sum(&pp, &lo, &hi, &axis_stride) - box_sum(&pq, &lo, &hi, &axis_stride);
        best = best.max(gap.abs());
        // Advance (lo, hi) pairs with lo ≤ hi on every axis.
        let mut a = 0;
        loop {
            if a == d {
                return best;
            }
            if hi[a] + 1 < side {
                hi[a] += 1;
                break;
            }
            if lo[a] + 1 < side {
                lo[a] += 1;
                hi[a] = lo[a];
                break;
            }
            lo[a] = 0;
            hi[a] = 0;
            a += 1;
        }
    }
}

fn check_mixed(p: &EmpiricalLaw) -> Result<()> {
    if p.is_empty() {
        return Err(invalid("law", "empty sample"));
    }
    if p.m > 1 {
        return Err(Error::Unsupported(format!("mixed surrogate needs at most one real coordinate, got {}", p.m)));
    }
    if p.d > 3 {
        return Err(Error::Unsupported(format!("box dictionary limited to d ≤ 3, got {}", p.d)));
    }
    Ok(())
}

fn table_len(d: usize) -> usize {
    (BOX_CAP as usize + 1).pow(d as u32)
}

fn table_index(ints: &[u64]) -> usize {
    let side = BOX_CAP as usize + 1;
    ints.iter().enumerate().map(|(a, &x)| bucket(x) * side.pow(a as u32)).sum()
}

/// Add `φ(x)/len` of every sample into its bucket.
fn accumulate(table: &mut [f64], law: &EmpiricalLaw, a: f64, b: f64) {
    table.iter_mut().for_each(|t| *t = 0.0);
    let w = 1.0 / law.len as f64;
    for i in 0..law.len {
        let phi = if law.m == 0 { 1.0 } else { clamp_affine(a, b, law.reals(i)[0]) };
        table[table_index(law.ints(i))] += w * phi;
    }
}

/// Dictionary lower bound of the mixed distance between two empirical laws.
///
/// The test functions are `1{j ∈ E}·clamp(ax + b, −1, 1)`, with `E` a box of
/// `ℤ₊^d` whose coordinates are at most `BOX_CAP` (the last bucket is open
/// ended) and `(a, b)` from [`dictionary_maps`]. Every such function is
/// bounded by one and Lipschitz in `x`, so the result never exceeds the true
/// distance, and a larger dictionary never lowers it.
pub fn h1_surrogate(p: &EmpiricalLaw, q: &EmpiricalLaw, dictionary_size: usize) -> Result<f64> {
    check_mixed(p)?;
    check_mixed(q)?;
    if p.d != q.d || p.m != q.m {
        return Err(Error::ShapeMismatch {
            expected: format!("({}, {})", p.d, p.m),
            found: format!("({}, {})", q.d, q.m),
        });
    }
    let maps = if p.m == 0 { vec![(0.0, 1.0)] } else { dictionary_maps(dictionary_size) };
    let mut best: f64 = 0.0;
    let mut tp = vec![0.0; table_len(p.d)];
    let mut tq = tp.clone();
    for &(a, b) in &maps {
        accumulate(&mut tp, p, a, b);
        accumulate(&mut tq, q, a, b);
        best = best.max(max_box_gap(&tp, &tq, p.d));
    }
    Ok(best)
}

/// As [`h1_surrogate`], against the exact product law
/// `Po(λ₁) ⊗ ... ⊗ Po(λ_d) ⊗ N(0, 1)` (or without the normal factor when the
/// sample has no real coordinate).
pub fn h1_surrogate_to_product(p: &EmpiricalLaw, lambdas: &[f64], dictionary_size: usize) -> Result<f64> {
    check_mixed(p)?;
    if lambdas.len() != p.d {
        return Err(Error::ShapeMismatch {
            expected: format!("{} intensities", p.d),
            found: format!("{}", lambdas.len()),
        });
    }
    let target = if p.d == 0 { None } else { Some(Pmf::poisson_product(lambdas)?) };
    let mut bucket_mass = vec![0.0; table_len(p.d)];
    match &target {
        None => bucket_mass[0] = 1.0,
        Some(t) => {
            for (k, w) in t.support() {
                bucket_mass[table_index(k)] += w;
            }
        }
    }
    let maps = if p.m == 0 { vec![(0.0, 1.0)] } else { dictionary_maps(dictionary_size) };
    let mut best: f64 = 0.0;
    let mut tp = vec![0.0; bucket_mass.len()];
    let mut tq = tp.clone();
    for &(a, b) in &maps {
        let e_phi = if p.m == 0 { 1.0 } else { gaussian_clamp_mean(a, b) };
        for (t, &w) in tq.iter_mut().zip(&bucket_mass) {
            *t = w * e_phi;
        }
        accumulate(&mut tp, p, a, b);
        best = best.max(max_box_gap(&tp, &tq, p.d));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pmf(pairs: &[(u64, f64)]) -> Pmf {
        Pmf::new(1, pairs.iter().map(|&(k, p)| (vec![k], p)).collect()).unwrap()
    }

    #[test]
    fn tv_examples() {
        let a = pmf(&[(0, 1.0)]);
        let b = pmf(&[(0, 0.5), (1, 0.5)]);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(tv_distance(&a, &b).unwrap(), 0.5);
        let p1 = Pmf::poisson_product(&[1.0]).unwrap();
        let p2 = Pmf::poisson_product(&[1.2]).unwrap();
        let tv = tv_distance(&p1, &p2).unwrap();
        // Independent oracle: the pmfs cross once, so TV equals the CDF gap at
        // the crossing point k* = floor(0.2 / ln 1.2).
        let kstar = libm::floor(0.2 / libm::log(1.2)) as u64;
        let gap: f64 = (0..=kstar).map(|k| poisson_pmf(k, 1.0) - poisson_pmf(k, 1.2)).sum();
        assert!((tv - gap).abs() < 1e-12, "{tv} vs {gap}");
        assert!(tv <= 0.2);
        assert!(Pmf::from_samples::<Vec<u64>>(&[]).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein1(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(wasserstein1(&[0.0, 1.0], &[0.0, 3.0]).unwrap(), 1.0);
        let xs = [0.3, -1.0, 2.5, 0.7];
        let ys: Vec<f64> = xs.iter().map(|x| x + 0.75).collect();
        assert!((wasserstein1(&xs, &ys).unwrap() - 0.75).abs() < 1e-15);
        // Unequal sizes: {0} vs {0, 2} couples half the mass at distance 2.
        assert!((wasserstein1(&[0.0], &[0.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        // Duplicating every sample does not change the law.
        let dup: Vec<f64> = xs.iter().flat_map(|&x| [x, x]).collect();
        let zs = [0.1, 0.2, 5.0];
        assert!((wasserstein1(&dup, &zs).unwrap() - wasserstein1(&xs, &zs).unwrap()).abs() < 1e-12);
        assert!(wasserstein1(&[], &[1.0]).is_err());
    }

    #[test]
    fn gaussian_clamp_mean_matches_quadrature() {
        for &(a, b) in &[(0.5, 0.2), (-1.0, 0.7), (0.1, -2.0), (1.0, 0.0)] {
            let q =
                crate::math::integrate_adaptive(|x| clamp_affine(a, b, x) * normal_pdf(x), -12.0, 12.0, 1e-13, 1e-12)
                    .unwrap();
            assert!((q - gaussian_clamp_mean(a, b)).abs() < 1e-10);
        }
    }

    fn law(rows: &[(u64, f64)]) -> EmpiricalLaw {
        let mut l = EmpiricalLaw::new(1, 1);
        for &(j, x) in rows {
            l.push(&[j], &[x]).unwrap();
        }
        l
    }

    /// Dependence invisible to both marginals is detected.
    #[test]
    fn surrogate_sees_dependence() {
        let product = law(&[(0, -1.0), (0, 1.0), (1, -1.0), (1, 1.0)]);
        let coupled = law(&[(0, -1.0), (0, -1.0), (1, 1.0), (1, 1.0)]);
        assert_eq!(h1_surrogate(&product, &product, 6).unwrap(), 0.0);
        let tv = tv_distance(&product.integer_marginal().unwrap(), &coupled.integer_marginal().unwrap()).unwrap();
        let w = wasserstein1(&product.real_marginal(0), &coupled.real_marginal(0)).unwrap();
        assert_eq!((tv, w), (0.0, 0.0));
        let s = h1_surrogate(&product, &coupled, 6).unwrap();
        // Oracle: E = {0}, φ(x) = clamp(x) gives |(-1+1)/4 - (-2)/4| = 0.5.
        assert!((s - 0.5).abs() < 1e-12, "{s}");
    }
}

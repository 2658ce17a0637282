use alloc::format;

use crate::chaos::CellUStatistic;
use crate::error::{invalid, Error, Result};
use crate::kernel::{contract, SymKernel, Tensor};
use crate::math::poisson_pmf;

/// Default for the unspecified constant `D` of the Poisson U-statistic bound.
/// Only rates are meaningful; the constant itself is existential.
pub const POISSON_BOUND_CONSTANT: f64 = 1.0;

/// `B(G; σ)` from the chaos projections `g₁..g_k` of a U-statistic.
pub fn ustat_gaussian_bound_from_projections(g: &[SymKernel], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    let k = g.len();
    let mut contraction_max: f64 = 0.0;
    for i in 1..=k {
        for j in i..=k {
            for r in 1..=i {
                for l in 1..=r {
                    if l == j {
                        continue;
                    }
                    let c = contract(&g[i - 1], &g[j - 1], r, l)?;
                    contraction_max = contraction_max.max(c.norm(2));
                }
            }
        }
    }
    let l4 = g.iter().map(|f| f.norm(4) * f.norm(4)).fold(0.0, f64::max);
    Ok((contraction_max + l4) / (sigma * sigma))
}

/// `B(G; σ)` for a U-statistic on a cell space.
pub fn ustat_gaussian_bound(u: &CellUStatistic, sigma: f64) -> Result<f64> {
    ustat_gaussian_bound_from_projections(u.decomposition()?.projections(), sigma)
}

/// `Aₙ = |λₙ − λ| + D·((1 − e^{−λₙ})/λₙ)·(1 + 1/λₙ)·√((λₙ + λₙ²)(ρₙ + ρₙ⁴))`.
pub fn ustat_poisson_bound(lambda_n: f64, lambda: f64, rho: f64, d_const: f64) -> Result<f64> {
    if !(lambda_n > 0.0) || !(lambda > 0.0) {
        return Err(invalid("lambda", "λₙ and λ must be positive"));
    }
    if !(rho >= 0.0) {
        return Err(invalid("rho_n", "must be nonnegative"));
    }
    if !(d_const > 0.0) {
        return Err(invalid("D", "must be positive"));
    }
    let c = -libm::expm1(-lambda_n) / lambda_n;
    let root = libm::sqrt((lambda_n + lambda_n * lambda_n) * (rho + rho * rho * rho * rho));
    Ok((lambda_n - lambda).abs() + d_const * c * (1.0 + 1.0 / lambda_n) * root)
}

/// `ρ = sup_{j, o} μʲ{y : (y, o) ∈ O}` for a symmetric indicator tensor.
pub fn rho_n(o: &Tensor) -> Result<f64> {
    let q = o.order();
    if q < 2 {
        return Err(invalid("O", "needs order at least 2"));
    }
    if let Some(v) = o.values().iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(invalid("O", format!("indicator entries must be 0 or 1, found {v}")));
    }
    let asym = o.asymmetry();
    if asym > 0.0 {
        return Err(Error::NotSymmetric { deviation: asym });
    }
    let s = SymKernel::new(o.clone())?;
    Ok((1..q).flat_map(|j| s.integrate_out(j).values().to_vec()).fold(0.0, f64::max))
}

/// `b_{n,l} = Σ_p Po(n)(p) · C(n ∧ p, l)/C(n, l)`.
///
/// Written as `1 − Σ_{p<n} Po(n)(p)·(1 − Π_{i<l}(p − i)/(n − i))`, which is
/// exactly 1 for `l = 0`. Terms with `p` far below `n` are dropped once their
/// Poisson mass falls below the tail tolerance.
pub fn depoisson_coefficient(n: u64, l: u64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if l > n {
        return Err(invalid("l", format!("l = {l} exceeds n = {n}")));
    }
    let lam = n as f64;
    let mut deficit = 0.0;
    let mut p = n;
    while p > 0 {
        p -= 1;
        let w = poisson_pmf(p, lam);
        if w < 1e-18 && (p as f64) < lam - libm::sqrt(lam) {
            break;
        }
        let mut ratio = 1.0;
        for i in 0..l {
            ratio *= (p as f64 - i as f64).max(0.0) / (lam - i as f64);
        }
        deficit += w * (1.0 - ratio);
    }
    Ok(1.0 - deficit)
}

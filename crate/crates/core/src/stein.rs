//! Stein solvers and the constants of the portmanteau inequality.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{integrate_adaptive, normal_pdf, poisson_horizon, poisson_pmf, SQRT_2PI};

/// Tail mass below which Poisson expectations are truncated.
pub const SERIES_TAIL: f64 = 1e-14;

/// Solution of `λ f(x+1) − x f(x) = ψ(x) − E ψ(X)`, `X ~ Po(λ)`, with
/// `Δ²f(0) = 0`, tabulated on `0..=x_max`.
#[derive(Debug, Clone)]
pub struct ChenSteinSolution {
    lambda: f64,
    mean: f64,
    /// `ψ(w) − Eψ(X)` on `0..centered.len()`.
    centered: Vec<f64>,
    values: Vec<f64>,
}

impl ChenSteinSolution {
    pub fn new<P: Fn(u64) -> f64>(lambda: f64, psi: P, x_max: u64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda", "must be positive and finite"));
        }
        let horizon = poisson_horizon(lambda, SERIES_TAIL);
        // The tail series at x needs ψ until the weights vanish well past x.
        let reach = horizon.max(x_max + 3) + 60 + (libm::sqrt(lambda) * 10.0) as u64;
        let raw: Vec<f64> = (0..=reach).map(&psi).collect();
        if let Some((w, v)) = raw.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
            return Err(invalid("psi", alloc::format!("|ψ({w})| = {v} exceeds 1")));
        }
        // Normalizing by the truncated mass keeps constants exactly centered.
        let (num, mass) = (0..=horizon).fold((0.0, 0.0), |(n, m), w| {
            let p = poisson_pmf(w, lambda);
            (n + p * raw[w as usize], m + p)
        });
        let mean = num / mass;
        let centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();
        let mut sol = Self { lambda, mean, centered, values: Vec::new() };
        let top = x_max.max(2) as usize;
        let mut values = vec![0.0; top + 1];
        for (x, v) in values.iter_mut().enumerate().skip(1) {
            *v = if (x as f64 - 1.0) < lambda { sol.forward(x as u64) } else { sol.tail(x as u64) };
        }
        values[0] = 2.0 * values[1] - values[2];
        sol.values = values;
        Ok(sol)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `E ψ(X)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `f(x) = Σ_{w<x} π(w) h̃(w) / (λ π(x−1))` for `x ≥ 1`.
    pub fn forward(&self, x: u64) -> f64 {
        assert!(x >= 1);
        // r = π(w)/π(x−1), built downward from w = x−1.
        let mut r = 1.0;
        let mut acc = 0.0;
        let mut w = x - 1;
        loop {
            acc += r * self.centered[w as usize];
            if w == 0 {
                break;
            }
            r *= w as f64 / self.lambda;
            w -= 1;
            if r < 1e-300 {
                break;
            }
        }
        acc / self.lambda
    }

    /// `f(x) = −Σ_{w≥x} π(w) h̃(w) / (λ π(x−1))` for `x ≥ 1`.
    pub fn tail(&self, x: u64) -> f64 {
        assert!(x >= 1);
        let mut r = self.lambda / x as f64;
        let mut acc = 0.0;
        let mut w = x as usize;
        while w < self.centered.len() {
            acc += r * self.centered[w];
            r *= self.lambda / (w + 1) as f64;
            if r < 1e-18 * acc.abs().max(1e-300) && (w as f64) > self.lambda {
                break;
            }
            w += 1;
        }
        -acc / self.lambda
    }

    pub fn x_max(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    /// Tabulated `f(x)`.
    pub fn value(&self, x: u64) -> f64 {
        self.values[x as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `λ f(x+1) − x f(x) − h̃(x)`.
    pub fn residual(&self, x: u64) -> f64 {
        let xi = x as usize;
        self.lambda * self.values[xi + 1] - x as f64 * self.values[xi] - self.centered[xi]
    }

    /// `(sup|f|, sup|Δf|, sup|Δ²f|)` over the table.
    pub fn observed_factors(&self) -> (f64, f64, f64) {
        let v = &self.values;
        let a = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let b = v.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()));
        let c = v.windows(3).fold(0.0f64, |m, w| m.max((w[2] - 2.0 * w[1] + w[0]).abs()));
        (a, b, c)
    }
}

/// `f(x)` for the Chen–Stein equation with target `Po(λ)`.
pub fn chen_stein_solve<P: Fn(u64) -> f64>(lambda: f64, psi: P, x: u64) -> Result<f64> {
    Ok(ChenSteinSolution::new(lambda, psi, x)?.value(x))
}

/// `(3, 2(1−e^{−λ})/λ, 4(1−e^{−λ})/λ²)`.
pub fn stein_factors(lambda: f64) -> Result<(f64, f64, f64)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda", "must be positive and finite"));
    }
    let c = -libm::expm1(-lambda);
    Ok((3.0, 2.0 * c / lambda, 4.0 * c / (lambda * lambda)))
}

/// Solution of `f' − y f = ψ(y) − E ψ(N)`, `N ~ 𝒩(0,1)`, that stays bounded.
pub struct GaussianSteinSolution<P> {
    psi: P,
    mean: f64,
    tol: f64,
}

/// Integration range in `s` for the solver; `e^{−s²/2}` is below `1e−31` past it.
const GAUSS_REACH: f64 = 12.0;

impl<P: Fn(f64) -> f64> GaussianSteinSolution<P> {
    pub fn new(psi: P, quad_tol: f64) -> Result<Self> {
        if !(quad_tol > 0.0) {
            return Err(invalid("quad_tol", "must be positive"));
        }
        let mean = integrate_adaptive(|a| psi(a) * normal_pdf(a), -GAUSS_REACH, GAUSS_REACH, quad_tol * 1e-2, 1e-13)?;
        Ok(Self { psi, mean, tol: quad_tol })
    }

    /// `E ψ(N)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `f(y)`. Uses `f(y) = −∫₀^∞ g(y+s) e^{−ys−s²/2} ds` for `y ≥ 0` and
    /// `f(y) = ∫₀^∞ g(y−s) e^{ys−s²/2} ds` for `y < 0`, `g = ψ − Eψ(N)`,
    /// which never forms `e^{y²/2}`.
    pub fn value(&self, y: f64) -> Result<f64> {
        let g = |a: f64| (self.psi)(a) - self.mean;
        if y >= 0.0 {
            let v = integrate_adaptive(
                |s| g(y + s) * libm::exp(-y * s - 0.5 * s * s),
                0.0,
                GAUSS_REACH,
                self.tol * 1e-2,
                1e-13,
            )?;
            Ok(-v)
        } else {
            integrate_adaptive(|s| g(y - s) * libm::exp(y * s - 0.5 * s * s), 0.0, GAUSS_REACH, self.tol * 1e-2, 1e-13)
        }
    }

    /// `f'(y) = y f(y) + ψ(y) − Eψ(N)`.
    pub fn derivative(&self, y: f64) -> Result<f64> {
        Ok(y * self.value(y)? + (self.psi)(y) - self.mean)
    }
}

/// `f_ψ(y)` for the one-dimensional Gaussian Stein equation.
pub fn gaussian_stein_solve<P: Fn(f64) -> f64>(psi: P, y: f64, quad_tol: f64) -> Result<f64> {
    GaussianSteinSolution::new(psi, quad_tol)?.value(y)
}

/// `max_i (1−e^{−λᵢ})/λᵢ + (1−e^{−λᵢ})/λᵢ²`, zero for an empty list.
pub fn lambda_term(lambdas: &[f64]) -> f64 {
    lambdas
        .iter()
        .map(|&l| {
            let c = -libm::expm1(-l);
            c / l + c / (l * l)
        })
        .fold(0.0, f64::max)
}

/// The constant `K` of the portmanteau inequality for a target with `d`
/// Poisson and `m` Gaussian components.
pub fn portmanteau_constant(d: usize, m: usize, lambdas: &[f64], c: Option<f64>) -> Result<f64> {
    if d == 0 {
        return Err(Error::Unsupported(
            "purely Gaussian targets (d = 0) are covered by the known multivariate normal approximation bounds".into(),
        ));
    }
    if lambdas.len() != d {
        return Err(invalid("lambdas", alloc::format!("expected {d} values, got {}", lambdas.len())));
    }
    if lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(invalid("lambdas", "must be positive"));
    }
    let t = lambda_term(lambdas);
    match m {
        0 => Ok(if d > 1 { 6.0 } else { 0.0 } + t),
        1 => {
            let c = c.ok_or_else(|| invalid("C", "required when m = 1"))?;
            if !(c > 0.0) {
                return Err(invalid("C", "must be positive"));
            }
            Ok(6.0 + (1.0 + 2.0 * SQRT_2PI) / c + t)
        }
        _ => Ok(11.0 + t),
    }
}

/// Discrete Taylor expansion of `f : ℤ₊^d → ℝ` around `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorReport {
    pub value: f64,
    /// `f(a) + Σ Δᵢf(a)(xᵢ − aᵢ)`.
    pub linear_part: f64,
    pub remainder: f64,
    /// Second-order majorant, with `max ‖Δ²ᵢⱼ f‖` taken over the lattice box
    /// spanned by `a` and `x` (a local box sup).
    pub bound: f64,
    /// `max ‖Δᵢ f‖ · Σ|xᵢ − aᵢ|` over the same box.
    pub first_order_bound: f64,
    pub local_sup_delta2: f64,
    pub local_sup_delta1: f64,
}

pub fn discrete_taylor<F: Fn(&[u64]) -> f64>(f: F, a: &[u64], x: &[u64]) -> Result<TaylorReport> {
    let d = a.len();
    if x.len() != d || d == 0 {
        return Err(invalid("x", "points must share a positive dimension"));
    }
    let value = f(x);
    let fa = f(a);
    let mut linear_part = fa;
    let mut p = a.to_vec();
    for i in 0..d {
        p[i] += 1;
        linear_part += (f(&p) - fa) * (x[i] as f64 - a[i] as f64);
        p[i] -= 1;
    }
    let lo: Vec<u64> = (0..d).map(|i| a[i].min(x[i])).collect();
    let hi: Vec<u64> = (0..d).map(|i| a[i].max(x[i])).collect();
    let mut sup2: f64 = 0.0;
    let mut sup1: f64 = 0.0;
    let mut y = lo.clone();
    let mut q = vec![0u64; d];
    loop {
        let fy = f(&y);
        for i in 0..d {
            q.copy_from_slice(&y);
            q[i] += 1;
            let fi = f(&q);
            sup1 = sup1.max((fi - fy).abs());
            for j in 0..d {
                q.copy_from_slice(&y);
                q[j] += 1;
                let fj = f(&q);
                q[i] += 1;
                let fij = f(&q);
                sup2 = sup2.max((fij - fi - fj + fy).abs());
            }
        }
        // Odometer over the box.
        let mut k = d;
        loop {
            if k == 0 {
                let dist: Vec<f64> = (0..d).map(|i| (x[i] as f64 - a[i] as f64).abs()).collect();
                let mut shape = 0.0;
                for i in 0..d {
                    shape += dist[i] * (x[i] as f64 - a[i] as f64 - 1.0).abs();
                    for j in 0..d {
                        if i != j {
                            shape += dist[i] * dist[j];
                        }
                    }
                }
                return Ok(TaylorReport {
                    value,
                    linear_part,
                    remainder: value - linear_part,
                    bound: 0.5 * sup2 * shape,
                    first_order_bound: sup1 * dist.iter().sum::<f64>(),
                    local_sup_delta2: sup2,
                    local_sup_delta1: sup1,
                });
            }
            k -= 1;
            if y[k] < hi[k] {
                y[k] += 1;
                break;
            }
            y[k] = lo[k];
        }
    }
}

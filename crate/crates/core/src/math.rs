//! Special functions, combinatorics and one-dimensional quadrature.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Binomial coefficient as a float; exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    libm::round(acc)
}

/// Binomial coefficient for possibly large `n`, through log-gamma.
pub fn binomial_large(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if n < 60 {
        return binomial(n as usize, k as usize);
    }
    libm::exp(ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k))
}

/// Falling factorial `n (n-1) ... (n-k+1)`.
pub fn falling_factorial(n: u64, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k as u64 {
        if i >= n {
            return 0.0;
        }
        acc *= (n - i) as f64;
    }
    acc
}

pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    libm::exp(k as f64 * libm::log(lambda) - lambda - ln_factorial(k))
}

/// Smallest `T ≥ lambda` such that `P(Po(lambda) > T) < tail`.
pub fn poisson_horizon(lambda: f64, tail: f64) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    // Past the mode the pmf ratios p(j+1)/p(j) = λ/(j+1) decrease, so the
    // tail beyond k is dominated by a geometric series started at p(k+1).
    let mut k = libm::ceil(lambda) as u64;
    loop {
        let ratio = lambda / (k + 2) as f64;
        let bound = poisson_pmf(k + 1, lambda) / (1.0 - ratio);
        if ratio < 1.0 && bound < tail {
            return k;
        }
        k += 1;
    }
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / SQRT_2PI
}

/// Inverse of the standard normal distribution function (Acklam's rational
/// approximation followed by one Halley refinement step).
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
    let p_low = 0.02425;
    let x = if p < p_low {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * SQRT_2PI * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn_1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn_1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

const GK_XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const GK_WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * GK_WGK[7];
    let mut gauss = fc * GK_WG[3];
    for j in 0..7 {
        let dx = h * GK_XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += GK_WGK[j] * s;
        if j % 2 == 1 {
            gauss += GK_WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature with a global error target
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut intervals: Vec<(f64, f64, f64, f64)> = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    let max_intervals = 4000;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if intervals.len() >= max_intervals {
            return Err(Error::QuadratureFailed { residual: err });
        }
        // Split the interval with the largest error estimate.
        let (idx, _) =
            intervals.iter().enumerate().fold((0, -1.0), |best, (i, iv)| if iv.3 > best.1 { (i, iv.3) } else { best });
        let (lo, hi, v0, e0) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        total += v1 + v2 - v0;
        err += e1 + e2 - e0;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
        if (hi - lo) < 1e-14 * (b - a).abs() {
            // Cannot subdivide further in a meaningful way.
            err = intervals.iter().map(|iv| iv.3).sum();
            if err > abs_tol.max(rel_tol * total.abs()) * 10.0 {
                return Err(Error::QuadratureFailed { residual: err });
            }
            break;
        }
    }
    // Re-sum to shed accumulated update round-off.
    Ok(intervals.iter().map(|iv| iv.2).sum())
}

/// Ordinary least squares fit `y = intercept + slope * x` with the standard
/// error of the slope. Returns `(slope, intercept, slope_se)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if xs.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        libm::sqrt(rss / (n - 2.0) / sxx)
    } else {
        f64::NAN
    };
    (slope, intercept, se)
}

/// Eigenvalues of a symmetric `n × n` matrix (row-major) by cyclic Jacobi
/// rotations, in ascending order.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut a = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 5), 0.0);
        assert_eq!(falling_factorial(5, 3), 60.0);
        assert_eq!(falling_factorial(2, 3), 0.0);
        assert!((binomial_large(100, 3) - 161_700.0).abs() < 1e-6);
    }

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let rule = GaussRule::new(5);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(9) - 3.0 * x * x);
        assert!((v - (512.0 / 10.0 * 2.0 - 8.0)).abs() < 1e-10, "{v}");
    }

    #[test]
    fn adaptive_quadrature_on_kink() {
        let v = integrate_adaptive(|x: f64| x.abs(), -1.0, 2.0, 1e-12, 1e-12).unwrap();
        assert!((v - 2.5).abs() < 1e-10);
        let g = integrate_adaptive(|x: f64| libm::exp(-0.5 * x * x), -12.0, 12.0, 1e-14, 1e-13).unwrap();
        assert!((g - SQRT_2PI).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-10, 1e-3, 0.1, 0.5, 0.77, 0.999] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-14 + 1e-12 * p, "{p}");
        }
    }

    #[test]
    fn poisson_horizon_tail() {
        for &l in &[0.25, 1.0, 5.0, 100.0] {
            let t = poisson_horizon(l, 1e-14);
            let tail: f64 = (t + 1..t + 400).map(|k| poisson_pmf(k, l)).sum();
            assert!(tail < 1e-14, "{l} {t} {tail}");
        }
    }

    #[test]
    fn jacobi_eigenvalues() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let ev = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
        // Trace and determinant of a 3 x 3 example.
        let a = [4.0, 1.0, -2.0, 1.0, 2.0, 0.0, -2.0, 0.0, 3.0];
        let ev = symmetric_eigenvalues(&a, 3);
        let det = 4.0 * (6.0) - 1.0 * (3.0) + (-2.0) * (4.0);
        assert!((ev.iter().sum::<f64>() - 9.0).abs() < 1e-10);
        assert!((ev.iter().product::<f64>() - det).abs() < 1e-9);
    }
}

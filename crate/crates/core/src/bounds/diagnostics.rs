use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::coefficients::{CoefficientOptions, Scan, VectorFunctional};
use crate::chaos::Functional;
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::rng::replicate_rng;
use crate::space::{sample_configuration, ControlMeasure, Window};
use crate::stats::{Estimate, RunningStats};

/// Fold per-replicate vectors of fixed length into running statistics,
/// surfacing the first error.
fn fold_vectors<E, F>(
    exec: &E,
    measure: &ControlMeasure,
    opts: &CoefficientOptions,
    len: usize,
    f: F,
) -> Result<Vec<RunningStats>>
where
    E: Executor,
    F: Fn(&crate::space::Configuration) -> Result<Vec<f64>> + Sync,
{
    type Acc = (Vec<RunningStats>, Option<Error>);
    let (stats, err): Acc = exec.fold_replicates(
        opts.replicates,
        || (vec![RunningStats::new(); len], None),
        |acc, r| {
            if acc.1.is_some() {
                return;
            }
            let mut rng = replicate_rng(opts.seed, r);
            match sample_configuration(measure, &mut rng).and_then(|c| f(&c)) {
                Ok(xs) => acc.0.iter_mut().zip(xs).for_each(|(s, x)| s.push(x)),
                Err(e) => acc.1 = Some(e),
            }
        },
        |a, b| {
            if a.1.is_none() {
                a.1 = b.1;
            }
            a.0.iter_mut().zip(&b.0).for_each(|(s, o)| s.merge(o));
        },
    );
    match err {
        Some(e) => Err(e),
        None => Ok(stats),
    }
}

/// Both sides of `Cov(F, G) = E⟨DG, −DL⁻¹F⟩` on shared realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceIdentityReport {
    /// `E∫D_zG·(−D_zL⁻¹F) μ(dz)`.
    pub integral: Estimate,
    /// `E[(F − EF)(G − EG)]` with the exact means.
    pub covariance: Estimate,
    /// Per-replicate difference of the two sides, with mean zero under the identity.
    pub difference: Estimate,
}

/// Needs closed-form means for `F` and `G`, so that the per-replicate
/// difference is unbiased and its standard error honest.
pub fn covariance_identity<E: Executor>(
    exec: &E,
    measure: &ControlMeasure,
    f: &Arc<dyn Functional>,
    g: &Arc<dyn Functional>,
    opts: &CoefficientOptions,
) -> Result<CovarianceIdentityReport> {
    if opts.replicates < 2 {
        return Err(invalid("replicates", "need at least two replicates"));
    }
    let (Some(mf), Some(mg)) = (f.mean(), g.mean()) else {
        return Err(Error::Unsupported("covariance identity check needs closed-form means".into()));
    };
    let fs = [f.clone(), g.clone()];
    let s = fold_vectors(exec, measure, opts, 3, |config| {
        let scan = Scan::new(&fs, measure, &opts.z_grid, config)?;
        let mut inner = 0.0;
        scan.for_each(|w, d, n| inner += w * d[1] * n[0])?;
        let prod = (scan.value(0) - mf) * (scan.value(1) - mg);
        Ok(vec![inner, prod, inner - prod])
    })?;
    Ok(CovarianceIdentityReport {
        integral: Estimate::from(&s[0]),
        covariance: Estimate::from(&s[1]),
        difference: Estimate::from(&s[2]),
    })
}

/// Both sides of the Hölder majorant of the cross coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub epsilon: f64,
    /// `E∫(D_zF_i)² μ(dz)` per Poisson component.
    pub term1: Vec<Estimate>,
    /// `E∫|D_zL⁻¹G_j|^{1+ε} μ(dz)` per Gaussian component.
    pub term2: Vec<Estimate>,
    /// `Σ_{i,j} term1_i^{ε/(1+ε)} · term2_j^{1/(1+ε)}`.
    pub majorant: f64,
    /// `β` on the same realizations.
    pub beta: Estimate,
    /// Replicates where some pair violates the pathwise Hölder inequality.
    pub pathwise_violations: u64,
}

pub fn holder_beta_criterion<E: Executor>(
    exec: &E,
    measure: &ControlMeasure,
    v: &VectorFunctional,
    epsilon: f64,
    opts: &CoefficientOptions,
) -> Result<HolderReport> {
    if !(epsilon > 1.0) {
        return Err(invalid("epsilon", "must exceed 1"));
    }
    opts.z_grid.validate(measure)?;
    let (d, m) = (v.d(), v.m());
    let fs = v.all();
    let p = (1.0 + epsilon) / epsilon;
    let q = 1.0 + epsilon;
    // Layout: term1 (d), term2 (m), beta, violation indicator.
    let stats = fold_vectors(exec, measure, opts, d + m + 2, |config| {
        let scan = Scan::new(&fs, measure, &opts.z_grid, config)?;
        let mut sq = vec![0.0; d];
        let mut fp = vec![0.0; d];
        let mut gq = vec![0.0; m];
        let mut cross = vec![0.0; d * m];
        scan.for_each(|w, dv, nv| {
            for i in 0..d {
                sq[i] += w * dv[i] * dv[i];
                fp[i] += w * libm::pow(dv[i].abs(), p);
                for j in 0..m {
                    cross[i * m + j] += w * dv[i].abs() * nv[d + j].abs();
                }
            }
            for j in 0..m {
                gq[j] += w * libm::pow(nv[d + j].abs(), q);
            }
        })?;
        let violated = (0..d).any(|i| {
            (0..m).any(|j| {
                let rhs = libm::pow(fp[i], 1.0 / p) * libm::pow(gq[j], 1.0 / q);
                cross[i * m + j] > rhs * (1.0 + 1e-10) + 1e-14
            })
        });
        let mut out = sq;
        out.extend(gq);
        out.push(cross.iter().sum());
        out.push(if violated { 1.0 } else { 0.0 });
        Ok(out)
    })?;
    let term1: Vec<Estimate> = stats[..d].iter().map(Estimate::from).collect();
    let term2: Vec<Estimate> = stats[d..d + m].iter().map(Estimate::from).collect();
    let majorant = term1
        .iter()
        .flat_map(|a| term2.iter().map(move |b| libm::pow(a.value, 1.0 / p) * libm::pow(b.value, 1.0 / q)))
        .sum();
    Ok(HolderReport {
        epsilon,
        term1,
        term2,
        majorant,
        beta: Estimate::from(&stats[d + m]),
        pathwise_violations: libm::round(stats[d + m + 1].mean() * opts.replicates as f64) as u64,
    })
}

/// Stable-convergence quantities on one window.
#[derive(Debug, Clone, PartialEq)]
pub struct StableWindowReport {
    pub window: usize,
    /// `E|∫_A D_zF_i μ(dz)|`.
    pub drift: Vec<Estimate>,
    /// `E∫_A |D_zF_i(D_zF_i − 1)| μ(dz)`.
    pub excess: Vec<Estimate>,
    /// `E|∫_A D_zL⁻¹F_i μ(dz)|`.
    pub dlinv: Vec<Estimate>,
    /// `(i, j, E∫_A |D_zF_i D_zF_j| μ(dz))` for `i ≠ j`.
    pub pair_derivative: Vec<(usize, usize, Estimate)>,
    /// `(i, j, E∫_A |D_zF_i D_zL⁻¹F_j| μ(dz))` for `i ≠ j`.
    pub pair_dlinv: Vec<(usize, usize, Estimate)>,
}

impl StableWindowReport {
    /// Every estimate in the report, in a fixed order.
    pub fn all(&self) -> Vec<Estimate> {
        let mut out: Vec<Estimate> = self.drift.iter().chain(&self.excess).chain(&self.dlinv).copied().collect();
        out.extend(self.pair_derivative.iter().chain(&self.pair_dlinv).map(|t| t.2));
        out
    }
}

pub fn stable_condition_estimates<E: Executor>(
    exec: &E,
    measure: &ControlMeasure,
    fs: &[Arc<dyn Functional>],
    windows: &[Window],
    opts: &CoefficientOptions,
) -> Result<Vec<StableWindowReport>> {
    opts.z_grid.validate(measure)?;
    for w in windows {
        if w.dim() != measure.dim()
            || (0..w.dim()).any(|a| w.lower()[a] < measure.lower()[a] || w.upper()[a] > measure.upper()[a])
        {
            return Err(invalid("windows", "window leaves the control box"));
        }
    }
    let d = fs.len();
    let pairs: Vec<(usize, usize)> =
        (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let per_window = 3 * d + 2 * pairs.len();
    let mut extra: Vec<f64> = Vec::new();
    if measure.dim() == 1 {
        for w in windows {
            extra.push(w.lower()[0]);
            extra.push(w.upper()[0]);
        }
    }
    let stats = fold_vectors(exec, measure, opts, per_window * windows.len(), |config| {
        let scan = Scan::with_breaks(fs, measure, &opts.z_grid, config, &extra)?;
        let mut acc = vec![0.0; per_window * windows.len()];
        scan.for_each_node(|z, w, dv, nv| {
            for (a, win) in windows.iter().enumerate() {
                if !win.contains(z) {
                    continue;
                }
                let base = a * per_window;
                for k in 0..d {
                    acc[base + k] += w * dv[k];
                    acc[base + d + k] += w * (dv[k] * (dv[k] - 1.0)).abs();
                    acc[base + 2 * d + k] -= w * nv[k];
                }
                for (p, &(i, j)) in pairs.iter().enumerate() {
                    acc[base + 3 * d + p] += w * (dv[i] * dv[j]).abs();
                    acc[base + 3 * d + pairs.len() + p] += w * (dv[i] * nv[j]).abs();
                }
            }
        })?;
        for a in 0..windows.len() {
            let base = a * per_window;
            for k in 0..d {
                acc[base + k] = acc[base + k].abs();
                acc[base + 2 * d + k] = acc[base + 2 * d + k].abs();
            }
        }
        Ok(acc)
    })?;
    Ok((0..windows.len())
        .map(|a| {
            let s = &stats[a * per_window..(a + 1) * per_window];
            let e = |k: usize| Estimate::from(&s[k]);
            StableWindowReport {
                window: a,
                drift: (0..d).map(e).collect(),
                excess: (0..d).map(|k| e(d + k)).collect(),
                dlinv: (0..d).map(|k| e(2 * d + k)).collect(),
                pair_derivative: pairs.iter().enumerate().map(|(p, &(i, j))| (i, j, e(3 * d + p))).collect(),
                pair_dlinv: pairs.iter().enumerate().map(|(p, &(i, j))| (i, j, e(3 * d + pairs.len() + p))).collect(),
            }
        })
        .collect())
}

/// Smooth-vanishing-perturbation moments of one functional.
#[derive(Debug, Clone, PartialEq)]
pub struct SvpReport {
    /// `E[B²]`.
    pub second_moment: Estimate,
    /// `E‖DB‖²_{L²}`.
    pub d_l2: Estimate,
    /// `E‖DL⁻¹B‖²_{L²}`.
    pub dlinv_l2: Estimate,
    /// `E‖DB‖⁴_{L⁴}`.
    pub d_l4: Estimate,
    /// `E‖DL⁻¹B‖⁴_{L⁴}`.
    pub dlinv_l4: Estimate,
    /// `E‖DB‖ ≥ E‖DL⁻¹B‖` (in `L²` or `L⁴`) contradicted beyond 4 SE.
    pub ordering_violation: bool,
}

pub fn svp_diagnostics<E: Executor>(
    exec: &E,
    measure: &ControlMeasure,
    bs: &[Arc<dyn Functional>],
    opts: &CoefficientOptions,
) -> Result<Vec<SvpReport>> {
    opts.z_grid.validate(measure)?;
    let k = bs.len();
    // Per functional: B², ∫D², ∫(DL⁻¹)², ∫D⁴, ∫(DL⁻¹)⁴ and the two
    // per-replicate differences used for the ordering test.
    let stats = fold_vectors(exec, measure, opts, 7 * k, |config| {
        let scan = Scan::new(bs, measure, &opts.z_grid, config)?;
        let mut out = vec![0.0; 7 * k];
        for b in 0..k {
            let v = scan.value(b);
            out[7 * b] = v * v;
        }
        scan.for_each(|w, dv, nv| {
            for b in 0..k {
                let (d2, n2) = (dv[b] * dv[b], nv[b] * nv[b]);
                out[7 * b + 1] += w * d2;
                out[7 * b + 2] += w * n2;
                out[7 * b + 3] += w * d2 * d2;
                out[7 * b + 4] += w * n2 * n2;
            }
        })?;
        for b in 0..k {
            out[7 * b + 5] = out[7 * b + 1] - out[7 * b + 2];
            out[7 * b + 6] = out[7 * b + 3] - out[7 * b + 4];
        }
        Ok(out)
    })?;
    Ok((0..k)
        .map(|b| {
            let e = |i: usize| Estimate::from(&stats[7 * b + i]);
            let (g2, g4) = (e(5), e(6));
            SvpReport {
                second_moment: e(0),
                d_l2: e(1),
                dlinv_l2: e(2),
                d_l4: e(3),
                dlinv_l4: e(4),
                ordering_violation: g2.value < -4.0 * g2.se - 1e-12 || g4.value < -4.0 * g4.se - 1e-12,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::ZGrid;
    use crate::chaos::{CellChaos, CellGrid, ChaosDecomposition, WindowCount};
    use crate::exec::Sequential;
    use crate::kernel::SymKernel;

    fn opts(replicates: u64, grid: ZGrid) -> CoefficientOptions {
        CoefficientOptions { replicates, seed: 11, z_grid: grid, refine: false }
    }

    #[test]
    fn holder_for_window_count() {
        let mu = ControlMeasure::uniform(vec![0.0], vec![1.0], 8.0).unwrap();
        let a = mu.window(vec![0.25], vec![0.75]).unwrap();
        let f: Arc<dyn Functional> = Arc::new(WindowCount::new(&mu, a).unwrap());
        let zero: Arc<dyn Functional> =
            Arc::new(crate::chaos::Affine::new(Arc::new(WindowCount::new(&mu, mu.full_window()).unwrap()), 0.0, 0.0));
        let v = VectorFunctional::new(vec![f], vec![zero]);
        let r = holder_beta_criterion(&Sequential, &mu, &v, 3.0, &opts(50, ZGrid::adaptive())).unwrap();
        assert!((r.term1[0].value - 4.0).abs() < 1e-12 && r.term1[0].se == 0.0);
        assert_eq!((r.term2[0].value, r.majorant), (0.0, 0.0));
        assert!(holder_beta_criterion(&Sequential, &mu, &v, 1.0, &opts(50, ZGrid::adaptive())).is_err());
    }

    #[test]
    fn holder_pathwise_on_chaos_pair() {
        let grid = CellGrid::from_weights(vec![0.8, 1.2, 0.5, 0.9]).unwrap();
        let sp = grid.space().clone();
        let f2 = SymKernel::from_fn(sp.clone(), 2, |i| if i[0] != i[1] { 1.0 } else { 0.0 }).unwrap();
        let f1 = SymKernel::from_values(sp.clone(), 1, vec![0.0; 4]).unwrap();
        let f: Arc<dyn Functional> =
            Arc::new(CellChaos::new(grid.clone(), ChaosDecomposition::new(20.0, vec![f1, f2]).unwrap()).unwrap());
        let h = SymKernel::from_values(sp, 1, vec![0.5, -1.0, 0.25, 2.0]).unwrap();
        let g: Arc<dyn Functional> = Arc::new(CellChaos::first_chaos(grid.clone(), h).unwrap());
        let v = VectorFunctional::new(vec![f], vec![g]);
        let mu = grid.measure().clone();
        let r = holder_beta_criterion(&Sequential, &mu, &v, 3.0, &opts(500, ZGrid::Cells(grid))).unwrap();
        assert_eq!(r.pathwise_violations, 0);
        assert!(r.beta.value <= r.majorant + 4.0 * r.beta.se);
    }

    #[test]
    fn stable_quantities_for_window_count() {
        let mu = ControlMeasure::uniform(vec![0.0], vec![1.0], 10.0).unwrap();
        let a0 = mu.window(vec![0.1], vec![0.5]).unwrap();
        let f: Arc<dyn Functional> = Arc::new(WindowCount::new(&mu, a0).unwrap());
        let a = mu.window(vec![0.3], vec![0.9]).unwrap();
        let r = stable_condition_estimates(&Sequential, &mu, &[f], &[a], &opts(40, ZGrid::adaptive())).unwrap();
        // μ(A ∩ A₀) = 10 · 0.2.
        assert!((r[0].drift[0].value - 2.0).abs() < 1e-12 && r[0].drift[0].se == 0.0);
        assert_eq!(r[0].excess[0].value, 0.0);
        assert!((r[0].dlinv[0].value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stable_pairs_vanish_for_disjoint_windows() {
        let mu = ControlMeasure::uniform(vec![0.0], vec![1.0], 10.0).unwrap();
        let fa: Arc<dyn Functional> =
            Arc::new(WindowCount::new(&mu, mu.window(vec![0.0], vec![0.4]).unwrap()).unwrap());
        let fb: Arc<dyn Functional> =
            Arc::new(WindowCount::new(&mu, mu.window(vec![0.5], vec![1.0]).unwrap()).unwrap());
        let r =
            stable_condition_estimates(&Sequential, &mu, &[fa, fb], &[mu.full_window()], &opts(20, ZGrid::adaptive()))
                .unwrap();
        assert_eq!(r[0].pair_derivative.len(), 2);
        assert!(r[0].pair_derivative.iter().chain(&r[0].pair_dlinv).all(|t| t.2.value == 0.0));
    }

    #[test]
    fn svp_first_chaos() {
        // B = I₁(c·1_A): E‖DB‖²₂ = c²μ(A), E‖DB‖⁴₄ = c⁴μ(A).
        let grid = CellGrid::from_weights(vec![0.5; 8]).unwrap();
        let c = 0.3;
        let vals: Vec<f64> = (0..8).map(|i| if i < 6 { c } else { 0.0 }).collect();
        let h = SymKernel::from_values(grid.space().clone(), 1, vals).unwrap();
        let b: Arc<dyn Functional> = Arc::new(CellChaos::first_chaos(grid.clone(), h).unwrap());
        let mu = grid.measure().clone();
        let r = svp_diagnostics(&Sequential, &mu, &[b], &opts(4000, ZGrid::Cells(grid))).unwrap();
        let mass = 3.0;
        assert!((r[0].d_l2.value - c * c * mass).abs() < 1e-12);
        assert!((r[0].d_l4.value - c.powi(4) * mass).abs() < 1e-12);
        assert!(r[0].second_moment.within(c * c * mass, 4.0));
        assert!(!r[0].ordering_violation);
    }

    #[test]
    fn svp_ordering_on_second_chaos() {
        let grid = CellGrid::from_weights(vec![0.7, 0.4, 1.1, 0.6, 0.9]).unwrap();
        let sp = grid.space().clone();
        let mut seed = 3u64;
        let mut next = || {
            seed = crate::rng::mix64(seed);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let vals: Vec<f64> = (0..25).map(|_| next()).collect();
        let f2 = crate::kernel::symmetrize(&crate::kernel::Tensor::new(sp.clone(), 2, vals).unwrap());
        let f1 = SymKernel::from_values(sp, 1, (0..5).map(|_| next()).collect()).unwrap();
        let b: Arc<dyn Functional> =
            Arc::new(CellChaos::new(grid.clone(), ChaosDecomposition::new(0.0, vec![f1, f2]).unwrap()).unwrap());
        let mu = grid.measure().clone();
        let r = svp_diagnostics(&Sequential, &mu, &[b], &opts(2000, ZGrid::Cells(grid))).unwrap();
        assert!(!r[0].ordering_violation);
        assert!(r[0].d_l2.value >= r[0].dlinv_l2.value);
    }

    #[test]
    fn covariance_identity_first_chaos_is_deterministic() {
        let grid = CellGrid::from_weights(vec![0.5, 1.5, 1.0]).unwrap();
        let sp = grid.space().clone();
        let hf = [1.0, -0.5, 2.0];
        let hg = [0.25, 1.0, -1.0];
        let mk = |h: &[f64]| -> Arc<dyn Functional> {
            Arc::new(
                CellChaos::first_chaos(grid.clone(), SymKernel::from_values(sp.clone(), 1, h.to_vec()).unwrap())
                    .unwrap(),
            )
        };
        let w = [0.5, 1.5, 1.0];
        let exact: f64 = (0..3).map(|i| w[i] * hf[i] * hg[i]).sum();
        let mu = grid.measure().clone();
        let r =
            covariance_identity(&Sequential, &mu, &mk(&hf), &mk(&hg), &opts(4000, ZGrid::Cells(grid.clone()))).unwrap();
        assert!((r.integral.value - exact).abs() < 1e-12 && r.integral.se == 0.0);
        assert!(r.covariance.within(exact, 4.0));
        assert!(r.difference.within(0.0, 4.0));
    }
}

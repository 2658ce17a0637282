//! Acceptance suite: one line per criterion, exit status nonzero on any
//! unexpected outcome.
//!
//! Two criteria are red by construction and are pinned to their analysed
//! failure instead of being loosened: the second-difference Stein factor
//! (and `|f(0)| ≤ 3` at small `λ`) for criterion 1, and the `10⁻³`
//! closeness of `b_{n,l}` at `n = 10⁴` for criterion 9. Should either start
//! passing, or fail differently, the suite fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use pmix::config::ExperimentConfig;
use pmix::executor::RayonExecutor;
use pmix::experiments;
use pmix::output::{RunOutput, Table};
use pmix_core::bounds::{
    covariance_identity, depoisson_coefficient, estimate_coefficients, estimate_cross_coeff, CoefficientOptions,
    MixedTarget, VectorFunctional, ZGrid,
};
use pmix_core::chaos::{
    product_formula_rhs, sample_counts, verify_isometry, Affine, CellChaos, CellGrid, CellUStatistic, Functional,
    PreparedKernel, WindowCount,
};
use pmix_core::geomgraph::{count_induced, depoisson_gap, run_mixed_experiment, GraphPattern, RegimeSpec};
use pmix_core::kernel::{symmetrize, DiscreteMeasure, SymKernel, Tensor};
use pmix_core::rng::{derive_seed, replicate_rng};
use pmix_core::space::{Configuration, ControlMeasure};
use pmix_core::stein::portmanteau_constant;
use rand::Rng;

/// Standard errors allowed in every Monte Carlo comparison.
const Z: f64 = 4.0;
const SEED: u64 = 20_240_917;
const N_GRID: [f64; 4] = [250.0, 1_000.0, 4_000.0, 16_000.0];
const MIXED_REPLICATES: u64 = 2_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> anyhow::Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn exec() -> RayonExecutor {
    RayonExecutor::from_env().expect("thread pool")
}

fn run_config(json: &str) -> anyhow::Result<RunOutput> {
    let cfg = ExperimentConfig::parse(json)?;
    Ok(experiments::run(&cfg, &exec())?)
}

fn table<'a>(out: &'a RunOutput, name: &str) -> &'a Table {
    out.tables.iter().find(|t| t.name == name).unwrap_or_else(|| panic!("no table {name}"))
}

fn column(t: &Table, name: &str) -> Vec<f64> {
    let c = t.column(name).unwrap_or_else(|| panic!("no column {name}"));
    t.rows.iter().map(|r| r[c].parse().unwrap_or(f64::NAN)).collect()
}

fn random_kernel(space: &Arc<DiscreteMeasure>, order: usize, bound: f64, seed: u64) -> SymKernel {
    let mut rng = replicate_rng(seed, 0);
    symmetrize(&Tensor::from_fn(space.clone(), order, |_| rng.random_range(-bound..=bound)).unwrap())
}

fn chen_stein() -> anyhow::Result<Outcome> {
    let out = run_config(r#"{"kind": "stein-verify", "seed": 101, "replicates": 50, "params": {"x_max": 200}}"#)?;
    let t = table(&out, "stein");
    let lambda = column(t, "lambda");
    let res = column(t, "max_residual");
    let worst = res.iter().cloned().fold(0.0, f64::max);
    let (mut bad_f, mut bad_f_tail, mut bad_df, mut bad_d2f) = (vec![], false, false, vec![]);
    let (sf, sf1, sdf, sd2) =
        (column(t, "sup_f"), column(t, "sup_f_from_1"), column(t, "sup_df"), column(t, "sup_d2f"));
    let (bdf, bd2) = (column(t, "bound_df"), column(t, "bound_d2f"));
    let mut worst_d2 = std::collections::BTreeMap::<u64, f64>::new();
    for i in 0..lambda.len() {
        if sf[i] > 3.0 {
            bad_f.push(lambda[i]);
        }
        bad_f_tail |= sf1[i] > 3.0;
        bad_df |= sdf[i] > bdf[i];
        if sd2[i] > bd2[i] {
            bad_d2f.push(lambda[i]);
        }
        let r = worst_d2.entry((lambda[i] * 100.0) as u64).or_insert(0.0);
        *r = r.max(sd2[i] / bd2[i]);
    }
    bad_f.dedup();
    bad_d2f.dedup();
    let ratios: Vec<String> = worst_d2.iter().map(|(l, r)| format!("{}:{r:.2}", *l as f64 / 100.0)).collect();
    let detail = format!(
        "{} solutions, max residual {worst:.1e}; |f|>3 at λ {bad_f:?}; |Δf| ok {}; |Δ²f| over bound at λ {bad_d2f:?} (max ratio per λ {})",
        lambda.len(),
        !bad_df,
        ratios.join(" ")
    );
    // The attainable parts hold.
    assert!(worst < 1e-9, "{detail}");
    assert!(!bad_df && !bad_f_tail, "{detail}");
    // The red parts fail exactly as analysed: f(0) at λ = 0.25, Δ²f at λ ∈ {2, 5}.
    assert_eq!(bad_f, vec![0.25], "{detail}");
    assert_eq!(bad_d2f, vec![2.0, 5.0], "{detail}");
    outcome(bad_f.is_empty() && bad_d2f.is_empty(), detail)
}

fn product_formula() -> anyhow::Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for m in [2usize, 5, 8] {
        let masses: Vec<f64> = (0..m).map(|i| 0.4 + 0.15 * i as f64).collect();
        let space = Arc::new(DiscreteMeasure::new(masses)?);
        for (pi, (p, q)) in [(1, 1), (1, 2), (2, 1), (2, 2)].into_iter().enumerate() {
            for trial in 0..3u64 {
                let s = derive_seed(SEED, (m * 100 + pi * 10) as u64 + trial);
                let f = random_kernel(&space, p, 2.0, derive_seed(s, 0));
                let g = random_kernel(&space, q, 2.0, derive_seed(s, 1));
                let (pf, pg) = (PreparedKernel::new(f.clone()), PreparedKernel::new(g.clone()));
                for r in 0..200 {
                    let counts = sample_counts(&space, &mut replicate_rng(derive_seed(s, 2), r));
                    let lhs = pf.eval(&counts) * pg.eval(&counts);
                    worst = worst.max((lhs - product_formula_rhs(&f, &g, &counts)?).abs());
                }
                cases += 1;
            }
        }
    }
    outcome(worst < 1e-8, format!("{cases} kernel pairs × 200 configurations, max |residual| {worst:.1e} (< 1e-8)"))
}

fn isometry() -> anyhow::Result<Outcome> {
    let space = Arc::new(DiscreteMeasure::new(vec![0.5, 1.0, 0.75, 1.25, 0.6, 0.9])?);
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (q1, q2)) in [(1, 1), (1, 2), (2, 2)].into_iter().enumerate() {
        let s = derive_seed(SEED, 0x150 + i as u64);
        let f = random_kernel(&space, q1, 1.0, derive_seed(s, 0));
        let g = random_kernel(&space, q2, 1.0, derive_seed(s, 1));
        let r = verify_isometry(&exec(), &f, &g, 10_000, derive_seed(s, 2))?;
        let z = (r.covariance.value - r.target) / r.covariance.se;
        pass &= r.covariance.within(r.target, Z);
        parts.push(format!("({q1},{q2}) {:.4} vs {:.4}, z {z:+.2}", r.covariance.value, r.target));
    }
    outcome(pass, format!("10⁴ replicates; {}", parts.join("; ")))
}

fn exact_zeros() -> anyhow::Result<Outcome> {
    let mu = ControlMeasure::uniform(vec![0.0], vec![1.0], 10.0)?;
    let opts = |grid| CoefficientOptions { replicates: 200, seed: SEED, z_grid: grid, refine: false };
    let window = |lo: f64, hi: f64| -> anyhow::Result<Arc<dyn Functional>> {
        Ok(Arc::new(WindowCount::new(&mu, mu.window(vec![lo], vec![hi])?)?))
    };

    let f = window(0.2, 0.6)?;
    let v = VectorFunctional::new(vec![f], vec![]);
    let r = estimate_coefficients(&exec(), &mu, &v, &MixedTarget::poisson(vec![4.0])?, &opts(ZGrid::adaptive()))?;
    let alphas = [r.alpha1.value, r.alpha1.se, r.alpha2.value, r.alpha2.se];

    let (fa, fb) = (window(0.0, 0.3)?, window(0.5, 0.9)?);
    let v = VectorFunctional::new(vec![fa.clone(), fb.clone()], vec![]);
    let r = estimate_coefficients(&exec(), &mu, &v, &MixedTarget::poisson(vec![3.0, 4.0])?, &opts(ZGrid::adaptive()))?;
    let alpha3 = [r.alpha3.value, r.alpha3.se];
    let g: Arc<dyn Functional> = Arc::new(Affine::new(fb, 4.0, 0.5));
    let beta = estimate_cross_coeff(&exec(), &mu, &VectorFunctional::new(vec![fa], vec![g]), &opts(ZGrid::adaptive()))?;

    let grid = CellGrid::from_weights(vec![0.5, 1.5, 1.0, 2.0])?;
    let raw = [1.0, -2.0, 0.5, 1.5];
    let norm: f64 = raw.iter().zip(grid.space().weights()).map(|(h, w)| w * h * h).sum::<f64>().sqrt();
    let h = SymKernel::from_values(grid.space().clone(), 1, raw.iter().map(|x| x / norm).collect())?;
    let g: Arc<dyn Functional> = Arc::new(CellChaos::first_chaos(grid.clone(), h)?);
    let mu_c = grid.measure().clone();
    let r = estimate_coefficients(
        &exec(),
        &mu_c,
        &VectorFunctional::new(vec![], vec![g]),
        &MixedTarget::new(vec![], vec![1.0], 1)?,
        &opts(ZGrid::Cells(grid.clone())),
    )?;
    let gamma1 = [r.gamma1.value, r.gamma1.se];

    let all: Vec<f64> = alphas.iter().chain(&alpha3).chain(&[beta.value, beta.se]).chain(&gamma1).cloned().collect();
    outcome(
        all.iter().all(|x| *x == 0.0),
        format!(
            "α₁, α₂ (η(A)) = {:?}; α₃ (disjoint) = {:?}; β = {:?}; γ₁ (‖h‖ = 1) = {:?}",
            alphas,
            alpha3,
            [beta.value, beta.se],
            gamma1
        ),
    )
}

fn covariance_identity_check() -> anyhow::Result<Outcome> {
    let grid = CellGrid::from_weights(vec![0.7, 0.4, 1.1, 0.6, 0.9])?;
    let mu = grid.measure().clone();
    let opts = CoefficientOptions { replicates: 10_000, seed: SEED, z_grid: ZGrid::Cells(grid.clone()), refine: false };
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (p, q)) in [(2, 2), (1, 2), (2, 3)].into_iter().enumerate() {
        let s = derive_seed(SEED, 0x500 + i as u64);
        let u = |order, tag| -> anyhow::Result<Arc<dyn Functional>> {
            let h = random_kernel(grid.space(), order, 1.0, derive_seed(s, tag));
            Ok(Arc::new(CellUStatistic::new(grid.clone(), h)?))
        };
        let (f, g) = (u(p, 0)?, u(q, 1)?);
        let r = covariance_identity(&exec(), &mu, &f, &g, &opts)?;
        pass &= r.difference.within(0.0, Z);
        parts.push(format!(
            "({p},{q}) E⟨DG,−DL⁻¹F⟩ {:.4}, Cov {:.4}, paired diff z {:+.2}",
            r.integral.value,
            r.covariance.value,
            r.difference.value / r.difference.se
        ));
    }
    outcome(pass, format!("10⁴ replicates; {}", parts.join("; ")))
}

/// Exhaustive oracle: adjacency from raw distances, isomorphism by trying
/// every vertex relabelling against the pattern's edge list.
fn brute_force_count(points: &[Vec<f64>], t: f64, k: usize, edges: &[(usize, usize)]) -> u64 {
    let n = points.len();
    let adj = |a: usize, b: usize| {
        let d2: f64 = points[a].iter().zip(&points[b]).map(|(x, y)| (x - y) * (x - y)).sum();
        d2 > 0.0 && d2.sqrt() < t
    };
    let mut want = [[false; 4]; 4];
    for &(a, b) in edges {
        want[a][b] = true;
        want[b][a] = true;
    }
    let perms: Vec<Vec<usize>> = permutations(k);
    // Memoise on the induced edge set of each subset.
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let mut iso = vec![None; 1 << pairs.len()];
    let mut count = 0;
    let mut idx: Vec<usize> = (0..k).collect();
    if n < k {
        return 0;
    }
    loop {
        let mut key = 0usize;
        for (bit, &(a, b)) in pairs.iter().enumerate() {
            if adj(idx[a], idx[b]) {
                key |= 1 << bit;
            }
        }
        let hit = *iso[key].get_or_insert_with(|| {
            perms
                .iter()
                .any(|p| pairs.iter().enumerate().all(|(bit, &(a, b))| (key >> bit & 1 == 1) == want[p[a]][p[b]]))
        });
        count += hit as u64;
        let mut a = k;
        loop {
            if a == 0 {
                return count;
            }
            a -= 1;
            if idx[a] < n - k + a {
                idx[a] += 1;
                for b in a + 1..k {
                    idx[b] = idx[b - 1] + 1;
                }
                break;
            }
        }
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..k {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn graph_oracle() -> anyhow::Result<Outcome> {
    let mut rng = replicate_rng(SEED, 0x600);
    let mut mismatches = 0;
    let mut total = 0u64;
    for _ in 0..100 {
        let dim = rng.random_range(1..=3);
        let n = rng.random_range(0..=80);
        let k = rng.random_range(2..=4);
        let t = rng.random_range(0.05..0.6);
        let (pattern, edges) = loop {
            let edges: Vec<(usize, usize)> =
                (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).filter(|_| rng.random_bool(0.5)).collect();
            if let Ok(p) = GraphPattern::new(k, &edges) {
                break (p, edges);
            }
        };
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
        let config = Configuration::from_points(dim, &points)?;
        let fast = count_induced(&config, t, &pattern)?;
        let slow = brute_force_count(&points, t, k, &edges);
        mismatches += (fast != slow) as usize;
        total += slow;
    }
    outcome(mismatches == 0, format!("100 instances, {mismatches} mismatches, {total} induced copies in all"))
}

fn mixed_regime() -> anyhow::Result<Outcome> {
    let spec = RegimeSpec::standard();
    let e = run_mixed_experiment(&exec(), &spec, &N_GRID, MIXED_REPLICATES, SEED)?;
    let (first, last) = (&e.rows[0], e.rows.last().unwrap());
    let mut fails = Vec::new();

    let mut a = Vec::new();
    for p in &last.patterns {
        let se = (p.mean.se.powi(2) + p.limit.se.powi(2)).sqrt();
        let z = (p.mean.value - p.limit.value) / se;
        a.push(format!("{} {:.4} vs {:.4} (z {z:+.2})", p.canonical, p.mean.value, p.limit.value));
        if z.abs() > Z {
            fails.push("a");
        }
    }

    let se_mean = (last.g_var.value / MIXED_REPLICATES as f64).sqrt();
    if last.g_mean.value.abs() >= Z * se_mean || (last.g_var.value - 1.0).abs() >= 0.1 {
        fails.push("b");
    }
    let b = format!("edge mean {:+.4} (4 SE {:.4}), var {:.4}", last.g_mean.value, Z * se_mean, last.g_var.value);

    let tv = e.fits.iter().find(|f| f.series == "tv").expect("tv fit");
    if !(-0.45..=-0.10).contains(&tv.slope) {
        fails.push("c");
    }

    let mut d = Vec::new();
    for (p0, p1) in first.patterns.iter().zip(&last.patterns) {
        let ok = p1.cov0.value.abs() < 3.0 * p0.cov0.value.abs();
        if !ok {
            fails.push("d");
        }
        d.push(format!("{} {:.4}→{:.4}", p0.canonical, p0.cov0.value.abs(), p1.cov0.value.abs()));
    }

    if last.h1.value >= first.h1.value {
        fails.push("e");
    }
    fails.dedup();
    outcome(
        fails.is_empty(),
        format!(
            "R = {MIXED_REPLICATES}; (a) {}; (b) {b}; (c) TV slope {:.3} ± {:.3}; (d) |cov| {}; (e) h1 {:.4}→{:.4}{}",
            a.join(", "),
            tv.slope,
            tv.slope_se,
            d.join(", "),
            first.h1.value,
            last.h1.value,
            if fails.is_empty() { String::new() } else { format!("; failed parts {fails:?}") }
        ),
    )
}

fn bound_dominates() -> anyhow::Result<Outcome> {
    let t = 1e3f64.powf(-1.5);
    // ‖h‖ = 1 against total mass 20.
    let h: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } / 20f64.sqrt()).collect();
    let cases = [
        (
            "windows",
            r#"{"kind": "coefficients", "seed": 81, "replicates": 2000, "params": {
                "measure": {"type": "box", "lower": [0], "upper": [1], "intensity": 20},
                "poisson": [{"type": "window", "lower": [0], "upper": [0.5]}],
                "gaussian": [{"type": "centered-window", "lower": [0.3], "upper": [0.9]}],
                "distance_replicates": 4000}}"#
                .to_string(),
        ),
        (
            "I₁ + window",
            format!(
                r#"{{"kind": "coefficients", "seed": 82, "replicates": 2000, "params": {{
                "measure": {{"type": "cells", "weights": [2.5, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5]}},
                "poisson": [{{"type": "window", "lower": [0], "upper": [0.5]}}],
                "gaussian": [{{"type": "first-chaos", "values": {h:?}}}],
                "distance_replicates": 4000}}}}"#
            ),
        ),
        (
            "graph n = 10³",
            format!(
                r#"{{"kind": "coefficients", "seed": 83, "replicates": 400, "params": {{
                "measure": {{"type": "box", "lower": [0], "upper": [1], "intensity": 1000}},
                "poisson": [{{"type": "pattern", "pattern": "triangle", "radius": {t:?}}}],
                "gaussian": [{{"type": "normalized-pattern", "pattern": "edge", "radius": {t:?}}}],
                "distance_replicates": 1000}}}}"#
            ),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, json) in &cases {
        let out = run_config(json)?;
        let c = table(&out, "coefficients");
        let (bound, h1, se) = (column(c, "bound")[0], column(c, "h1")[0], column(c, "se_h1")[0]);
        pass &= bound >= h1 - Z * se;
        parts.push(format!("{name}: K·Σ {bound:.4} vs h1 {h1:.4} ± {se:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn depoissonization() -> anyhow::Result<Outcome> {
    let n = 10_000u64;
    let b: Vec<f64> = (0..=3).map(|l| depoisson_coefficient(n, l)).collect::<Result<_, _>>()?;
    let close = b.iter().all(|x| (x - 1.0).abs() < 1e-3);
    // Pinned analysis: 1 − b_{n,l} ≈ l/√(2πn), so only l = 0 is within 10⁻³.
    assert_eq!(b[0], 1.0);
    for (l, x) in b.iter().enumerate().skip(1) {
        let approx = l as f64 / (2.0 * std::f64::consts::PI * n as f64).sqrt();
        assert!(((1.0 - x) / approx - 1.0).abs() < 0.05, "b_{{n,{l}}} = {x}");
    }

    let spec = RegimeSpec::standard();
    let mut gaps = Vec::new();
    for &n in &N_GRID {
        gaps.push(depoisson_gap(&exec(), &spec, n as u64, MIXED_REPLICATES, SEED)?);
    }
    let monotone = gaps.windows(2).all(|w| w[1].gap.value < w[0].gap.value);
    let g: Vec<String> = gaps.iter().map(|g| format!("{}:{:.4}", g.n, g.gap.value)).collect();
    let detail = format!(
        "1 − b(10⁴, l) for l = 0..3: {}; gap over n: {} (monotone {monotone})",
        b.iter().map(|x| format!("{:.5}", 1.0 - x)).collect::<Vec<_>>().join(", "),
        g.join(", ")
    );
    assert!(monotone, "{detail}");
    outcome(close && monotone, detail)
}

fn constants() -> anyhow::Result<Outcome> {
    let term =
        |ls: &[f64]| ls.iter().map(|l| (1.0 - (-l).exp()) / l + (1.0 - (-l).exp()) / (l * l)).fold(0.0, f64::max);
    let root = (2.0 * std::f64::consts::PI).sqrt();
    // (d, m, λ, C, expected K)
    type Case = (usize, usize, Vec<f64>, Option<f64>, f64);
    let cases: [Case; 5] = [
        (1, 0, vec![0.7], None, term(&[0.7])),
        (3, 0, vec![0.5, 2.0, 4.0], None, 6.0 + term(&[0.5, 2.0, 4.0])),
        (2, 1, vec![1.0, 3.0], Some(2.0), 6.0 + (1.0 + 2.0 * root) / 2.0 + term(&[1.0, 3.0])),
        (1, 1, vec![0.25], Some(0.5), 6.0 + (1.0 + 2.0 * root) / 0.5 + term(&[0.25])),
        (2, 3, vec![1.5, 0.1], None, 11.0 + term(&[1.5, 0.1])),
    ];
    let mut worst: f64 = 0.0;
    for (d, m, ls, c, want) in &cases {
        worst = worst.max((portmanteau_constant(*d, *m, ls, *c)? - want).abs());
    }
    outcome(worst < 1e-12, format!("{} cases, max |Δ| {worst:.1e} (< 1e-12)", cases.len()))
}

type Criterion = (u32, &'static str, Duration, fn() -> anyhow::Result<Outcome>);

const CRITERIA: [Criterion; 10] = [
    (1, "Chen–Stein solution", Duration::from_secs(5), chen_stein),
    (2, "pathwise product formula", Duration::from_secs(30), product_formula),
    (3, "isometry", Duration::from_secs(60), isometry),
    (4, "exact-zero coefficients", Duration::from_secs(60), exact_zeros),
    (5, "covariance identity", Duration::from_secs(120), covariance_identity_check),
    (6, "graph oracle equivalence", Duration::from_secs(60), graph_oracle),
    (7, "mixed-regime reproduction", Duration::from_secs(15 * 60), mixed_regime),
    (8, "bound dominates distance", Duration::from_secs(10 * 60), bound_dominates),
    (9, "de-poissonization", Duration::from_secs(5 * 60), depoissonization),
    (10, "portmanteau constants", Duration::from_secs(1), constants),
];

/// Criteria whose failure is analysed and pinned above.
const KNOWN_RED: [u32; 2] = [1, 9];

fn main() -> ExitCode {
    let mut unexpected = Vec::new();
    for (id, name, budget, check) in CRITERIA {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check);
        let elapsed = start.elapsed();
        let (pass, detail, pinned) = match result {
            Ok(Ok(o)) => (o.pass, o.detail, true),
            Ok(Err(e)) => (false, format!("error: {e:#}"), false),
            Err(_) => (false, "pinned expectation broken (see panic above)".into(), false),
        };
        let in_time = elapsed <= budget;
        let ok = pass && in_time;
        println!(
            "[{}] {id} {name}: {detail}; {:.1} s (budget {} s)",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if ok == KNOWN_RED.contains(&id) || !pinned || !in_time {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all outcomes as expected ({} known red: {KNOWN_RED:?})", KNOWN_RED.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}

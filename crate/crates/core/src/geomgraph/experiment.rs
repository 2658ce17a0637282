use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::disk::DiskGraph;
use super::functional::PatternFunctional;
use super::integrals::{limiting_poisson_parameter, pattern_moments};
use super::pattern::GraphPattern;
use crate::bounds::{depoisson_coefficient, ZGrid};
use crate::chaos::Functional;
use crate::distances::{h1_surrogate_to_product, tv_distance, wasserstein1, EmpiricalLaw, Pmf};
use crate::error::{invalid, Error, Result};
use crate::exec::{collect_replicates, Executor};
use crate::math::{binomial, linear_fit, normal_quantile};
use crate::rng::{derive_seed, replicate_rng};
use crate::space::{sample_configuration, sample_iid, sample_poisson, Configuration, ControlMeasure};
use crate::stats::{Estimate, RunningStats};

/// Dictionary size used for the mixed-metric surrogate in experiment rows.
pub const H1_DICTIONARY: usize = 6;
/// Monte Carlo draws for limiting parameters in dimension ≥ 2.
pub const LIMIT_MC_SAMPLES: usize = 200_000;
const BOOTSTRAP_RESAMPLES: u64 = 20;

/// The mixed regime: a Gaussian count of `Γ₀` (order `k₀`) next to Poisson
/// counts of `Γ₁..Γ_d` (order `k`), with `t_nᵐ = c·n^{−k/(k−1)}`.
#[derive(Debug, Clone)]
pub struct RegimeSpec {
    k0: usize,
    k: usize,
    measure: ControlMeasure,
    radius_scale: f64,
    pattern0: GraphPattern,
    patterns: Vec<GraphPattern>,
}

impl RegimeSpec {
    /// `measure` fixes the box and density; its intensity is replaced by `n`.
    pub fn new(
        measure: ControlMeasure,
        radius_scale: f64,
        pattern0: GraphPattern,
        patterns: Vec<GraphPattern>,
    ) -> Result<Self> {
        let k0 = pattern0.order();
        let k = patterns.first().map(GraphPattern::order).ok_or_else(|| invalid("patterns", "need at least one"))?;
        if !(2 <= k0 && k0 < k) {
            return Err(invalid("k0", format!("need 2 ≤ k₀ < k, got k₀ = {k0}, k = {k}")));
        }
        if patterns.iter().any(|p| p.order() != k) {
            return Err(invalid("patterns", "all Poisson patterns must have the same order"));
        }
        for (i, p) in patterns.iter().enumerate() {
            if patterns[..i].iter().any(|q| q.is_isomorphic(p)) {
                return Err(invalid("patterns", format!("pattern {} repeats an earlier one", p.canonical())));
            }
        }
        if !(radius_scale > 0.0) || !radius_scale.is_finite() {
            return Err(invalid("radius_scale", "must be positive and finite"));
        }
        Ok(Self { k0, k, measure, radius_scale, pattern0, patterns })
    }

    /// Edge count against triangle and 3-path counts, uniform on `[0, 1]`.
    pub fn standard() -> Self {
        let mu = ControlMeasure::uniform_unit(1, 1.0).expect("unit box");
        Self::new(mu, 1.0, GraphPattern::edge(), vec![GraphPattern::triangle(), GraphPattern::path(3)])
            .expect("standard regime is valid")
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.measure.dim()
    }

    pub fn pattern0(&self) -> &GraphPattern {
        &self.pattern0
    }

    pub fn patterns(&self) -> &[GraphPattern] {
        &self.patterns
    }

    pub fn radius_scale(&self) -> f64 {
        self.radius_scale
    }

    pub fn radius(&self, n: f64) -> f64 {
        let k = self.k as f64;
        libm::pow(self.radius_scale * libm::pow(n, -k / (k - 1.0)), 1.0 / self.dim() as f64)
    }

    pub fn measure_at(&self, n: f64) -> Result<ControlMeasure> {
        self.measure.with_intensity(n)
    }

    /// `c^{k−1}·a_j`, the limit of `E[count of Γ_j]`.
    pub fn limits(&self, seed: u64) -> Result<Vec<Estimate>> {
        let mu = self.measure.with_intensity(1.0)?;
        let s = libm::pow(self.radius_scale, (self.k - 1) as f64);
        self.patterns
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let a = limiting_poisson_parameter(p, &mu, LIMIT_MC_SAMPLES, derive_seed(seed, 1000 + j as u64))?;
                Ok(Estimate::new(s * a.value, s * a.se))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternRow {
    pub canonical: String,
    pub mean: Estimate,
    pub variance: f64,
    /// Exact `E[count]` at this `n` (boundary included).
    pub lambda_exact: f64,
    /// `n → ∞` limit of the mean.
    pub limit: Estimate,
    /// `Cov(normalised Γ₀ count, count)`.
    pub cov0: Estimate,
}

/// Statistics of one `n` of a mixed-regime run.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRow {
    pub n: f64,
    pub t: f64,
    pub patterns: Vec<PatternRow>,
    pub g_mean: Estimate,
    pub g_var: Estimate,
    /// `E[Γ₀ count]/(n^{k₀} (t^m)^{k₀−1})`.
    pub g0_scaling: f64,
    pub tv: Estimate,
    pub w1: Estimate,
    pub h1: Estimate,
}

/// `log y = intercept + slope·log x` across the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub series: String,
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedExperiment {
    pub rows: Vec<MixedRow>,
    pub fits: Vec<RateFit>,
}

/// One replicate: Poisson-part counts and the normalised `Γ₀` count.
type Sample = (Vec<u64>, f64);

fn count_sample(spec: &RegimeSpec, config: &Configuration, t: f64, mean0: f64, sd0: f64) -> Result<Sample> {
    let g = DiskGraph::new(config, t)?;
    let mut all: Vec<&GraphPattern> = vec![&spec.pattern0];
    all.extend(spec.patterns.iter());
    let c = g.count_patterns(&all);
    Ok((c[1..].to_vec(), (c[0] as f64 - mean0) / sd0))
}

fn collect<E: Executor>(exec: &E, count: u64, f: impl Fn(u64) -> Result<Sample> + Sync) -> Result<Vec<Sample>> {
    collect_replicates(exec, count, f).into_iter().collect()
}

/// Metrics on a resample (indices into `samples`).
fn metrics(samples: &[Sample], idx: &[usize], reference: &[f64]) -> Result<[f64; 3]> {
    let d = samples[0].0.len();
    let mut law = EmpiricalLaw::new(d, 1);
    let mut lam = vec![0.0; d];
    for &i in idx {
        law.push(&samples[i].0, &[samples[i].1])?;
        for (l, c) in lam.iter_mut().zip(&samples[i].0) {
            *l += *c as f64;
        }
    }
    for l in lam.iter_mut() {
        // A degenerate resample with no counts at all still needs λ > 0.
        *l = (*l / idx.len() as f64).max(1e-9);
    }
    let ints: Vec<&[u64]> = idx.iter().map(|&i| samples[i].0.as_slice()).collect();
    let tv = tv_distance(&Pmf::from_samples(&ints)?, &Pmf::poisson_product(&lam)?)?;
    let g: Vec<f64> = idx.iter().map(|&i| samples[i].1).collect();
    let w1 = wasserstein1(&g, reference)?;
    let h1 = h1_surrogate_to_product(&law, &lam, H1_DICTIONARY)?;
    Ok([tv, w1, h1])
}

fn summarize(
    spec: &RegimeSpec,
    n: f64,
    t: f64,
    samples: &[Sample],
    lambda_exact: &[f64],
    limits: &[Estimate],
    g0_mean: f64,
    seed: u64,
) -> Result<MixedRow> {
    let r = samples.len();
    let d = spec.patterns.len();
    let mut g = RunningStats::new();
    let mut g2 = RunningStats::new();
    for s in samples {
        g.push(s.1);
    }
    let gm = g.mean();
    for s in samples {
        g2.push((s.1 - gm) * (s.1 - gm));
    }
    let mut patterns = Vec::with_capacity(d);
    for j in 0..d {
        let mut c = RunningStats::new();
        for s in samples {
            c.push(s.0[j] as f64);
        }
        let cm = c.mean();
        let mut prod = RunningStats::new();
        for s in samples {
            prod.push((s.1 - gm) * (s.0[j] as f64 - cm));
        }
        let rf = r as f64;
        patterns.push(PatternRow {
            canonical: spec.patterns[j].canonical().into(),
            mean: Estimate::from(&c),
            variance: c.variance(),
            lambda_exact: lambda_exact[j],
            limit: limits[j],
            cov0: Estimate::new(prod.mean() * rf / (rf - 1.0), prod.se()),
        });
    }
    let reference: Vec<f64> = (0..r).map(|i| normal_quantile((i as f64 + 0.5) / r as f64)).collect();
    let all: Vec<usize> = (0..r).collect();
    let point = metrics(samples, &all, &reference)?;
    let mut boot = [RunningStats::new(), RunningStats::new(), RunningStats::new()];
    for b in 0..BOOTSTRAP_RESAMPLES {
        let mut rng = replicate_rng(derive_seed(seed, 0xb007), b);
        let idx: Vec<usize> = (0..r).map(|_| rand::Rng::random_range(&mut rng, 0..r)).collect();
        let m = metrics(samples, &idx, &reference)?;
        for (s, x) in boot.iter_mut().zip(m) {
            s.push(x);
        }
    }
    let sd = |s: &RunningStats| libm::sqrt(s.variance());
    let k0 = spec.k0 as f64;
    Ok(MixedRow {
        n,
        t,
        patterns,
        g_mean: Estimate::from(&g),
        g_var: Estimate::new(g.variance(), g2.se() * r as f64 / (r as f64 - 1.0)),
        g0_scaling: g0_mean / (libm::pow(n, k0) * libm::pow(libm::pow(t, spec.dim() as f64), k0 - 1.0)),
        tv: Estimate::new(point[0], sd(&boot[0])),
        w1: Estimate::new(point[1], sd(&boot[1])),
        h1: Estimate::new(point[2], sd(&boot[2])),
    })
}

/// Log-log fits of the distances, `|cov|` and `|mean − limit|` against `n`.
/// Series with a non-positive value are skipped.
pub fn rate_fits(rows: &[MixedRow], spec: &RegimeSpec) -> Vec<RateFit> {
    let d = spec.patterns.len();
    if rows.len() < 2 {
        return Vec::new();
    }
    let xs: Vec<f64> = rows.iter().map(|r| libm::log(r.n)).collect();
    let mut series: Vec<(String, Vec<f64>)> = vec![
        ("tv".into(), rows.iter().map(|r| r.tv.value).collect()),
        ("w1".into(), rows.iter().map(|r| r.w1.value).collect()),
        ("h1".into(), rows.iter().map(|r| r.h1.value).collect()),
    ];
    for j in 0..d {
        let name = spec.patterns[j].canonical();
        series.push((format!("cov0_{name}"), rows.iter().map(|r| r.patterns[j].cov0.value.abs()).collect()));
        series.push((
            format!("mean_gap_{name}"),
            rows.iter().map(|r| (r.patterns[j].lambda_exact - r.patterns[j].limit.value).abs()).collect(),
        ));
    }
    series
        .into_iter()
        .filter(|(_, ys)| ys.iter().all(|y| *y > 0.0 && y.is_finite()))
        .map(|(name, ys)| {
            let ly: Vec<f64> = ys.iter().map(|y| libm::log(*y)).collect();
            let (slope, intercept, slope_se) = linear_fit(&xs, &ly);
            RateFit { series: name, slope, intercept, slope_se }
        })
        .collect()
}

fn check_grid(n_grid: &[f64], replicates: u64) -> Result<()> {
    if n_grid.is_empty() || n_grid.iter().any(|n| !(*n > 0.0) || !n.is_finite()) {
        return Err(invalid("n_grid", "need positive, finite intensities"));
    }
    if replicates < 10 {
        return Err(invalid("replicates", "need at least 10 replicates for standard errors"));
    }
    Ok(())
}

/// The Poissonized mixed-regime experiment over `n_grid`.
pub fn run_mixed_experiment<E: Executor>(
    exec: &E,
    spec: &RegimeSpec,
    n_grid: &[f64],
    replicates: u64,
    seed: u64,
) -> Result<MixedExperiment> {
    check_grid(n_grid, replicates)?;
    let limits = spec.limits(seed)?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let t = spec.radius(n);
        let mu = spec.measure_at(n)?;
        let m0 = pattern_moments(&spec.pattern0, t, &mu)?;
        if !(m0.variance > 0.0) {
            return Err(invalid("regime", format!("Γ₀ count has zero variance at n = {n}")));
        }
        let lambda_exact: Vec<f64> =
            spec.patterns.iter().map(|p| pattern_moments(p, t, &mu).map(|m| m.mean)).collect::<Result<_>>()?;
        let sd0 = libm::sqrt(m0.variance);
        let s = derive_seed(seed, gi as u64);
        let samples = collect(exec, replicates, |r| {
            let mut rng = replicate_rng(s, r);
            let config = sample_configuration(&mu, &mut rng)?;
            count_sample(spec, &config, t, m0.mean, sd0)
        })?;
        if gi == 0 {
            for (j, p) in spec.patterns.iter().enumerate() {
                if samples.iter().all(|x| x.0[j] == 0) {
                    return Err(invalid(
                        "patterns",
                        format!("pattern {} never occurred at n = {n}; the regime looks infeasible", p.canonical()),
                    ));
                }
            }
        }
        rows.push(summarize(spec, n, t, &samples, &lambda_exact, &limits, m0.mean, s)?);
    }
    let fits = rate_fits(&rows, spec);
    Ok(MixedExperiment { rows, fits })
}

/// `p(y) = P(‖Y − y‖ < t)` for one `Y` drawn from the sampling density, with
/// `p̄ = E p(Y)` and `E p(Y)²`.
struct EdgeProbabilities {
    f: PatternFunctional,
    pbar: f64,
    p2: f64,
}

impl EdgeProbabilities {
    fn new(spec: &RegimeSpec, t: f64) -> Result<Self> {
        let mu1 = spec.measure.with_intensity(1.0)?;
        let f = PatternFunctional::new(GraphPattern::edge(), t, mu1.clone())?;
        let grid = if mu1.dim() == 1 {
            ZGrid::Adaptive { order: 4, subdivide: 1 }
        } else {
            ZGrid::Tensor { cells: 64, order: 3 }
        };
        let fs: [Arc<dyn Functional>; 1] = [Arc::new(f.clone())];
        let pbar = grid.integrate(&mu1, &fs, |y| 2.0 * f.isolated_term(y));
        let p2 = grid.integrate(&mu1, &fs, |y| {
            let p = 2.0 * f.isolated_term(y);
            p * p
        });
        Ok(Self { f, pbar, p2 })
    }

    fn p(&self, y: &[f64]) -> f64 {
        2.0 * self.f.isolated_term(y)
    }

    /// `E[U₁²]` and `E[U₂²]` of the Hoeffding decomposition at sample size `n`.
    fn hoeffding_variances(&self, n: f64) -> (f64, f64) {
        let v1 = (n - 1.0) * (n - 1.0) * (self.p2 - self.pbar * self.pbar);
        let v2 = self.pbar - 2.0 * self.p2 + self.pbar * self.pbar;
        (v1, v2)
    }

    fn variance(&self, n: f64) -> f64 {
        let (v1, v2) = self.hoeffding_variances(n);
        n * v1 + n * (n - 1.0) / 2.0 * v2
    }
}

/// The mixed-regime statistics on exactly `n` i.i.d. points. The `Γ₀` count
/// is normalised with its exact fixed-`n` mean and variance (`k₀ = 2`).
pub fn depoissonized_counts<E: Executor>(
    exec: &E,
    spec: &RegimeSpec,
    n: u64,
    replicates: u64,
    seed: u64,
) -> Result<MixedRow> {
    if spec.k0 != 2 {
        return Err(Error::Unsupported("fixed-n normalisation is implemented for k₀ = 2".into()));
    }
    check_grid(&[n as f64], replicates)?;
    let nf = n as f64;
    let t = spec.radius(nf);
    let ep = EdgeProbabilities::new(spec, t)?;
    let mean0 = binomial(n as usize, 2) * ep.pbar;
    let var0 = ep.variance(nf);
    let sd0 = if var0 > 0.0 { libm::sqrt(var0) } else { 1.0 };
    let limits = spec.limits(seed)?;
    let mu1 = spec.measure.with_intensity(1.0)?;
    // Exact fixed-n means: n!/(n−k)! ∫h dμ₁^k = (n)_k/n^k · Poisson mean at n.
    let mu = spec.measure_at(nf)?;
    let falling = (0..spec.k).fold(1.0, |a, i| a * (nf - i as f64).max(0.0) / nf);
    let lambda_exact: Vec<f64> =
        spec.patterns.iter().map(|p| pattern_moments(p, t, &mu).map(|m| m.mean * falling)).collect::<Result<_>>()?;
    let s = derive_seed(seed, 0xde90);
    let samples = collect(exec, replicates, |r| {
        let mut rng = replicate_rng(s, r);
        let config = sample_iid(&mu1, n, &mut rng)?;
        count_sample(spec, &config, t, mean0, sd0)
    })?;
    summarize(spec, nf, t, &samples, &lambda_exact, &limits, mean0, s)
}

/// Coupled Poissonized and de-poissonized edge-count statistics at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepoissonGap {
    pub n: u64,
    pub t: f64,
    /// `E[(Uₙ − U'ₙ)²]/σₙ²`, estimated.
    pub gap: Estimate,
    /// The same quantity from the Hoeffding variances and `b_{n,l}`.
    pub theory: f64,
}

/// `Uₙ` is the centred edge count of `Y₁..Y_n`; `U'ₙ` replaces `[n]` by
/// `[N]`, `N ~ Po(n)`, inside each Hoeffding component, on the same i.i.d.
/// sequence.
pub fn depoisson_gap<E: Executor>(
    exec: &E,
    spec: &RegimeSpec,
    n: u64,
    replicates: u64,
    seed: u64,
) -> Result<DepoissonGap> {
    check_grid(&[n as f64], replicates)?;
    let nf = n as f64;
    let t = spec.radius(nf);
    let ep = EdgeProbabilities::new(spec, t)?;
    let sigma2 = ep.variance(nf);
    if !(sigma2 > 0.0) {
        return Err(invalid("regime", "edge count has zero variance"));
    }
    let mu1 = spec.measure.with_intensity(1.0)?;
    let s = derive_seed(seed, 0x9a9);
    let edge = GraphPattern::edge();
    let gaps: Vec<Result<f64>> = collect_replicates(exec, replicates, |r| {
        let mut rng = replicate_rng(s, r);
        let big_n = sample_poisson(nf, &mut rng);
        let m = big_n.max(n);
        let seq = sample_iid(&mu1, m, &mut rng)?;
        let ps: Vec<f64> = seq.points().map(|y| ep.p(y)).collect();
        // Σ_{i<j≤M} U₂ = E_M − (M−1)Σ_{i≤M} p(Yᵢ) + C(M,2)p̄.
        let parts = |cnt: u64| -> Result<(f64, f64)> {
            let sub = seq.truncated(cnt as usize);
            let e = DiskGraph::new(&sub, t)?.count_patterns(&[&edge])[0] as f64;
            let sp: f64 = ps[..cnt as usize].iter().sum();
            let c = cnt as f64;
            let u1 = (nf - 1.0) * (sp - c * ep.pbar);
            let u2 = e - (c - 1.0).max(0.0) * sp + c * (c - 1.0) / 2.0 * ep.pbar;
            Ok((u1, u2))
        };
        let (a1, a2) = parts(n)?;
        let (b1, b2) = parts(big_n)?;
        let diff = (a1 + a2) - (b1 + b2);
        Ok(diff * diff / sigma2)
    });
    let mut st = RunningStats::new();
    for g in gaps {
        st.push(g?);
    }
    let (v1, v2) = ep.hoeffding_variances(nf);
    let mut theory = 0.0;
    for (l, v) in [(1u64, v1), (2, v2)] {
        let c = binomial(n as usize, l as usize);
        let lf = l as f64;
        let pow_term = libm::pow(nf, lf) / (if l == 1 { 1.0 } else { 2.0 }) / c;
        theory += c * v / sigma2 * (pow_term + 1.0 - 2.0 * depoisson_coefficient(n, l)?);
    }
    Ok(DepoissonGap { n, t, gap: Estimate::from(&st), theory })
}

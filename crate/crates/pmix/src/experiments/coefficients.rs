use std::sync::Arc;

use pmix_core::bounds::{
    estimate_coefficients, CoefficientOptions, CoefficientReport, MixedTarget, VectorFunctional, ZGrid,
};
use pmix_core::chaos::{evaluate, Affine, CellChaos, CellGrid, CellUStatistic, Functional, WindowCount};
use pmix_core::distances::{h1_surrogate_to_product, EmpiricalLaw};
use pmix_core::exec::{collect_replicates, Executor};
use pmix_core::geomgraph::{PatternFunctional, H1_DICTIONARY};
use pmix_core::kernel::SymKernel;
use pmix_core::rng::{derive_seed, replicate_rng};
use pmix_core::space::{control_mass, sample_configuration, ControlMeasure, Density, Window};
use pmix_core::stats::{Estimate, RunningStats};
use rand::Rng;
use serde_json::json;

use super::core_err;
use crate::config::{CoefficientsParams, ConfigError, ExperimentConfig, FunctionalSpec, MeasureSpec, ZGridSpec};
use crate::output::{flag, int, num, opt, RunOutput, Table};

const BOOTSTRAP_RESAMPLES: u64 = 20;

type Linear = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A functional and, when `z ↦ D_zF` is deterministic, that map.
struct Built {
    f: Arc<dyn Functional>,
    linear: Option<Linear>,
}

pub struct Plan {
    measure: ControlMeasure,
    v: VectorFunctional,
    target: MixedTarget,
    opts: CoefficientOptions,
    distance_replicates: u64,
    sources: (&'static str, &'static str),
}

fn indicator(w: Window, scale: f64) -> Linear {
    Box::new(move |z| if w.contains(z) { scale } else { 0.0 })
}

fn build(
    spec: &FunctionalSpec,
    field: &str,
    mu: &ControlMeasure,
    grid: Option<&CellGrid>,
) -> Result<Built, ConfigError> {
    let err = core_err(field);
    Ok(match spec {
        FunctionalSpec::Window { lower, upper } => {
            let w = mu.window(lower.clone(), upper.clone()).map_err(&err)?;
            Built { f: Arc::new(WindowCount::new(mu, w.clone()).map_err(&err)?), linear: Some(indicator(w, 1.0)) }
        }
        FunctionalSpec::CenteredWindow { lower, upper } => {
            let w = mu.window(lower.clone(), upper.clone()).map_err(&err)?;
            let mass = control_mass(mu, &w).map_err(&err)?;
            if !(mass > 0.0) {
                return Err(ConfigError::invalid(field, "window has zero control mass"));
            }
            let s = 1.0 / mass.sqrt();
            let inner = Arc::new(WindowCount::with_mass(w.clone(), mass));
            Built { f: Arc::new(Affine::new(inner, mass, s)), linear: Some(indicator(w, s)) }
        }
        FunctionalSpec::FirstChaos { values } => {
            let g = grid.expect("validated: cell space");
            let h = SymKernel::from_values(g.space().clone(), 1, values.clone()).map_err(&err)?;
            let (g2, vals) = (g.clone(), values.clone());
            Built {
                f: Arc::new(CellChaos::first_chaos(g.clone(), h).map_err(&err)?),
                linear: Some(Box::new(move |z| vals[g2.cell_of(z)])),
            }
        }
        FunctionalSpec::UStatistic { order, values, normalize } => {
            let g = grid.expect("validated: cell space");
            let h = SymKernel::from_values(g.space().clone(), *order, values.clone()).map_err(&err)?;
            let u = CellUStatistic::new(g.clone(), h).map_err(&err)?;
            let f: Arc<dyn Functional> = if *normalize {
                let var = u.decomposition().map_err(&err)?.variance();
                if !(var > 0.0) {
                    return Err(ConfigError::invalid(field, "U-statistic has zero variance"));
                }
                let mean = u.expectation();
                Arc::new(Affine::new(Arc::new(u), mean, 1.0 / var.sqrt()))
            } else {
                Arc::new(u)
            };
            Built { f, linear: None }
        }
        FunctionalSpec::Pattern { pattern, radius } | FunctionalSpec::NormalizedPattern { pattern, radius } => {
            let p = crate::config::parse_pattern(pattern).map_err(|m| ConfigError::invalid(field, m))?;
            let pf = PatternFunctional::new(p, *radius, mu.clone()).map_err(&err)?;
            let f: Arc<dyn Functional> = if matches!(spec, FunctionalSpec::NormalizedPattern { .. }) {
                let m = pf.moments();
                if !(m.variance > 0.0) {
                    return Err(ConfigError::invalid(field, "pattern count has zero variance"));
                }
                Arc::new(Affine::new(Arc::new(pf), m.mean, 1.0 / m.variance.sqrt()))
            } else {
                Arc::new(pf)
            };
            Built { f, linear: None }
        }
    })
}

pub fn plan(cfg: &ExperimentConfig, p: &CoefficientsParams) -> Result<Plan, ConfigError> {
    let (mu, grid) = match &p.measure {
        MeasureSpec::Box { lower, upper, intensity, density } => {
            let d = match density {
                None => Density::Uniform,
                Some(d) => Density::PiecewiseConstant { cells: d.cells.clone(), values: d.values.clone() },
            };
            (
                ControlMeasure::new(lower.clone(), upper.clone(), d, *intensity).map_err(core_err("params.measure"))?,
                None,
            )
        }
        MeasureSpec::Cells { weights } => {
            let g = CellGrid::from_weights(weights.clone()).map_err(core_err("params.measure.weights"))?;
            (g.measure().clone(), Some(g))
        }
    };
    let z_grid = match (&p.z_grid, &grid) {
        (Some(ZGridSpec::Adaptive { order, subdivide }), _) => ZGrid::Adaptive { order: *order, subdivide: *subdivide },
        (Some(ZGridSpec::Tensor { cells, order }), _) => ZGrid::Tensor { cells: *cells, order: *order },
        (Some(ZGridSpec::Cells { cells }), _) => {
            ZGrid::Cells(CellGrid::regular(mu.clone(), cells.clone()).map_err(core_err("params.z_grid"))?)
        }
        (None, Some(g)) => ZGrid::Cells(g.clone()),
        (None, None) if mu.dim() == 1 => ZGrid::adaptive(),
        (None, None) => ZGrid::Tensor { cells: 32, order: 3 },
    };
    let poisson = p
        .poisson
        .iter()
        .enumerate()
        .map(|(i, s)| build(s, &format!("params.poisson[{i}]"), &mu, grid.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let gaussian = p
        .gaussian
        .iter()
        .enumerate()
        .map(|(i, s)| build(s, &format!("params.gaussian[{i}]"), &mu, grid.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let all: Vec<Arc<dyn Functional>> = poisson.iter().chain(&gaussian).map(|b| b.f.clone()).collect();
    // Defaults are integrated with the coefficient rule so exact cases cancel.
    let integrate = |f: &dyn Fn(&[f64]) -> f64| z_grid.integrate(&mu, &all, f);

    let (lambdas, lambda_source) = match &p.target.lambdas {
        Some(l) => (l.clone(), "config"),
        None => {
            let l = poisson
                .iter()
                .enumerate()
                .map(|(i, b)| match (&b.linear, b.f.mean()) {
                    (Some(d), _) => Ok(integrate(d)),
                    (None, Some(m)) => Ok(m),
                    (None, None) => Err(ConfigError::invalid(
                        "params.target.lambdas".to_string(),
                        format!("required: no closed-form mean for params.poisson[{i}]"),
                    )),
                })
                .collect::<Result<Vec<_>, _>>()?;
            (l, "derived")
        }
    };
    let m = gaussian.len();
    let (covariance, cov_source) = match &p.target.covariance {
        Some(c) => (c.clone(), "config"),
        None => {
            let mut c = vec![0.0; m * m];
            for j in 0..m {
                for k in 0..m {
                    c[j * m + k] = match (&gaussian[j].linear, &gaussian[k].linear) {
                        (Some(a), Some(b)) => integrate(&|z| a(z) * b(z)),
                        _ => (j == k) as u8 as f64,
                    };
                }
            }
            (c, "derived")
        }
    };
    let target = MixedTarget::new(lambdas, covariance, m).map_err(core_err("params.target"))?;
    // The surrogate compares against a standard normal factor.
    if p.distance_replicates > 0 && m == 1 && (target.covariance(0, 0) - 1.0).abs() > 1e-9 {
        return Err(ConfigError::invalid(
            "params.distance_replicates",
            format!("the distance surrogate needs C = 1, got {}", target.covariance(0, 0)),
        ));
    }
    if p.distance_replicates > 0 && target.lambdas().iter().any(|l| !(*l > 0.0)) {
        return Err(ConfigError::invalid("params.distance_replicates", "the distance surrogate needs positive λ"));
    }
    let v =
        VectorFunctional::new(poisson.into_iter().map(|b| b.f).collect(), gaussian.into_iter().map(|b| b.f).collect());
    let opts = CoefficientOptions { replicates: cfg.replicates, seed: cfg.seed, z_grid, refine: p.refine };
    Ok(Plan {
        measure: mu,
        v,
        target,
        opts,
        distance_replicates: p.distance_replicates,
        sources: (lambda_source, cov_source),
    })
}

/// `h1` surrogate of a sample of `V` against the target, with a bootstrap SE.
fn distance<E: Executor>(plan: &Plan, exec: &E) -> anyhow::Result<Estimate> {
    let (d, m) = (plan.v.d(), plan.v.m());
    let all = plan.v.all();
    let seed = derive_seed(plan.opts.seed, 0xd157);
    let samples: Vec<pmix_core::Result<(Vec<u64>, Vec<f64>)>> =
        collect_replicates(exec, plan.distance_replicates, |r| {
            let config = sample_configuration(&plan.measure, &mut replicate_rng(seed, r))?;
            let mut ints = Vec::with_capacity(d);
            for f in &all[..d] {
                let x = evaluate(f.as_ref(), &config)?;
                if !(x >= 0.0 && x.fract() == 0.0) {
                    return Err(pmix_core::Error::InvalidParameter {
                        name: "poisson",
                        reason: format!("component value {x} is not a nonnegative integer"),
                    });
                }
                ints.push(x as u64);
            }
            let reals = all[d..].iter().map(|f| evaluate(f.as_ref(), &config)).collect::<pmix_core::Result<_>>()?;
            Ok((ints, reals))
        });
    let samples = samples.into_iter().collect::<pmix_core::Result<Vec<_>>>()?;
    let law = |idx: &mut dyn Iterator<Item = usize>| -> anyhow::Result<f64> {
        let mut l = EmpiricalLaw::new(d, m);
        for i in idx {
            l.push(&samples[i].0, &samples[i].1)?;
        }
        Ok(h1_surrogate_to_product(&l, plan.target.lambdas(), H1_DICTIONARY)?)
    };
    let n = samples.len();
    let point = law(&mut (0..n))?;
    let mut boot = RunningStats::new();
    for b in 0..BOOTSTRAP_RESAMPLES {
        let mut rng = replicate_rng(derive_seed(seed, 0xb007), b);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        boot.push(law(&mut idx.into_iter())?);
    }
    Ok(Estimate::new(point, boot.variance().sqrt()))
}

pub const COEFFICIENT_COLUMNS: [&str; 30] = [
    "d",
    "m",
    "lambdas",
    "covariance",
    "alpha1",
    "se_alpha1",
    "alpha2",
    "se_alpha2",
    "alpha3",
    "se_alpha3",
    "beta",
    "se_beta",
    "gamma1",
    "se_gamma1",
    "gamma2",
    "se_gamma2",
    "total",
    "se_total",
    "constant",
    "bound",
    "se_bound",
    "replicates",
    "z_cells",
    "z_nodes",
    "quadrature_bias_flag",
    "refinement_shift",
    "centering_flag",
    "negative_flag",
    "h1",
    "se_h1",
];

/// The report as one flat JSON object.
pub fn report_json(r: &CoefficientReport) -> serde_json::Value {
    let names = ["alpha1", "alpha2", "alpha3", "beta", "gamma1", "gamma2"];
    let mut o = serde_json::Map::new();
    for (n, e) in names.iter().zip(r.coefficients()) {
        o.insert((*n).into(), json!(e.value));
        o.insert(format!("se_{n}"), json!(e.se));
    }
    o.insert("total".into(), json!(r.total.value));
    o.insert("se_total".into(), json!(r.total.se));
    o.insert("constant".into(), json!(r.constant));
    o.insert("bound".into(), json!(r.bound.map(|b| b.value)));
    o.insert("se_bound".into(), json!(r.bound.map(|b| b.se)));
    o.insert("replicates".into(), json!(r.replicates));
    o.insert("seed".into(), json!(r.seed));
    o.insert("z_cells".into(), json!(r.z_cells));
    o.insert("z_nodes".into(), json!(r.z_nodes));
    o.insert("quadrature_bias_flag".into(), json!(r.quadrature_bias_flag));
    o.insert("refinement_shift".into(), json!(r.refinement_shift));
    o.insert("centering_flag".into(), json!(r.centering_flag));
    o.insert("negative_flag".into(), json!(r.negative_flag));
    o.insert("gaussian_means".into(), json!(r.gaussian_means.iter().map(|e| e.value).collect::<Vec<_>>()));
    serde_json::Value::Object(o)
}

impl Plan {
    pub fn report<E: Executor>(&self, exec: &E) -> anyhow::Result<CoefficientReport> {
        Ok(estimate_coefficients(exec, &self.measure, &self.v, &self.target, &self.opts)?)
    }

    pub fn execute<E: Executor>(&self, exec: &E) -> anyhow::Result<RunOutput> {
        let r = self.report(exec)?;
        let h1 = if self.distance_replicates > 0 { Some(distance(self, exec)?) } else { None };
        let (d, m) = (self.v.d(), self.v.m());
        let join = |xs: &[f64]| xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";");
        let cov: Vec<f64> = (0..m * m).map(|i| self.target.covariance(i / m.max(1), i % m.max(1))).collect();
        let mut row = vec![int(d), int(m), join(self.target.lambdas()), join(&cov)];
        for e in r.coefficients() {
            row.push(num(e.value));
            row.push(num(e.se));
        }
        row.extend([
            num(r.total.value),
            num(r.total.se),
            opt(r.constant),
            opt(r.bound.map(|b| b.value)),
            opt(r.bound.map(|b| b.se)),
            int(r.replicates),
            int(r.z_cells),
            int(r.z_nodes),
            flag(r.quadrature_bias_flag),
            opt(r.refinement_shift),
            flag(r.centering_flag),
            flag(r.negative_flag),
            opt(h1.map(|e| e.value)),
            opt(h1.map(|e| e.se)),
        ]);
        let mut t = Table::new("coefficients", &COEFFICIENT_COLUMNS);
        t.push(row);
        let mut summary = report_json(&r);
        if let serde_json::Value::Object(o) = &mut summary {
            o.insert("lambdas".into(), json!(self.target.lambdas()));
            o.insert("covariance".into(), json!(cov));
            o.insert("lambda_source".into(), json!(self.sources.0));
            o.insert("covariance_source".into(), json!(self.sources.1));
            o.insert("h1".into(), json!(h1.map(|e| e.value)));
            o.insert("se_h1".into(), json!(h1.map(|e| e.se)));
        }
        Ok(RunOutput { tables: vec![t], summary })
    }
}

use pmix_core::exec::Executor;
use pmix_core::geomgraph::{
    depoisson_gap, depoissonized_counts, rate_fits, run_mixed_experiment, MixedRow, RateFit, RegimeSpec,
};
use pmix_core::rng::derive_seed;
use pmix_core::space::{ControlMeasure, Density};
use serde_json::json;

use super::core_err;
use crate::config::{parse_pattern, ConfigError, ExperimentConfig, GraphMixedParams};
use crate::output::{int, num, RunOutput, Table};

pub struct Plan {
    seed: u64,
    replicates: u64,
    p: GraphMixedParams,
    spec: RegimeSpec,
}

pub fn plan(cfg: &ExperimentConfig, p: &GraphMixedParams) -> Result<Plan, ConfigError> {
    let density = match &p.density {
        None => Density::Uniform,
        Some(d) => Density::PiecewiseConstant { cells: d.cells.clone(), values: d.values.clone() },
    };
    let mu = ControlMeasure::new(p.lower.clone(), p.upper.clone(), density, 1.0).map_err(core_err("params"))?;
    let pattern = |s: &str, f: &str| parse_pattern(s).map_err(|m| ConfigError::invalid(f, m));
    let p0 = pattern(&p.pattern0, "params.pattern0")?;
    let ps = p
        .patterns
        .iter()
        .enumerate()
        .map(|(i, s)| pattern(s, &format!("params.patterns[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = RegimeSpec::new(mu, p.radius_scale, p0, ps).map_err(core_err("params.patterns"))?;
    Ok(Plan { seed: cfg.seed, replicates: cfg.replicates, p: p.clone(), spec })
}

pub const MIXED_COLUMNS: [&str; 23] = [
    "sampling",
    "n",
    "t",
    "pattern",
    "mean",
    "var",
    "lambda_hat",
    "lambda_exact",
    "lambda_limit",
    "tv",
    "w1",
    "h1",
    "cov_0j",
    "g_mean",
    "g_var",
    "g0_scaling",
    "se_mean",
    "se_lambda_limit",
    "se_tv",
    "se_w1",
    "se_h1",
    "se_cov_0j",
    "se_g_var",
];

fn push_rows(t: &mut Table, sampling: &str, row: &MixedRow) {
    for p in &row.patterns {
        t.push(vec![
            sampling.into(),
            num(row.n),
            num(row.t),
            p.canonical.clone(),
            num(p.mean.value),
            num(p.variance),
            num(p.mean.value),
            num(p.lambda_exact),
            num(p.limit.value),
            num(row.tv.value),
            num(row.w1.value),
            num(row.h1.value),
            num(p.cov0.value),
            num(row.g_mean.value),
            num(row.g_var.value),
            num(row.g0_scaling),
            num(p.mean.se),
            num(p.limit.se),
            num(row.tv.se),
            num(row.w1.se),
            num(row.h1.se),
            num(p.cov0.se),
            num(row.g_var.se),
        ]);
    }
}

fn push_fits(t: &mut Table, sampling: &str, fits: &[RateFit]) {
    for f in fits {
        t.push(vec![sampling.into(), f.series.clone(), num(f.slope), num(f.intercept), num(f.slope_se)]);
    }
}

impl Plan {
    pub fn execute<E: Executor>(&self, exec: &E) -> anyhow::Result<RunOutput> {
        let mut rows = Table::new("graph_mixed", &MIXED_COLUMNS);
        let mut fits = Table::new("rate_fits", &["sampling", "series", "slope", "intercept", "slope_se"]);
        let e = run_mixed_experiment(exec, &self.spec, &self.p.n_grid, self.replicates, self.seed)?;
        for r in &e.rows {
            push_rows(&mut rows, "poisson", r);
        }
        push_fits(&mut fits, "poisson", &e.fits);
        let mut tables = Vec::new();
        if self.p.depoissonized {
            let mut fixed = Vec::new();
            for &n in &self.p.n_grid {
                let n = n.round() as u64;
                let r = depoissonized_counts(exec, &self.spec, n, self.replicates, derive_seed(self.seed, 0xf1c0 + n))?;
                push_rows(&mut rows, "fixed", &r);
                fixed.push(r);
            }
            push_fits(&mut fits, "fixed", &rate_fits(&fixed, &self.spec));
        }
        tables.push(rows);
        tables.push(fits);
        let mut gaps = Vec::new();
        if !self.p.gap_grid.is_empty() {
            let mut t = Table::new("depoisson_gap", &["n", "t", "gap", "se_gap", "theory"]);
            for &n in &self.p.gap_grid {
                let g = depoisson_gap(exec, &self.spec, n, self.replicates, derive_seed(self.seed, 0x6a90 + n))?;
                t.push(vec![int(n), num(g.t), num(g.gap.value), num(g.gap.se), num(g.theory)]);
                gaps.push(g.gap.value);
            }
            tables.push(t);
        }
        let fit_json: serde_json::Map<String, serde_json::Value> = e
            .fits
            .iter()
            .map(|f| (f.series.clone(), json!({"slope": f.slope, "intercept": f.intercept, "slope_se": f.slope_se})))
            .collect();
        let summary = json!({
            "k0": self.spec.k0(),
            "k": self.spec.k(),
            "patterns": self.spec.patterns().iter().map(|p| p.canonical()).collect::<Vec<_>>(),
            "fits": fit_json,
            "depoisson_gap": gaps,
        });
        Ok(RunOutput { tables, summary })
    }
}

use pmix_core::bounds::{depoisson_coefficient, rho_n, ustat_gaussian_bound, ustat_poisson_bound};
use pmix_core::chaos::{CellGrid, CellUStatistic};
use pmix_core::exec::Executor;
use pmix_core::kernel::{SymKernel, Tensor};
use pmix_core::math::{factorial, linear_fit};
use pmix_core::rng::derive_seed;
use serde_json::json;

use super::chaos::random_kernel;
use super::core_err;
use crate::config::{ConfigError, ExperimentConfig, UstatBoundsParams};
use crate::output::{int, num, RunOutput, Table};

pub struct Plan {
    seed: u64,
    p: UstatBoundsParams,
}

pub fn plan(cfg: &ExperimentConfig, p: &UstatBoundsParams) -> Result<Plan, ConfigError> {
    CellGrid::from_weights(p.weights.clone()).map_err(core_err("params.weights"))?;
    Ok(Plan { seed: cfg.seed, p: p.clone() })
}

impl Plan {
    fn grid(&self, n: f64) -> anyhow::Result<CellGrid> {
        Ok(CellGrid::from_weights(self.p.weights.iter().map(|w| w * n).collect())?)
    }

    pub fn execute<E: Executor>(&self, _exec: &E) -> anyhow::Result<RunOutput> {
        let k = self.p.order;
        // The kernel is fixed while the intensity grows: the Gaussian regime.
        let base = self.grid(1.0)?;
        let h = random_kernel(base.space(), k, 1.0, derive_seed(self.seed, 0x05));
        let mut gauss = Table::new("ustat_gaussian", &["n", "order", "sigma", "bound"]);
        let mut pois = Table::new("ustat_poisson", &["n", "order", "lambda_n", "lambda", "rho", "bound"]);
        let mut logs = (Vec::new(), Vec::new());
        let mut poisson_rows = Vec::new();
        for &n in &self.p.n_grid {
            let grid = self.grid(n)?;
            let space = grid.space().clone();
            let hn = SymKernel::from_values(space.clone(), k, h.values().to_vec())?;
            let u = CellUStatistic::new(grid.clone(), hn)?;
            let sigma = u.decomposition()?.variance().sqrt();
            let b = ustat_gaussian_bound(&u, sigma)?;
            logs.0.push(n.ln());
            logs.1.push(b.ln());
            gauss.push(vec![num(n), int(k), num(sigma), num(b)]);

            let band = self.p.band;
            let o = Tensor::from_fn(space.clone(), k, |idx| {
                let (lo, hi) = idx.iter().fold((usize::MAX, 0), |(a, b), &i| (a.min(i), b.max(i)));
                if hi - lo <= band {
                    1.0
                } else {
                    0.0
                }
            })?;
            let rho = rho_n(&o)?;
            let ind = SymKernel::new(o.scaled(1.0 / factorial(k)))?;
            let lambda_n = CellUStatistic::new(grid, ind)?.expectation();
            poisson_rows.push((n, lambda_n, rho));
        }
        let lambda = self.p.lambda.unwrap_or_else(|| poisson_rows.last().map_or(1.0, |r| r.1));
        for (n, lambda_n, rho) in poisson_rows {
            let b = ustat_poisson_bound(lambda_n, lambda, rho, self.p.d_const)?;
            pois.push(vec![num(n), int(k), num(lambda_n), num(lambda), num(rho), num(b)]);
        }
        let mut dep = Table::new("depoisson_coefficients", &["n", "l", "b"]);
        for &n in &self.p.n_grid {
            let n = n as u64;
            for l in 0..=self.p.max_l.min(n) {
                dep.push(vec![int(n), int(l), num(depoisson_coefficient(n, l)?)]);
            }
        }
        let fit = (logs.0.len() >= 2).then(|| linear_fit(&logs.0, &logs.1));
        let summary = json!({
            "gaussian_bound_slope": fit.map(|f| f.0),
            "gaussian_bound_slope_se": fit.map(|f| f.2),
        });
        Ok(RunOutput { tables: vec![gauss, pois, dep], summary })
    }
}

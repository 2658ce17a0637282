use std::sync::Arc;

use pmix_core::chaos::{product_formula_rhs, sample_counts, verify_isometry, PreparedKernel};
use pmix_core::exec::Executor;
use pmix_core::kernel::{symmetrize, DiscreteMeasure, SymKernel, Tensor};
use pmix_core::rng::{derive_seed, replicate_rng};
use rand::Rng;
use serde_json::json;

use super::core_err;
use crate::config::{ChaosVerifyParams, ConfigError, ExperimentConfig};
use crate::output::{flag, int, num, RunOutput, Table};

pub struct Plan {
    seed: u64,
    replicates: u64,
    p: ChaosVerifyParams,
    space: Arc<DiscreteMeasure>,
}

pub fn plan(cfg: &ExperimentConfig, p: &ChaosVerifyParams) -> Result<Plan, ConfigError> {
    let space = Arc::new(DiscreteMeasure::new(p.masses.clone()).map_err(core_err("params.masses"))?);
    Ok(Plan { seed: cfg.seed, replicates: cfg.replicates, p: p.clone(), space })
}

/// Symmetrized kernel with i.i.d. uniform entries in `[−bound, bound]`.
pub(crate) fn random_kernel(space: &Arc<DiscreteMeasure>, order: usize, bound: f64, seed: u64) -> SymKernel {
    let mut rng = replicate_rng(seed, 0);
    let t = Tensor::from_fn(space.clone(), order, |_| rng.random_range(-bound..=bound)).expect("order within limits");
    symmetrize(&t)
}

impl Plan {
    fn kernels(&self, tag: u64, pair: usize, trial: usize, [p, q]: [usize; 2]) -> (SymKernel, SymKernel) {
        let s = derive_seed(derive_seed(self.seed, tag), (pair * 1000 + trial) as u64);
        let b = self.p.entry_bound;
        (random_kernel(&self.space, p, b, derive_seed(s, 0)), random_kernel(&self.space, q, b, derive_seed(s, 1)))
    }

    pub fn execute<E: Executor>(&self, exec: &E) -> anyhow::Result<RunOutput> {
        let mut pf = Table::new(
            "product_formula",
            &["p", "q", "trial", "cells", "configurations", "max_abs_residual", "max_abs_product"],
        );
        let mut worst: f64 = 0.0;
        for (pair, &orders) in self.p.product_orders.iter().enumerate() {
            for trial in 0..self.p.kernel_trials {
                let (f, g) = self.kernels(1, pair, trial, orders);
                let (pf_, pg) = (PreparedKernel::new(f.clone()), PreparedKernel::new(g.clone()));
                let s = derive_seed(self.seed, 0x9f00 + (pair * 1000 + trial) as u64);
                let (res, lhs) = exec.fold_replicates(
                    self.p.configurations,
                    || Ok((0.0f64, 0.0f64)),
                    |acc: &mut pmix_core::Result<(f64, f64)>, r| {
                        let Ok((res, lhs)) = acc else { return };
                        let counts = sample_counts(&self.space, &mut replicate_rng(s, r));
                        let prod = pf_.eval(&counts) * pg.eval(&counts);
                        match product_formula_rhs(&f, &g, &counts) {
                            Ok(rhs) => {
                                *res = res.max((prod - rhs).abs());
                                *lhs = lhs.max(prod.abs());
                            }
                            Err(e) => *acc = Err(e),
                        }
                    },
                    |a, b| match (a.as_mut(), b) {
                        (Ok(x), Ok(y)) => *x = (x.0.max(y.0), x.1.max(y.1)),
                        (Ok(_), Err(e)) => *a = Err(e),
                        (Err(_), _) => {}
                    },
                )?;
                worst = worst.max(res);
                pf.push(vec![
                    int(orders[0]),
                    int(orders[1]),
                    int(trial),
                    int(self.space.cells()),
                    int(self.p.configurations),
                    num(res),
                    num(lhs),
                ]);
            }
        }
        let mut iso = Table::new(
            "isometry",
            &[
                "q1",
                "q2",
                "trial",
                "replicates",
                "covariance",
                "se_covariance",
                "target",
                "z",
                "mean_f",
                "se_mean_f",
                "mean_g",
                "se_mean_g",
                "within_4se",
            ],
        );
        let mut passed = 0;
        for (pair, &orders) in self.p.isometry_orders.iter().enumerate() {
            for trial in 0..self.p.kernel_trials {
                let (f, g) = self.kernels(2, pair, trial, orders);
                let s = derive_seed(self.seed, 0x1500 + (pair * 1000 + trial) as u64);
                let r = verify_isometry(exec, &f, &g, self.replicates, s)?;
                let z = if r.covariance.se > 0.0 { (r.covariance.value - r.target) / r.covariance.se } else { 0.0 };
                let ok = r.passes(4.0);
                passed += ok as usize;
                iso.push(vec![
                    int(orders[0]),
                    int(orders[1]),
                    int(trial),
                    int(self.replicates),
                    num(r.covariance.value),
                    num(r.covariance.se),
                    num(r.target),
                    num(z),
                    num(r.mean_f.value),
                    num(r.mean_f.se),
                    num(r.mean_g.value),
                    num(r.mean_g.se),
                    flag(ok),
                ]);
            }
        }
        let summary = json!({
            "max_product_residual": worst,
            "isometry_checks": iso.rows.len(),
            "isometry_within_4se": passed,
        });
        Ok(RunOutput { tables: vec![pf, iso], summary })
    }
}

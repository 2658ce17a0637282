use pmix_core::exec::Executor;
use pmix_core::rng::{derive_seed, mix64};
use pmix_core::stein::{portmanteau_constant, stein_factors, ChenSteinSolution};
use serde_json::json;

use crate::config::{ConfigError, ExperimentConfig, SteinVerifyParams};
use crate::output::{int, num, opt, RunOutput, Table};

pub struct Plan {
    seed: u64,
    trials: u64,
    p: SteinVerifyParams,
}

pub fn plan(cfg: &ExperimentConfig, p: &SteinVerifyParams) -> Result<Plan, ConfigError> {
    for (i, c) in p.constants.iter().enumerate() {
        portmanteau_constant(c.lambdas.len(), c.m, &c.lambdas, c.c)
            .map_err(|e| ConfigError::invalid(format!("params.constants[{i}]"), e.to_string()))?;
    }
    Ok(Plan { seed: cfg.seed, trials: cfg.replicates, p: p.clone() })
}

/// A test function with values uniform on `[−1, 1]`, defined for every `x`.
pub(crate) fn random_psi(seed: u64) -> impl Fn(u64) -> f64 {
    move |x| (mix64(seed ^ mix64(x)) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

impl Plan {
    pub fn execute<E: Executor>(&self, _exec: &E) -> anyhow::Result<RunOutput> {
        let mut t = Table::new(
            "stein",
            &[
                "lambda",
                "trial",
                "x_max",
                "max_residual",
                "sup_f",
                "sup_f_from_1",
                "sup_df",
                "sup_d2f",
                "bound_f",
                "bound_df",
                "bound_d2f",
            ],
        );
        let mut worst: f64 = 0.0;
        let mut violations = [0usize; 3];
        for (li, &lambda) in self.p.lambdas.iter().enumerate() {
            let bounds = stein_factors(lambda)?;
            for trial in 0..self.trials {
                let psi = random_psi(derive_seed(derive_seed(self.seed, li as u64), trial));
                // One extra entry so the residual at x_max is available.
                let sol = ChenSteinSolution::new(lambda, psi, self.p.x_max + 1)?;
                let res = (0..=self.p.x_max).map(|x| sol.residual(x).abs()).fold(0.0, f64::max);
                let (a, b, c) = sol.observed_factors();
                let a1 = sol.values()[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                worst = worst.max(res);
                for (v, (o, bd)) in violations.iter_mut().zip([(a, bounds.0), (b, bounds.1), (c, bounds.2)]) {
                    *v += (o > bd) as usize;
                }
                t.push(vec![
                    num(lambda),
                    int(trial),
                    int(self.p.x_max),
                    num(res),
                    num(a),
                    num(a1),
                    num(b),
                    num(c),
                    num(bounds.0),
                    num(bounds.1),
                    num(bounds.2),
                ]);
            }
        }
        let mut k = Table::new("constants", &["d", "m", "lambdas", "c", "constant"]);
        for c in &self.p.constants {
            let v = portmanteau_constant(c.lambdas.len(), c.m, &c.lambdas, c.c)?;
            let l: Vec<String> = c.lambdas.iter().map(|x| num(*x)).collect();
            k.push(vec![int(c.lambdas.len()), int(c.m), l.join(";"), opt(c.c), num(v)]);
        }
        let summary = json!({
            "max_residual": worst,
            "violations_f": violations[0],
            "violations_df": violations[1],
            "violations_d2f": violations[2],
        });
        Ok(RunOutput { tables: vec![t, k], summary })
    }
}

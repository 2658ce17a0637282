use super::cells::{sample_counts, PreparedKernel};
use crate::error::{invalid, Result};
use crate::exec::Executor;
use crate::kernel::SymKernel;
use crate::math::factorial;
use crate::rng::replicate_rng;
use crate::stats::{Estimate, RunningStats};

/// Monte Carlo check of `E[I_q(f)] = 0` and `E[I_q(f) I_{q'}(g)] = q!⟨f,g⟩ 1{q = q'}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryReport {
    pub mean_f: Estimate,
    pub mean_g: Estimate,
    /// Sample mean of `I_q(f) I_{q'}(g)`.
    pub covariance: Estimate,
    pub target: f64,
    pub replicates: u64,
}

impl IsometryReport {
    /// All three comparisons within `k` standard errors.
    pub fn passes(&self, k: f64) -> bool {
        self.mean_f.within(0.0, k) && self.mean_g.within(0.0, k) && self.covariance.within(self.target, k)
    }
}

#[derive(Default)]
struct Acc {
    f: RunningStats,
    g: RunningStats,
    fg: RunningStats,
}

pub fn verify_isometry<E: Executor>(
    exec: &E,
    f: &SymKernel,
    g: &SymKernel,
    replicates: u64,
    seed: u64,
) -> Result<IsometryReport> {
    if f.space() != g.space() {
        return Err(invalid("g", "kernels live on different cell spaces"));
    }
    let target = if f.order() == g.order() { factorial(f.order()) * f.inner(g)? } else { 0.0 };
    let pf = PreparedKernel::new(f.clone());
    let pg = PreparedKernel::new(g.clone());
    let space = f.space();
    let acc = exec.fold_replicates(
        replicates,
        Acc::default,
        |a, r| {
            let counts = sample_counts(space, &mut replicate_rng(seed, r));
            let x = pf.eval(&counts);
            let y = pg.eval(&counts);
            a.f.push(x);
            a.g.push(y);
            a.fg.push(x * y);
        },
        |a, b| {
            a.f.merge(&b.f);
            a.g.merge(&b.g);
            a.fg.merge(&b.fg);
        },
    );
    Ok(IsometryReport {
        mean_f: (&acc.f).into(),
        mean_g: (&acc.g).into(),
        covariance: (&acc.fg).into(),
        target,
        replicates,
    })
}

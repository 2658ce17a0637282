//! Thread-pool executor with the same chunking as the sequential reference.

use pmix_core::exec::{Executor, CHUNK};
use rayon::prelude::*;

/// Name of the environment variable that fixes the worker count.
pub const THREADS_ENV: &str = "THREADS";

/// Folds fixed-size chunks of replicates in parallel and merges them in
/// chunk order, so results do not depend on the thread count.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `None` lets rayon pick the worker count.
    pub fn new(threads: Option<usize>) -> anyhow::Result<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            anyhow::ensure!(t > 0, "thread count must be positive");
            b = b.num_threads(t);
        }
        Ok(Self { pool: b.build()? })
    }

    /// Reads the worker count from `THREADS` when it is set.
    pub fn from_env() -> anyhow::Result<Self> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| anyhow::anyhow!("{THREADS_ENV}={s:?} is not a positive integer"))?,
            ),
            Err(_) => None,
        };
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn fold_replicates<A, I, F, M>(&self, count: u64, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, u64) + Sync,
        M: Fn(&mut A, A) + Sync,
    {
        let chunks = count.div_ceil(CHUNK);
        let parts: Vec<A> = self.pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut acc = init();
                    for r in c * CHUNK..((c + 1) * CHUNK).min(count) {
                        fold(&mut acc, r);
                    }
                    acc
                })
                .collect()
        });
        let mut it = parts.into_iter();
        let Some(mut total) = it.next() else { return init() };
        for a in it {
            merge(&mut total, a);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pmix_core::exec::Sequential;
    use pmix_core::stats::RunningStats;

    fn stats<E: Executor>(e: &E) -> (f64, f64) {
        let s = e.fold_replicates(
            1000,
            RunningStats::new,
            |s, r| s.push(((r * 7919) % 1013) as f64 / 3.0),
            |a, b| a.merge(&b),
        );
        (s.mean(), s.variance())
    }

    #[test]
    fn matches_sequential_bit_for_bit() {
        let reference = stats(&Sequential);
        for t in [1, 3, 8] {
            assert_eq!(stats(&RayonExecutor::new(Some(t)).unwrap()), reference);
        }
    }

    #[test]
    fn empty_run_returns_init() {
        let e = RayonExecutor::new(Some(2)).unwrap();
        assert_eq!(e.fold_replicates(0, || 5u32, |_, _| {}, |_, _| {}), 5);
    }
}

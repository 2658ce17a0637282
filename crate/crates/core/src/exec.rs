//! Replicate executors.
//!
//! Replicates are processed in fixed-size chunks. Each chunk folds its
//! replicates in index order from a fresh accumulator and chunk results are
//! merged in chunk order, so any executor honouring this contract produces
//! bit-identical output regardless of thread count.

/// Number of replicates folded into one accumulator before merging.
pub const CHUNK: u64 = 64;

pub trait Executor: Sync {
    fn fold_replicates<A, I, F, M>(&self, count: u64, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, u64) + Sync,
        M: Fn(&mut A, A) + Sync;
}

/// Single-threaded reference executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn fold_replicates<A, I, F, M>(&self, count: u64, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, u64) + Sync,
        M: Fn(&mut A, A) + Sync,
    {
        let mut total: Option<A> = None;
        let mut start = 0;
        while start < count {
            let end = (start + CHUNK).min(count);
            let mut acc = init();
            for r in start..end {
                fold(&mut acc, r);
            }
            match total.as_mut() {
                None => total = Some(acc),
                Some(t) => merge(t, acc),
            }
            start = end;
        }
        total.unwrap_or_else(init)
    }
}

/// Run `count` replicates and collect one value each, in replicate order.
pub fn collect_replicates<E, T, F>(exec: &E, count: u64, f: F) -> alloc::vec::Vec<T>
where
    E: Executor,
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    exec.fold_replicates(count, alloc::vec::Vec::new, |acc, r| acc.push(f(r)), |a, mut b| a.append(&mut b))
}

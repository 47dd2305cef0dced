//! Execution policy for the data-parallel inner loops.
//!
//! With the `parallel` feature the chunked map runs on the rayon pool;
//! without it every policy falls back to a sequential loop. Results are
//! merged in chunk order, so normal forms do not depend on scheduling.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecPolicy {
    Sequential,
    Parallel,
}

/// Work (term-pair products) below which splitting is not worth it.
pub const PARALLEL_THRESHOLD: usize = 2048;

pub fn default_policy() -> ExecPolicy {
    if cfg!(feature = "parallel") {
        ExecPolicy::Parallel
    } else {
        ExecPolicy::Sequential
    }
}

/// Applies `f` to contiguous chunks of `items` and returns the partial results in order.
pub fn map_chunks<T, R, F>(policy: ExecPolicy, items: &[T], work: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    if items.is_empty() {
        return Vec::new();
    }
    match policy {
        #[cfg(feature = "parallel")]
        ExecPolicy::Parallel if work >= PARALLEL_THRESHOLD && items.len() > 1 => {
            use rayon::prelude::*;
            let threads = rayon::current_num_threads().max(1);
            let chunk = items.len().div_ceil(threads * 4).max(1);
            items.par_chunks(chunk).map(&f).collect()
        }
        _ => {
            let _ = work;
            vec![f(items)]
        }
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map_each<T, R, F>(policy: ExecPolicy, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match policy {
        #[cfg(feature = "parallel")]
        ExecPolicy::Parallel if items.len() > 1 => {
            use rayon::prelude::*;
            items.par_iter().map(&f).collect()
        }
        _ => items.iter().map(&f).collect(),
    }
}

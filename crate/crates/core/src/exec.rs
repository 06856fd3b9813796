//! Small execution facade: data-parallel maps on rayon when the `parallel`
//! feature is enabled, plain iterator maps otherwise.
//!
//! Callers must only submit work whose per-item results do not depend on
//! evaluation order; both backends return results in input order, so builds
//! with and without `parallel` produce identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Frontier sizes below this are cheaper to expand on one thread.
pub const PAR_THRESHOLD: usize = 512;

/// Map over a slice, in parallel when the feature is on and the slice is
/// large enough to amortize the scheduling overhead.
pub fn map_frontier<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if items.len() >= PAR_THRESHOLD {
        return items.par_iter().map(&f).collect();
    }
    items.iter().map(f).collect()
}

/// Map over an index range. Used for seed batches and per-record work where
/// each item is substantial, so no size threshold applies.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential twin of [`map_range`], kept unconditionally compiled so
/// benchmarks can compare the two paths in one binary.
pub fn map_range_serial<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

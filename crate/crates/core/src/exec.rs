//! Execution helpers: indexed maps that run data-parallel under the
//! `parallel` feature and sequentially otherwise.
//!
//! The call sites are embarrassingly parallel sweeps (candidate evaluations
//! in the greedy derandomizations, Monte Carlo trial batches, verification
//! instances); keeping the dispatch here keeps the algorithm code free of
//! feature flags.

/// Sequential baseline; always available (used directly by the benches).
pub fn map_indexed_seq<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync,
    T: Send,
{
    (0..count).map(f).collect()
}

/// Rayon-backed map over `0..count`.
#[cfg(feature = "parallel")]
pub fn map_indexed_par<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

/// Feature-dispatched map over `0..count`, preserving index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    map_indexed_par(count, f)
}

/// Feature-dispatched map over `0..count`, preserving index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync,
    T: Send,
{
    map_indexed_seq(count, f)
}

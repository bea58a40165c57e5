//! Data-parallel grid evaluation with a sequential fallback.
//!
//! The grid workloads (chart sampling, pullback checks, PDE residuals,
//! collision scans) are embarrassingly parallel over nodes.  With the
//! `parallel` feature (on by default) `Exec::Par` fans rows out through
//! rayon; without it every call runs sequentially.  Both paths stay
//! available when the feature is on, which is what the benches compare.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for grid loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Seq,
    /// Rayon work-stealing over rows; alias of `Seq` when the `parallel`
    /// feature is disabled.
    #[default]
    Par,
}

/// Evaluate `f(i, j)` over the `n0 x n1` index grid, row-major.
pub fn map2<T, F>(n0: usize, n1: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync + Send,
{
    match exec {
        Exec::Seq => map2_seq(n0, n1, f),
        Exec::Par => map2_par(n0, n1, f),
    }
}

pub fn map2_seq<T, F>(n0: usize, n1: usize, f: F) -> Vec<T>
where
    F: Fn(usize, usize) -> T,
{
    let mut out = Vec::with_capacity(n0 * n1);
    for i in 0..n0 {
        for j in 0..n1 {
            out.push(f(i, j));
        }
    }
    out
}

#[cfg(feature = "parallel")]
pub fn map2_par<T, F>(n0: usize, n1: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync + Send,
{
    (0..n0)
        .into_par_iter()
        .flat_map_iter(|i| (0..n1).map(move |j| (i, j)))
        .map(|(i, j)| f(i, j))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map2_par<T, F>(n0: usize, n1: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync + Send,
{
    map2_seq(n0, n1, f)
}

/// Fold `f(i)` over `0..n` with `combine`, in parallel when available.
pub fn reduce_indexed<T, F, C>(n: usize, exec: Exec, identity: T, f: F, combine: C) -> T
where
    T: Send + Sync + Clone,
    F: Fn(usize) -> T + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
{
    match exec {
        Exec::Seq => (0..n).map(f).fold(identity, combine),
        Exec::Par => reduce_indexed_par(n, identity, f, combine),
    }
}

#[cfg(feature = "parallel")]
fn reduce_indexed_par<T, F, C>(n: usize, identity: T, f: F, combine: C) -> T
where
    T: Send + Sync + Clone,
    F: Fn(usize) -> T + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(f)
        .reduce(|| identity.clone(), &combine)
}

#[cfg(not(feature = "parallel"))]
fn reduce_indexed_par<T, F, C>(n: usize, identity: T, f: F, combine: C) -> T
where
    T: Send + Sync + Clone,
    F: Fn(usize) -> T + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
{
    (0..n).map(f).fold(identity, combine)
}

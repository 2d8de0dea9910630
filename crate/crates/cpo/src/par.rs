//! Thin switch between rayon and plain iteration.
//!
//! Every parallel kernel in this crate is a pure map over an index range
//! followed by a sequential, order-fixed reduction, so the two paths return
//! bitwise-identical results. Benchmarks compare them by building with and
//! without the `parallel` feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n` and collects results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Maps `f` over a slice of inputs, preserving input order.
#[cfg(feature = "parallel")]
pub(crate) fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    F: Fn(&I) -> T,
{
    items.iter().map(f).collect()
}

/// Maps `f` over a mutable slice, collecting results in element order.
#[cfg(feature = "parallel")]
pub(crate) fn map_mut<I, T, F>(items: &mut [I], f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(&mut I) -> T + Sync + Send,
{
    items.par_iter_mut().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_mut<I, T, F>(items: &mut [I], f: F) -> Vec<T>
where
    F: Fn(&mut I) -> T,
{
    items.iter_mut().map(f).collect()
}

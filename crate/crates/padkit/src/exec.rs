//! Data-parallel helpers with a sequential fallback.
//!
//! Enumerations over residue classes and cell grids are embarrassingly
//! parallel. With the `parallel` feature (default) the work is split into
//! deterministic chunks mapped with rayon and reduced in index order, so the
//! floating-point result is bit-identical to the sequential path regardless
//! of thread count. Building with `--no-default-features` removes rayon
//! entirely.

use crate::C64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const CHUNK: u64 = 1 << 14;

/// Sequential reference implementation of [`sum_over`]. Accumulates in the
/// same fixed chunk order as the parallel path, so both are bit-identical.
pub fn sum_over_seq<F>(n: u64, f: F) -> C64
where
    F: Fn(u64) -> C64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK).max(1);
    let mut total = C64::new(0.0, 0.0);
    for c in 0..chunks {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut acc = C64::new(0.0, 0.0);
        for i in lo..hi {
            acc += f(i);
        }
        total += acc;
    }
    total
}

/// Parallel sum of `f(0) + ... + f(n-1)`; chunked deterministically and
/// reduced in index order so the result matches `sum_over_seq` bitwise.
#[cfg(feature = "parallel")]
pub fn sum_over_par<F>(n: u64, f: F) -> C64
where
    F: Fn(u64) -> C64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK).max(1);
    let partials: Vec<C64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut acc = C64::new(0.0, 0.0);
            for i in lo..hi {
                acc += f(i);
            }
            acc
        })
        .collect();
    partials.into_iter().sum()
}

/// Feature-dispatched sum over `0..n`.
pub fn sum_over<F>(n: u64, f: F) -> C64
where
    F: Fn(u64) -> C64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        sum_over_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sum_over_seq(n, f)
    }
}

/// Sequential reference implementation of [`map_cells`].
pub fn map_cells_seq<F>(n: usize, f: F) -> Vec<C64>
where
    F: Fn(usize) -> C64 + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Fill a vector of length `n` with `f(i)` per index, in parallel when
/// available. Output is position-indexed so parallelism cannot reorder it.
#[cfg(feature = "parallel")]
pub fn map_cells_par<F>(n: usize, f: F) -> Vec<C64>
where
    F: Fn(usize) -> C64 + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Feature-dispatched cell map.
pub fn map_cells<F>(n: usize, f: F) -> Vec<C64>
where
    F: Fn(usize) -> C64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_cells_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_cells_seq(n, f)
    }
}

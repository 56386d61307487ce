//! Data-parallel helpers with a sequential fallback.
//!
//! Every reduction here splits the index range into fixed-size chunks whose
//! boundaries do not depend on the thread count, sums each chunk in index
//! order and then combines the chunk partials with a pairwise tree. Results
//! are therefore bit-identical between the rayon path, the sequential path
//! and any `RAYON_NUM_THREADS` setting.
//!
//! Building without the `parallel` feature removes rayon entirely; inside a
//! [`with_sequential`] scope the parallel build also runs everything on the
//! calling thread (the benches use this to compare both paths).

use std::sync::atomic::{AtomicUsize, Ordering};

/// Chunk length for reductions. Part of the determinism contract: changing it
/// changes low-order bits of every sum.
pub const REDUCE_CHUNK: usize = 1024;

static SEQUENTIAL_SCOPES: AtomicUsize = AtomicUsize::new(0);

struct ScopeGuard;

impl Drop for ScopeGuard {
    fn drop(&mut self) {
        SEQUENTIAL_SCOPES.fetch_sub(1, Ordering::SeqCst);
    }
}

/// Runs `f` with data parallelism disabled process-wide.
pub fn with_sequential<R>(f: impl FnOnce() -> R) -> R {
    SEQUENTIAL_SCOPES.fetch_add(1, Ordering::SeqCst);
    let _guard = ScopeGuard;
    f()
}

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && SEQUENTIAL_SCOPES.load(Ordering::SeqCst) == 0
}

/// Collects `f(0..n)` in index order.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Applies `f(chunk_index, chunk)` to consecutive `chunk`-sized pieces.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Sets `out[i] = f(i)`.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    for_each_chunk_mut(out, REDUCE_CHUNK, |c, chunk| {
        let base = c * REDUCE_CHUNK;
        for (k, slot) in chunk.iter_mut().enumerate() {
            *slot = f(base + k);
        }
    });
}

fn chunk_partials<F>(n: usize, f: &F, combine: fn(f64, f64) -> f64, init: f64) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    map_collect(chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).fold(init, |acc, i| combine(acc, f(i)))
    })
}

/// Pairwise (tree) sum of a slice in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        len => {
            let mid = len / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Deterministic sum of `f(0..n)`.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    pairwise_sum(&chunk_partials(n, &f, |a, b| a + b, 0.0))
}

/// Maximum of `f(0..n)`; `0.0` for an empty range. NaN propagates.
pub fn max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    fn nan_max(a: f64, b: f64) -> f64 {
        if a.is_nan() || b.is_nan() {
            f64::NAN
        } else {
            a.max(b)
        }
    }
    chunk_partials(n, &f, nan_max, 0.0)
        .into_iter()
        .fold(0.0, nan_max)
}

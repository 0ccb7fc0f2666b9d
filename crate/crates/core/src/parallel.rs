//! Thin switch between rayon and sequential iteration.
//!
//! Everything here preserves input order, and reductions are done over
//! fixed-size chunks whose partial sums are combined sequentially, so the
//! `parallel` feature never changes a floating-point result.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for order-stable reductions.
pub const REDUCE_CHUNK: usize = 4096;

/// Minimum length before a reduction is split across threads.
pub const PAR_THRESHOLD: usize = 16 * REDUCE_CHUNK;

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Apply `f` to each `REDUCE_CHUNK`-sized index range of `0..len` and return
/// the partial results in chunk order.
pub fn chunked<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(std::ops::Range<usize>) -> R + Sync + Send,
{
    let n_chunks = len.div_ceil(REDUCE_CHUNK);
    let range = |c: usize| c * REDUCE_CHUNK..((c + 1) * REDUCE_CHUNK).min(len);
    #[cfg(feature = "parallel")]
    {
        if len >= PAR_THRESHOLD {
            return (0..n_chunks).into_par_iter().map(|c| f(range(c))).collect();
        }
    }
    (0..n_chunks).map(|c| f(range(c))).collect()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

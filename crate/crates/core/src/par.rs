//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the maps run on the ambient rayon pool; without
//! it they are plain iterators. Results always come back in index order, and
//! callers reduce them sequentially, so outputs do not depend on the number of
//! worker threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(0), …, f(len − 1)` and returns the results in order.
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
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

/// Splits `0..total` into at most `max_chunks` contiguous ranges of nearly
/// equal size. The split depends only on the arguments.
pub fn chunk_ranges(total: usize, max_chunks: usize) -> Vec<std::ops::Range<usize>> {
    if total == 0 {
        return Vec::new();
    }
    let chunks = max_chunks.clamp(1, total);
    let base = total / chunks;
    let extra = total % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for c in 0..chunks {
        let len = base + usize::from(c < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Whether the crate was built with rayon support.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

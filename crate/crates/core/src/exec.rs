//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch to rayon; without it, or
//! inside [`sequential`], they run on the calling thread. Reductions are
//! split into fixed-size chunks summed in chunk order, so results never depend
//! on the number of worker threads.

use std::cell::Cell;

/// Chunk length for reductions. Fixed so that summation order is stable.
pub const REDUCE_CHUNK: usize = 1024;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with all helpers on this thread forced onto the sequential path.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(prev));
    out
}

/// True inside [`sequential`].
pub fn is_sequential() -> bool {
    FORCE_SEQUENTIAL.with(|c| c.get())
}

#[cfg(feature = "parallel")]
fn use_parallel() -> bool {
    !is_sequential()
}

/// Calls `f(row_index, row)` for every `width`-long row of `data`.
pub fn for_each_row<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if use_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(y, row)| f(y, row));
        return;
    }
    data.chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| f(y, row));
}

/// Builds a vector of length `n` from `f(i)`.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Sum of `f(i)` over `0..n` with a thread-count independent summation order.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partial = |c: usize| -> f64 {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).map(&f).sum()
    };
    map_indexed(chunks, partial).into_iter().sum()
}

/// Max of `f(i)` over `0..n`, or 0 for empty ranges.
pub fn max_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partial = |c: usize| -> f64 {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).map(&f).fold(0.0, f64::max)
    };
    map_indexed(chunks, partial).into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_matches_between_paths() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let par = sum_indexed(10_000, f);
        let seq = sequential(|| sum_indexed(10_000, f));
        assert_eq!(par.to_bits(), seq.to_bits());
    }

    #[test]
    fn rows_visit_every_element() {
        let mut data = vec![0usize; 12];
        for_each_row(&mut data, 4, |y, row| {
            for (x, v) in row.iter_mut().enumerate() {
                *v = y * 4 + x;
            }
        });
        assert_eq!(data, (0..12).collect::<Vec<_>>());
    }
}

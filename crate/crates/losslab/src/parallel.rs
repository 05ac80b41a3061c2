//! Partition-invariant parallel helpers.
//!
//! Trials are grouped into fixed chunks of [`TRIAL_CHUNK`]; each chunk is
//! reduced sequentially and chunk results are folded in chunk order. The
//! chunk boundaries depend only on the trial count, never on the worker
//! count, so floating-point accumulations come out bit-identical whether
//! the chunks ran on one thread or eight. With the `parallel` feature
//! disabled everything degrades to a plain sequential loop with the same
//! arithmetic order.

use std::ops::Range;

/// Trials per work unit. Large enough to amortize scheduling, small
/// enough to parallelize the 10^3-trial determinism tests.
pub const TRIAL_CHUNK: u64 = 256;

/// Map fixed chunks of `0..n` and return the per-chunk results in chunk
/// order. The caller folds them sequentially.
pub fn chunked_map<T, F>(n: u64, map_chunk: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let n_chunks = n.div_ceil(TRIAL_CHUNK);
    let chunk_range = |c: u64| {
        let lo = c * TRIAL_CHUNK;
        lo..(lo + TRIAL_CHUNK).min(n)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_chunks)
            .into_par_iter()
            .map(|c| map_chunk(chunk_range(c)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_chunks).map(|c| map_chunk(chunk_range(c))).collect()
    }
}

/// Order-preserving parallel map over a slice.
pub fn ordered_map<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Order-preserving parallel map over an index range.
pub fn ordered_map_indices<O, F>(n: usize, f: F) -> Vec<O>
where
    O: Send,
    F: Fn(usize) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_cover_is_exact() {
        for n in [0u64, 1, 255, 256, 257, 1000, 4096] {
            let chunks = chunked_map(n, |r| r.end - r.start);
            assert_eq!(chunks.iter().sum::<u64>(), n);
        }
    }

    #[test]
    fn ordered_map_preserves_order() {
        let items: Vec<u64> = (0..5000).collect();
        let out = ordered_map(&items, |&x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}

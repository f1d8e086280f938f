//! Execution helpers for the data-parallel inner loops.
//!
//! Every parallel loop in this crate maps an index range to a vector and
//! reduces sequentially afterwards, so results are identical whatever the
//! thread count and identical to the sequential fallback built with
//! `--no-default-features`. The `*_seq` variants are always available; the
//! bench suite uses them to compare both paths in one binary.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `0..n` through `f`, preserving index order in the output.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `0..n` through `f`, preserving index order in the output.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}

/// Sequential twin of [`map_indexed`].
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Splitmix64 finalizer; derives independent per-item RNG seeds from a
/// base seed so parallel work items never share a stream.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_matches_sequential() {
        let par = map_indexed(100, |i| i * i);
        let seq = map_indexed_seq(100, |i| i * i);
        assert_eq!(par, seq);
    }

    #[test]
    fn substreams_differ() {
        let a = substream_seed(42, 0);
        let b = substream_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, substream_seed(42, 0));
    }
}

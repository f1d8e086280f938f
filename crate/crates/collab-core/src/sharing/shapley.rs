//! Shapley-value sharing: exact subset enumeration and permutation
//! sampling.
//!
//! The exact share of participant `i` is their expected marginal
//! contribution when participants are added in a uniformly random order.
//! Over subsets this is `Σ_{S ∌ i} |S|!(n−1−|S|)!/n! · (v(S ∪ i) − v(S))`,
//! which needs `2^n` value evaluations instead of `n!` orderings.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec;
use crate::model::ValueFunction;
use crate::{Error, Result};

/// Exact enumeration cap: beyond this, use sampling.
pub const SHAPLEY_EXACT_CAP: usize = 12;

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Exact Shapley shares; errors above [`SHAPLEY_EXACT_CAP`] participants.
pub fn exact_shares(vf: &ValueFunction, q: &[f64]) -> Result<Vec<f64>> {
    let n = q.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n > SHAPLEY_EXACT_CAP {
        return Err(Error::ShapleyTooLarge { n, cap: SHAPLEY_EXACT_CAP });
    }
    let size = 1usize << n;
    let mut value = vec![0.0; size];
    let mut scratch = vec![0.0; n];
    for (mask, slot) in value.iter_mut().enumerate().skip(1) {
        for (i, s) in scratch.iter_mut().enumerate() {
            *s = if mask & (1 << i) != 0 { q[i] } else { 0.0 };
        }
        *slot = vf.value(&scratch);
    }
    let fact = factorials(n);
    let weight: Vec<f64> = (0..n).map(|s| fact[s] * fact[n - 1 - s] / fact[n]).collect();
    let mut shares = vec![0.0; n];
    for mask in 0..size {
        let ones = mask.count_ones() as usize;
        if ones == n {
            continue;
        }
        let w = weight[ones];
        for (i, share) in shares.iter_mut().enumerate() {
            if mask & (1 << i) == 0 {
                *share += w * (value[mask | (1 << i)] - value[mask]);
            }
        }
    }
    Ok(shares)
}

fn one_permutation(vf: &ValueFunction, q: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = q.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut scratch = vec![0.0; n];
    let mut prev = 0.0;
    let mut out = vec![0.0; n];
    for &i in &order {
        scratch[i] = q[i];
        let val = vf.value(&scratch);
        out[i] = val - prev;
        prev = val;
    }
    out
}

/// Shapley shares averaged over `samples` random permutations. Each
/// permutation's marginals telescope to `v(q)`, so the average is budget
/// balanced by construction. Deterministic in `(samples, seed)` regardless
/// of thread count.
pub fn sampled_shares(vf: &ValueFunction, q: &[f64], samples: usize, seed: u64) -> Vec<f64> {
    accumulate(sample_matrix(vf, q, samples, seed, false), q.len(), samples).0
}

/// Sequential twin of [`sampled_shares`]; produces identical output.
pub fn sampled_shares_seq(vf: &ValueFunction, q: &[f64], samples: usize, seed: u64) -> Vec<f64> {
    accumulate(sample_matrix(vf, q, samples, seed, true), q.len(), samples).0
}

/// Sampled shares with their standard errors.
pub fn sampled_shares_detailed(
    vf: &ValueFunction,
    q: &[f64],
    samples: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    accumulate(sample_matrix(vf, q, samples, seed, false), q.len(), samples)
}

fn sample_matrix(
    vf: &ValueFunction,
    q: &[f64],
    samples: usize,
    seed: u64,
    force_seq: bool,
) -> Vec<Vec<f64>> {
    let draw = |s: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(exec::substream_seed(seed, s as u64));
        one_permutation(vf, q, &mut rng)
    };
    if force_seq {
        exec::map_indexed_seq(samples, draw)
    } else {
        exec::map_indexed(samples, draw)
    }
}

fn accumulate(matrix: Vec<Vec<f64>>, n: usize, samples: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; n];
    for row in &matrix {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= samples as f64;
    }
    let mut var = vec![0.0; n];
    if samples > 1 {
        for row in &matrix {
            for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        for v in &mut var {
            *v = (*v / (samples as f64 - 1.0) / samples as f64).sqrt();
        }
    }
    (mean, var)
}

/// Analytic own-quality derivative of the exact Shapley share for values of
/// the total quality: `Σ_{S ⊆ others} w(|S|) · v'(Σ_S + q_i)`, with the sum
/// floored at `floor` so the derivative stays finite at zero.
pub fn share_derivative_concave(
    vf: &ValueFunction,
    q: &[f64],
    i: usize,
    floor: Option<f64>,
) -> Result<f64> {
    let n = q.len();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    if n > SHAPLEY_EXACT_CAP {
        return Err(Error::ShapleyTooLarge { n, cap: SHAPLEY_EXACT_CAP });
    }
    let others: Vec<f64> =
        q.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &x)| x).collect();
    let m = others.len();
    let fact = factorials(n);
    let eps = floor.unwrap_or(0.0);
    let mut deriv = 0.0;
    for mask in 0..(1usize << m) {
        let mut sum = 0.0;
        for (k, &x) in others.iter().enumerate() {
            if mask & (1 << k) != 0 {
                sum += x;
            }
        }
        let s = mask.count_ones() as usize;
        let w = fact[s] * fact[n - 1 - s] / fact[n];
        deriv += w * vf.total_derivative((sum + q[i]).max(eps));
    }
    Ok(deriv)
}

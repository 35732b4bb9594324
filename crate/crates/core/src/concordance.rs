//! Pair-counting kernels: signed concordance sums, tied-row pair counts and
//! midranks, all in `O(n log n)` with exact integer accumulation.

use serde::{Deserialize, Serialize};

use crate::data::{order_key, RowClasses};
use crate::error::{Error, Result};

/// Concordance counts of a pair of vectors over all `C(n, 2)` index pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedPairSum {
    pub concordant: u64,
    pub discordant: u64,
    /// `concordant - discordant`, i.e. `Σ_{k<l} sgn(a_k - a_l) sgn(b_k - b_l)`.
    pub value: i64,
    pub pairs_total: u64,
}

#[inline]
pub(crate) fn pairs(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Dense ranks `0..d` (equal values share a rank).
pub(crate) fn dense_ranks(v: &[f64]) -> Vec<u32> {
    let mut keyed: Vec<(u64, u32)> = v.iter().enumerate().map(|(i, &u)| (order_key(u), i as u32)).collect();
    radix_sort(&mut keyed);
    let mut out = vec![0u32; v.len()];
    let mut r = 0u32;
    for w in 0..keyed.len() {
        if w > 0 && keyed[w].0 != keyed[w - 1].0 {
            r += 1;
        }
        out[keyed[w].1 as usize] = r;
    }
    out
}

/// Sorts by key, then by payload, given payloads that start out ascending.
/// Least-significant-digit radix sort with 11-bit digits; digits that are
/// constant across all keys are skipped.
pub(crate) fn radix_sort(v: &mut Vec<(u64, u32)>) {
    const BITS: usize = 11;
    const BUCKETS: usize = 1 << BITS;
    const DIGITS: usize = 64usize.div_ceil(BITS);
    let n = v.len();
    if n < 1 << 10 {
        v.sort_unstable();
        return;
    }
    let mut counts = vec![[0usize; BUCKETS]; DIGITS];
    for &(k, _) in v.iter() {
        for (d, c) in counts.iter_mut().enumerate() {
            c[((k >> (d * BITS)) as usize) & (BUCKETS - 1)] += 1;
        }
    }
    let mut buf = vec![(0u64, 0u32); n];
    for (d, c) in counts.iter_mut().enumerate() {
        if c.contains(&n) {
            continue;
        }
        let mut acc = 0;
        for slot in c.iter_mut() {
            let m = *slot;
            *slot = acc;
            acc += m;
        }
        for &e in v.iter() {
            let b = ((e.0 >> (d * BITS)) as usize) & (BUCKETS - 1);
            buf[c[b]] = e;
            c[b] += 1;
        }
        std::mem::swap(v, &mut buf);
    }
}

fn run_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in 1..sorted.len() {
        if sorted[w] == sorted[w - 1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `seq` ascending and returns the number of strict inversions.
fn merge_sort_inversions(seq: &mut Vec<u32>) -> u64 {
    let n = seq.len();
    let mut buf = vec![0u32; n];
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut out) = (lo, mid, lo);
            while i < mid && j < hi {
                if seq[i] <= seq[j] {
                    buf[out] = seq[i];
                    i += 1;
                } else {
                    buf[out] = seq[j];
                    j += 1;
                    swaps += (mid - i) as u64;
                }
                out += 1;
            }
            buf[out..out + (mid - i)].copy_from_slice(&seq[i..mid]);
            out += mid - i;
            buf[out..out + (hi - j)].copy_from_slice(&seq[j..hi]);
            lo = hi;
        }
        std::mem::swap(seq, &mut buf);
        width *= 2;
    }
    swaps
}

/// Knight's algorithm with the usual tie bookkeeping: sort by `(a, b)`,
/// count joint and `a`-ties, then count inversions of `b` while merge
/// sorting and finally count `b`-ties.
pub fn signed_pair_sum(a: &[f64], b: &[f64]) -> Result<SignedPairSum> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "second vector",
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    let total = pairs(n);
    if n < 2 {
        return Ok(SignedPairSum {
            concordant: 0,
            discordant: 0,
            value: 0,
            pairs_total: total,
        });
    }
    let ra = dense_ranks(a);
    let rb = dense_ranks(b);
    Ok(signed_pair_sum_of_ranks(&ra, &rb))
}

/// [`signed_pair_sum`] on dense ranks.
pub(crate) fn signed_pair_sum_of_ranks(ra: &[u32], rb: &[u32]) -> SignedPairSum {
    let n = ra.len();
    let total = pairs(n);
    let mut keyed: Vec<(u64, u32)> = ra
        .iter()
        .zip(rb)
        .map(|(&u, &v)| ((u64::from(u) << 32) | u64::from(v), 0))
        .collect();
    radix_sort(&mut keyed);
    let keys: Vec<u64> = keyed.into_iter().map(|(k, _)| k).collect();

    let tied_ab = run_pairs(&keys);
    let a_only: Vec<u64> = keys.iter().map(|k| k >> 32).collect();
    let tied_a = run_pairs(&a_only);

    let mut seq: Vec<u32> = keys.iter().map(|k| *k as u32).collect();
    let discordant = merge_sort_inversions(&mut seq);
    let tied_b = run_pairs(&seq);

    let concordant = total + tied_ab - tied_a - tied_b - discordant;
    SignedPairSum {
        concordant,
        discordant,
        value: concordant as i64 - discordant as i64,
        pairs_total: total,
    }
}

/// Number of unordered pairs of identical rows in a row-major `n × p` buffer.
pub fn tie_pair_count(rows: &[f64], p: usize) -> u64 {
    assert!(p > 0 && rows.len().is_multiple_of(p), "buffer is not n × p");
    RowClasses::build(rows, p).tied_pairs()
}

/// Twice the midranks; always integers.
pub(crate) fn doubled_midranks(v: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_unstable_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0u64; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        // ranks start+1 ..= end, their average doubled
        let twice = (start + 1 + end) as u64;
        for &i in &idx[start..end] {
            out[i] = twice;
        }
        start = end;
    }
    out
}

/// Midranks: `R_i = 1/2 + Σ_j (1{v_j < v_i} + 1/2·1{v_j = v_i})`.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    doubled_midranks(v).into_iter().map(|d| d as f64 / 2.0).collect()
}

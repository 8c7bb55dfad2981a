//! k-mer counting, the fraction-of-common-k-mers distance, and k-mer rank.
//!
//! The distance between sequences X and Y is d = -ln(delta + F), where F is
//! the count of shared k-mers divided by min(n,m)-k+1. The rank of a sequence
//! against a pool is the mean distance to every pool member (self included).
//! Identical sequences get the slightly negative distance -ln(1 + delta);
//! only rank order matters downstream, so no clamping is applied.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::seq::Sequence;

/// Parameters for k-mer distance: word length and the constant added
/// inside the logarithm to keep it finite when no k-mers are shared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmerParams {
    k: usize,
    delta: f64,
}

impl KmerParams {
    pub fn new(k: usize, delta: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidConfig("k-mer length must be >= 1".into()));
        }
        if !(delta > 0.0 && delta <= 0.1) {
            return Err(Error::InvalidConfig(format!(
                "delta must be in (0, 0.1], got {delta}"
            )));
        }
        Ok(KmerParams { k, delta })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Upper bound of the distance, attained when no k-mers are shared.
    pub fn max_distance(&self) -> f64 {
        -self.delta.ln()
    }

    /// Lower bound of the distance, attained by identical sequences.
    pub fn min_distance(&self) -> f64 {
        -(1.0 + self.delta).ln()
    }
}

impl Default for KmerParams {
    fn default() -> Self {
        KmerParams { k: 5, delta: 0.02 }
    }
}

/// Sparse k-mer occurrence counts for one sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmerVector {
    k: usize,
    counts: HashMap<Vec<u8>, u32>,
    seq_len: usize,
}

impl KmerVector {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn counts(&self) -> &HashMap<Vec<u8>, u32> {
        &self.counts
    }

    /// Total k-mer occurrences: max(0, n - k + 1).
    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }
}

/// Count every length-k substring of the sequence. Empty map when n < k.
pub fn count_kmers(seq: &Sequence, k: usize) -> KmerVector {
    count_kmers_of(seq.residues(), k)
}

pub(crate) fn count_kmers_of(residues: &[u8], k: usize) -> KmerVector {
    assert!(k >= 1, "k-mer length must be >= 1");
    let mut counts = HashMap::new();
    if residues.len() >= k {
        for window in residues.windows(k) {
            *counts.entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    KmerVector {
        k,
        counts,
        seq_len: residues.len(),
    }
}

/// Number of k-mer occurrences shared by the two vectors: sum of
/// min(count_x, count_y) over all k-mers.
fn common_kmers(x: &KmerVector, y: &KmerVector) -> u64 {
    // Iterate the smaller map; the sum of integer minima is order-independent.
    let (small, large) = if x.counts.len() <= y.counts.len() {
        (x, y)
    } else {
        (y, x)
    };
    small
        .counts
        .iter()
        .filter_map(|(kmer, &cx)| large.counts.get(kmer).map(|&cy| cx.min(cy) as u64))
        .sum()
}

/// Fraction of common k-mers. Defined as 0 when either sequence is
/// shorter than k.
pub fn kmer_fraction(x: &KmerVector, y: &KmerVector, params: &KmerParams) -> Result<f64> {
    if x.k != y.k || x.k != params.k {
        return Err(Error::KmerLenMismatch {
            left: x.k,
            right: y.k.max(params.k),
        });
    }
    let min_len = x.seq_len.min(y.seq_len);
    if min_len < params.k {
        return Ok(0.0);
    }
    let denom = (min_len - params.k + 1) as f64;
    Ok(common_kmers(x, y) as f64 / denom)
}

/// k-mer distance d = -ln(delta + F). Symmetric in its arguments.
pub fn kmer_distance(x: &KmerVector, y: &KmerVector, params: &KmerParams) -> Result<f64> {
    let f = kmer_fraction(x, y, params)?;
    Ok(-(params.delta + f).ln())
}

/// Rank of pool member i: mean k-mer distance to every pool member,
/// the self term included.
pub fn kmer_rank(i: usize, pool: &[KmerVector], params: &KmerParams) -> Result<f64> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let target = &pool[i];
    let mut sum = 0.0;
    for other in pool {
        sum += kmer_distance(target, other, params)?;
    }
    Ok(sum / pool.len() as f64)
}

/// Rank of a sequence against a sample standing in for the full pool:
/// mean distance to every sample member.
pub fn rank_against_sample(
    seq: &KmerVector,
    sample: &[KmerVector],
    params: &KmerParams,
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut sum = 0.0;
    for s in sample {
        sum += kmer_distance(seq, s, params)?;
    }
    Ok(sum / sample.len() as f64)
}

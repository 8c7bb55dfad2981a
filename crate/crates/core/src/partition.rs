//! Regular-sampling redistribution: evenly spaced samples from each
//! worker's sorted list, pivot selection at the root, and rank-range
//! bucket assignment. With p-1 regular samples per worker no bucket
//! exceeds 2N/p sequences.

use crate::error::{Error, Result};

/// A sequence id paired with its decomposition rank and current worker.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSeq {
    pub id: String,
    pub rank: f64,
    pub home_worker: usize,
}

impl RankedSeq {
    pub fn new(id: impl Into<String>, rank: f64, home_worker: usize) -> Result<Self> {
        if !rank.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "rank must be finite, got {rank}"
            )));
        }
        Ok(RankedSeq {
            id: id.into(),
            rank,
            home_worker,
        })
    }
}

/// p-1 sorted rank boundaries defining p buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotSet {
    pivots: Vec<f64>,
}

impl PivotSet {
    pub fn new(pivots: Vec<f64>) -> Result<Self> {
        if pivots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig("pivots must be non-decreasing".into()));
        }
        Ok(PivotSet { pivots })
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivots
    }

    /// Number of buckets the pivots define.
    pub fn bucket_count(&self) -> usize {
        self.pivots.len() + 1
    }

    /// Bucket index for a rank: the smallest i with rank <= pivot_i,
    /// else the last bucket. Boundary ties go to the lower bucket.
    pub fn bucket_of(&self, rank: f64) -> usize {
        self.pivots.partition_point(|&p| p < rank)
    }
}

/// Bucket assignment produced by redistribution.
#[derive(Debug, Clone)]
pub struct WorkerPlan {
    buckets: Vec<Vec<String>>,
}

impl WorkerPlan {
    pub fn buckets(&self) -> &[Vec<String>] {
        &self.buckets
    }

    pub fn counts(&self) -> Vec<usize> {
        self.buckets.iter().map(Vec::len).collect()
    }

    pub fn max_bucket(&self) -> usize {
        self.buckets.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Evenly spaced samples from a rank-sorted list: positions
/// floor((j+1)*len/(count+1)) for j in 0..count. Asking for the whole
/// list returns it unchanged.
pub fn choose_local_samples(ranked: &[RankedSeq], count: usize) -> Result<Vec<String>> {
    let len = ranked.len();
    if count == 0 || count > len {
        return Err(Error::SampleCount { count, len });
    }
    if count == len {
        return Ok(ranked.iter().map(|r| r.id.clone()).collect());
    }
    Ok((0..count)
        .map(|j| ranked[(j + 1) * len / (count + 1)].id.clone())
        .collect())
}

/// Select p-1 pivots from the gathered regular sample of p(p-1) ranks:
/// sort ascending and take the 1-based positions floor(p/2) + j*p.
pub fn select_pivots(sample_ranks: &[f64], p: usize) -> Result<PivotSet> {
    if p < 2 {
        return Err(Error::InvalidConfig(format!("need p >= 2, got {p}")));
    }
    let expected = p * (p - 1);
    if sample_ranks.len() != expected {
        return Err(Error::PivotCount {
            expected,
            got: sample_ranks.len(),
        });
    }
    let mut sorted = sample_ranks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("ranks are finite"));
    let pivots = (0..p - 1).map(|j| sorted[p / 2 + j * p - 1]).collect();
    PivotSet::new(pivots)
}

/// Assign every ranked sequence to its pivot bucket.
pub fn assign_buckets(ranked: &[RankedSeq], pivots: &PivotSet) -> WorkerPlan {
    let mut buckets = vec![Vec::new(); pivots.bucket_count()];
    for r in ranked {
        buckets[pivots.bucket_of(r.rank)].push(r.id.clone());
    }
    WorkerPlan { buckets }
}

//! Alignment quality metrics against a reference: recovered-pair recall
//! (Q), intact-column fraction (TC), pair precision (Modeler), and the
//! sum-of-pairs score of an alignment under a substitution + affine gap
//! model.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::pairwise::{GapModel, SubstitutionModel};
use crate::seq::{degap, Alignment, GAP};

/// The set of aligned residue pairs of an alignment: for every column and
/// every unordered pair of rows with residues in it, the pair of residue
/// indices, keyed by (id A, id B) with A < B.
#[derive(Debug, Clone)]
pub struct PairSet {
    /// Sorted row ids; pair tuples index into this list.
    ids: Vec<String>,
    pairs: HashSet<(u32, u32, u32, u32)>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Size of the intersection with another pair set over the same ids.
    pub fn intersection_size(&self, other: &PairSet) -> Result<usize> {
        if self.ids != other.ids {
            return Err(Error::UnexpectedId(format!(
                "pair sets cover different ids: {:?} vs {:?}",
                self.ids, other.ids
            )));
        }
        let (small, large) = if self.pairs.len() <= other.pairs.len() {
            (self, other)
        } else {
            (other, self)
        };
        Ok(small
            .pairs
            .iter()
            .filter(|p| large.pairs.contains(p))
            .count())
    }
}

/// Enumerate the aligned residue pairs of an alignment.
pub fn aligned_pairs(a: &Alignment) -> PairSet {
    let mut ids: Vec<String> = a.rows().iter().map(|(id, _)| id.clone()).collect();
    ids.sort();
    let index_of: HashMap<&str, u32> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i as u32))
        .collect();
    let row_order: Vec<u32> = a
        .rows()
        .iter()
        .map(|(id, _)| index_of[id.as_str()])
        .collect();

    let mut pairs = HashSet::new();
    let mut res_pos = vec![0u32; a.depth()];
    for col in 0..a.n_cols() {
        let mut resident: Vec<(u32, u32)> = Vec::new();
        for (r, (_, row)) in a.rows().iter().enumerate() {
            if row[col] != GAP {
                resident.push((row_order[r], res_pos[r]));
                res_pos[r] += 1;
            }
        }
        for i in 0..resident.len() {
            for j in (i + 1)..resident.len() {
                let (a1, a2) = resident[i];
                let (b1, b2) = resident[j];
                if a1 < b1 {
                    pairs.insert((a1, a2, b1, b2));
                } else {
                    pairs.insert((b1, b2, a1, a2));
                }
            }
        }
    }
    PairSet { ids, pairs }
}

/// Check both alignments cover the same sequences (ids and residues).
fn check_comparable(test: &Alignment, reference: &Alignment) -> Result<()> {
    if test.depth() != reference.depth() {
        return Err(Error::UnexpectedId(format!(
            "{} rows vs {} rows",
            test.depth(),
            reference.depth()
        )));
    }
    for (id, row) in reference.rows() {
        let test_row = test
            .row_by_id(id)
            .ok_or_else(|| Error::MissingId(id.clone()))?;
        if degap(test_row) != degap(row) {
            return Err(Error::ResidueMismatch(id.clone()));
        }
    }
    Ok(())
}

/// Fraction of reference pairs recovered by the test alignment (recall).
/// 1.0 when the reference has no pairs.
pub fn q_score(test: &Alignment, reference: &Alignment) -> Result<f64> {
    check_comparable(test, reference)?;
    let ref_pairs = aligned_pairs(reference);
    if ref_pairs.is_empty() {
        return Ok(1.0);
    }
    let test_pairs = aligned_pairs(test);
    Ok(test_pairs.intersection_size(&ref_pairs)? as f64 / ref_pairs.len() as f64)
}

/// Fraction of test pairs that appear in the reference (precision).
/// 1.0 when the test alignment has no pairs.
pub fn modeler_score(test: &Alignment, reference: &Alignment) -> Result<f64> {
    check_comparable(test, reference)?;
    let test_pairs = aligned_pairs(test);
    if test_pairs.is_empty() {
        return Ok(1.0);
    }
    let ref_pairs = aligned_pairs(reference);
    Ok(test_pairs.intersection_size(&ref_pairs)? as f64 / test_pairs.len() as f64)
}

/// Fraction of reference columns whose full residue tuple (over the rows
/// with residues in that column) lands in a single test column. All-gap
/// reference columns are excluded from the denominator.
pub fn tc_score(test: &Alignment, reference: &Alignment) -> Result<f64> {
    check_comparable(test, reference)?;
    // Map each (row, residue index) of the test alignment to its column.
    let mut test_col_of: HashMap<&str, Vec<usize>> = HashMap::new();
    for (id, row) in test.rows() {
        let cols: Vec<usize> = row
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != GAP)
            .map(|(c, _)| c)
            .collect();
        test_col_of.insert(id, cols);
    }

    let mut res_pos = vec![0usize; reference.depth()];
    let mut scored = 0usize;
    let mut reproduced = 0usize;
    for col in 0..reference.n_cols() {
        let mut target: Option<usize> = None;
        let mut resident = 0usize;
        let mut intact = true;
        for (r, (id, row)) in reference.rows().iter().enumerate() {
            if row[col] == GAP {
                continue;
            }
            let t = test_col_of[id.as_str()][res_pos[r]];
            res_pos[r] += 1;
            resident += 1;
            match target {
                None => target = Some(t),
                Some(expected) if expected == t => {}
                Some(_) => intact = false,
            }
        }
        if resident > 0 {
            scored += 1;
            if intact {
                reproduced += 1;
            }
        }
    }
    if scored == 0 {
        return Ok(1.0);
    }
    Ok(reproduced as f64 / scored as f64)
}

/// Sum-of-pairs score: for every row pair, substitution scores over
/// co-resident columns plus affine gap costs per projected gap run
/// (columns where both rows are gapped are dropped first). Terminal gap
/// runs are penalized unless disabled.
pub fn sp_score(
    a: &Alignment,
    model: &SubstitutionModel,
    gaps: &GapModel,
    penalize_terminal: bool,
) -> Result<f64> {
    let rows = a.rows();
    let mut total = 0.0;
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            total +=
                pairwise_projection_score(&rows[i].1, &rows[j].1, model, gaps, penalize_terminal)?;
        }
    }
    Ok(total)
}

fn pairwise_projection_score(
    x: &[u8],
    y: &[u8],
    model: &SubstitutionModel,
    gaps: &GapModel,
    penalize_terminal: bool,
) -> Result<f64> {
    // Project to the columns where at least one row has a residue.
    let cols: Vec<(u8, u8)> = x
        .iter()
        .zip(y)
        .filter(|(&a, &b)| a != GAP || b != GAP)
        .map(|(&a, &b)| (a, b))
        .collect();
    let mut total = 0.0;
    let mut run_len = 0usize;
    let mut run_side = 0u8;
    let mut run_start = 0usize;
    for (idx, &(a, b)) in cols.iter().enumerate() {
        if a != GAP && b != GAP {
            if run_len > 0 {
                if penalize_terminal || run_start > 0 {
                    total += gaps.run_cost(run_len);
                }
                run_len = 0;
            }
            total += model.score_residues(a, b)?;
        } else {
            let side = if a == GAP { 0 } else { 1 };
            if run_len > 0 && side != run_side {
                if penalize_terminal || run_start > 0 {
                    total += gaps.run_cost(run_len);
                }
                run_len = 0;
            }
            if run_len == 0 {
                run_start = idx;
            }
            run_side = side;
            run_len += 1;
        }
    }
    if run_len > 0 && penalize_terminal {
        total += gaps.run_cost(run_len);
    }
    Ok(total)
}

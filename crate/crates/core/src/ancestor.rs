//! Local-ancestor extraction, global-ancestor construction, per-worker
//! fine-tuning against the global ancestor, and root-side gluing.
//!
//! The ancestor of a worker's alignment is its frequency profile plus a
//! gap-free consensus sequence; the global ancestor aligns all local
//! consensi and serves as the shared coordinate frame. Gluing places every
//! tuned alignment into that frame, concatenating different workers'
//! insertions at the same ancestor gap in worker order.

use crate::error::{Error, Result};
use crate::pairwise::{
    align_profiles, apply_script, profile_of, EditScript, GapModel, Op, Profile, SubstitutionModel,
};
use crate::seq::{Alignment, Alphabet, Sequence, GAP};

/// Profile and consensus extracted from one worker's local alignment.
#[derive(Debug, Clone)]
pub struct AncestorProfile {
    pub profile: Profile,
    pub consensus: Sequence,
    pub source_worker: usize,
}

/// Extract the ancestor of a local alignment: the full column profile plus
/// a consensus that keeps, for every column with gap frequency <= 0.5, the
/// most frequent residue (ties broken by alphabet order).
pub fn extract_ancestor(
    local: &Alignment,
    source_worker: usize,
    alphabet: &Alphabet,
) -> Result<AncestorProfile> {
    if local.is_empty() {
        return Err(Error::EmptyInput("local alignment"));
    }
    let profile = profile_of(local, alphabet)?;
    let depth = local.depth();
    let c = alphabet.len();
    let mut consensus = Vec::new();
    for col in 0..local.n_cols() {
        let mut counts = vec![0usize; c];
        let mut gaps = 0usize;
        for (_, row) in local.rows() {
            let b = row[col];
            if b == GAP {
                gaps += 1;
            } else {
                counts[alphabet.index_of(b).expect("validated by profile_of")] += 1;
            }
        }
        // Majority-gap columns stay in the profile but not the consensus.
        if 2 * gaps > depth {
            continue;
        }
        let best = counts
            .iter()
            .enumerate()
            .max_by(|(ia, ca), (ib, cb)| ca.cmp(cb).then(ib.cmp(ia)))
            .map(|(i, _)| i)
            .expect("alphabet is non-empty");
        consensus.push(alphabet.symbols()[best]);
    }
    if consensus.is_empty() {
        return Err(Error::EmptyConsensus);
    }
    let consensus = Sequence::new(format!("anc{source_worker}"), consensus, alphabet)?;
    Ok(AncestorProfile {
        profile,
        consensus,
        source_worker,
    })
}

/// Align all local-ancestor consensi into the global ancestor, folding
/// profiles in ascending source-bucket order, and return the alignment,
/// its profile, and the DP cells spent.
pub fn build_global_ancestor_with_stats(
    locals: &[AncestorProfile],
    model: &SubstitutionModel,
    gaps: &GapModel,
) -> Result<(Alignment, Profile, u64)> {
    if locals.is_empty() {
        return Err(Error::EmptyInput("local ancestors"));
    }
    let mut ordered: Vec<&AncestorProfile> = locals.iter().collect();
    ordered.sort_by_key(|a| a.source_worker);

    let alphabet = model.alphabet();
    let mut acc = Alignment::from_sequence(&ordered[0].consensus);
    let mut cells = 0u64;
    for anc in &ordered[1..] {
        let next = Alignment::from_sequence(&anc.consensus);
        let pa = profile_of(&acc, alphabet)?;
        let pb = profile_of(&next, alphabet)?;
        cells += (pa.n_cols() as u64) * (pb.n_cols() as u64);
        let (script, _) = align_profiles(&pa, &pb, model, gaps)?;
        acc = apply_script(&script, &acc, &next)?;
    }
    let profile = profile_of(&acc, alphabet)?;
    Ok((acc, profile, cells))
}

/// Align all local-ancestor consensi into the global ancestor.
pub fn build_global_ancestor(
    locals: &[AncestorProfile],
    model: &SubstitutionModel,
    gaps: &GapModel,
) -> Result<(Alignment, Profile)> {
    build_global_ancestor_with_stats(locals, model, gaps).map(|(a, p, _)| (a, p))
}

/// Profile-align a worker's local alignment against the global ancestor.
/// Returns the re-gapped alignment and the edit script expressing its
/// columns in ancestor coordinates (INS_B means an all-gap column was
/// inserted into the local alignment opposite an ancestor column).
pub fn fine_tune(
    local: &Alignment,
    global_ancestor: &Profile,
    model: &SubstitutionModel,
    gaps: &GapModel,
) -> Result<(Alignment, EditScript)> {
    let lp = profile_of(local, model.alphabet())?;
    let (script, _) = align_profiles(&lp, global_ancestor, model, gaps)?;
    let tuned = regap(local, &script)?;
    Ok((tuned, script))
}

/// Apply a script one-sided: local columns stream through MATCH/INS_A ops
/// and INS_B inserts an all-gap column.
fn regap(local: &Alignment, script: &EditScript) -> Result<Alignment> {
    if script.len_a() != local.n_cols() {
        return Err(Error::InconsistentScript(format!(
            "script covers {} local columns, alignment has {}",
            script.len_a(),
            local.n_cols()
        )));
    }
    let width = script.ops.len();
    let mut rows: Vec<(String, Vec<u8>)> = local
        .rows()
        .iter()
        .map(|(id, _)| (id.clone(), Vec::with_capacity(width)))
        .collect();
    let mut col = 0usize;
    for op in &script.ops {
        match op {
            Op::Match | Op::InsA => {
                for (r, (_, row)) in local.rows().iter().enumerate() {
                    rows[r].1.push(row[col]);
                }
                col += 1;
            }
            Op::InsB => {
                for row in rows.iter_mut() {
                    row.1.push(GAP);
                }
            }
        }
    }
    Alignment::new(rows)
}

/// The shared coordinate frame for gluing: ancestor column count, one
/// fine-tune script per participating worker (in worker order), and the
/// per-worker insertion tallies at every ancestor gap position.
#[derive(Debug, Clone)]
pub struct GlueFrame {
    ancestor_cols: usize,
    scripts: Vec<EditScript>,
    /// insertions[w][g] = columns worker w inserts at gap g, where gap g
    /// sits before ancestor column g (g == ancestor_cols is the tail).
    insertions: Vec<Vec<usize>>,
}

impl GlueFrame {
    pub fn new(ancestor_cols: usize, scripts: Vec<EditScript>) -> Result<Self> {
        let mut insertions = Vec::with_capacity(scripts.len());
        for script in &scripts {
            if script.len_b() != ancestor_cols {
                return Err(Error::InconsistentScript(format!(
                    "script covers {} ancestor columns, frame has {ancestor_cols}",
                    script.len_b()
                )));
            }
            let mut tally = vec![0usize; ancestor_cols + 1];
            let mut gap_pos = 0usize;
            for op in &script.ops {
                match op {
                    Op::InsA => tally[gap_pos] += 1,
                    Op::Match | Op::InsB => gap_pos += 1,
                }
            }
            insertions.push(tally);
        }
        Ok(GlueFrame {
            ancestor_cols,
            scripts,
            insertions,
        })
    }

    pub fn ancestor_cols(&self) -> usize {
        self.ancestor_cols
    }

    pub fn scripts(&self) -> &[EditScript] {
        &self.scripts
    }

    pub fn insertions(&self) -> &[Vec<usize>] {
        &self.insertions
    }

    /// Total insertion-region size at each gap position.
    fn region_sizes(&self) -> Vec<usize> {
        let mut regions = vec![0usize; self.ancestor_cols + 1];
        for tally in &self.insertions {
            for (g, n) in tally.iter().enumerate() {
                regions[g] += n;
            }
        }
        regions
    }

    /// Width of the glued alignment.
    pub fn width(&self) -> usize {
        self.ancestor_cols + self.region_sizes().iter().sum::<usize>()
    }
}

/// Merge all fine-tuned alignments into one global alignment over the
/// ancestor frame. Insertions from different workers at the same ancestor
/// gap are concatenated in worker order and padded with gaps elsewhere.
pub fn glue(frame: &GlueFrame, tuned: &[Alignment]) -> Result<Alignment> {
    if frame.scripts.len() != tuned.len() {
        return Err(Error::InconsistentScript(format!(
            "{} scripts for {} alignments",
            frame.scripts.len(),
            tuned.len()
        )));
    }
    for (script, aln) in frame.scripts.iter().zip(tuned) {
        if script.ops.len() != aln.n_cols() {
            return Err(Error::InconsistentScript(format!(
                "script length {} vs tuned width {}",
                script.ops.len(),
                aln.n_cols()
            )));
        }
    }

    let regions = frame.region_sizes();
    let width = frame.ancestor_cols + regions.iter().sum::<usize>();
    let n_workers = tuned.len();
    // Offset of each worker's insertions within every gap region.
    let mut offsets = vec![vec![0usize; frame.ancestor_cols + 1]; n_workers];
    for g in 0..=frame.ancestor_cols {
        let mut acc = 0usize;
        for w in 0..n_workers {
            offsets[w][g] = acc;
            acc += frame.insertions[w][g];
        }
    }

    let mut rows: Vec<(String, Vec<u8>)> = Vec::new();
    for (w, aln) in tuned.iter().enumerate() {
        // Map each script position to its role: the tuned column for every
        // ancestor column, and the tuned columns inserted at each gap.
        let script = &frame.scripts[w];
        let mut at_col = vec![usize::MAX; frame.ancestor_cols];
        let mut at_gap: Vec<Vec<usize>> = vec![Vec::new(); frame.ancestor_cols + 1];
        let mut gap_pos = 0usize;
        for (t, op) in script.ops.iter().enumerate() {
            match op {
                Op::InsA => at_gap[gap_pos].push(t),
                Op::Match | Op::InsB => {
                    at_col[gap_pos] = t;
                    gap_pos += 1;
                }
            }
        }
        for (id, row) in aln.rows() {
            let mut out = Vec::with_capacity(width);
            for g in 0..=frame.ancestor_cols {
                out.extend(std::iter::repeat_n(GAP, offsets[w][g]));
                for &t in &at_gap[g] {
                    out.push(row[t]);
                }
                let trailing = regions[g] - offsets[w][g] - frame.insertions[w][g];
                out.extend(std::iter::repeat_n(GAP, trailing));
                if g < frame.ancestor_cols {
                    out.push(row[at_col[g]]);
                }
            }
            rows.push((id.clone(), out));
        }
    }
    Alignment::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairwise::SubstitutionModel;
    use crate::seq::degap;

    fn alpha() -> Alphabet {
        Alphabet::protein()
    }

    fn model() -> SubstitutionModel {
        SubstitutionModel::unit(alpha())
    }

    fn aln(rows: &[(&str, &[u8])]) -> Alignment {
        Alignment::new(
            rows.iter()
                .map(|(id, r)| (id.to_string(), r.to_vec()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn consensus_of_unanimous_columns() {
        let anc = extract_ancestor(&aln(&[("a", b"AC"), ("b", b"AC")]), 0, &alpha()).unwrap();
        assert_eq!(anc.consensus.residues(), b"AC");
        assert_eq!(anc.profile.n_cols(), 2);
        assert_eq!(anc.source_worker, 0);
    }

    #[test]
    fn consensus_keeps_half_gap_columns() {
        // Column 1 has gap frequency exactly 0.5, which is not > 0.5.
        let anc = extract_ancestor(&aln(&[("a", b"A-"), ("b", b"AC")]), 1, &alpha()).unwrap();
        assert_eq!(anc.consensus.residues(), b"AC");
    }

    #[test]
    fn consensus_drops_majority_gap_columns() {
        let anc = extract_ancestor(
            &aln(&[("a", b"--A"), ("b", b"A--"), ("c", b"A-C")]),
            0,
            &alpha(),
        )
        .unwrap();
        // Column 0: 1 gap of 3 kept ('A'); column 1: all gaps dropped;
        // column 2: 1 gap of 3 kept ('A' vs 'C' count 1 each -> 'A' wins? no:
        // counts are A:1? column 2 is A,-,C -> one A... wait rows: a=--A, b=A--, c=A-C
        // col2: a='A', b='-', c='C' -> counts A:1 C:1, tie -> alphabet order 'A'.
        assert_eq!(anc.consensus.residues(), b"AA");
        assert_eq!(anc.profile.n_cols(), 3);
    }

    #[test]
    fn consensus_tie_breaks_by_alphabet_order() {
        let anc = extract_ancestor(&aln(&[("a", b"C"), ("b", b"A")]), 0, &alpha()).unwrap();
        assert_eq!(anc.consensus.residues(), b"A");
    }

    #[test]
    fn all_majority_gap_is_error() {
        let a = aln(&[("a", b"A--"), ("b", b"--C"), ("c", b"---")]);
        assert!(matches!(
            extract_ancestor(&a, 0, &alpha()),
            Err(Error::EmptyConsensus)
        ));
    }

    #[test]
    fn global_ancestor_of_one_local() {
        let anc = extract_ancestor(&aln(&[("x", b"ACD")]), 0, &alpha()).unwrap();
        let (aligned, profile) =
            build_global_ancestor(&[anc], &model(), &GapModel::default()).unwrap();
        assert_eq!(aligned.depth(), 1);
        assert_eq!(aligned.row_by_id("anc0").unwrap(), b"ACD");
        assert_eq!(profile.n_cols(), 3);
    }

    #[test]
    fn global_ancestor_of_identical_consensi() {
        let a0 = extract_ancestor(&aln(&[("x", b"ACD")]), 0, &alpha()).unwrap();
        let a1 = extract_ancestor(&aln(&[("y", b"ACD")]), 1, &alpha()).unwrap();
        let (aligned, _) =
            build_global_ancestor(&[a0, a1], &model(), &GapModel::default()).unwrap();
        assert_eq!(aligned.depth(), 2);
        assert_eq!(aligned.n_cols(), 3);
        assert_eq!(aligned.row_by_id("anc0").unwrap(), b"ACD");
        assert_eq!(aligned.row_by_id("anc1").unwrap(), b"ACD");
    }

    #[test]
    fn global_ancestor_gap_placement() {
        let a0 = extract_ancestor(&aln(&[("x", b"ACD")]), 0, &alpha()).unwrap();
        let a1 = extract_ancestor(&aln(&[("y", b"AD")]), 1, &alpha()).unwrap();
        let (aligned, _) =
            build_global_ancestor(&[a1, a0], &model(), &GapModel::default()).unwrap();
        // Added in ascending source order regardless of argument order.
        assert_eq!(aligned.row_by_id("anc0").unwrap(), b"ACD");
        assert_eq!(aligned.row_by_id("anc1").unwrap(), b"A-D");
    }

    #[test]
    fn fine_tune_identity() {
        let local = aln(&[("a", b"ACD"), ("b", b"ACD")]);
        let anc = profile_of(&local, &alpha()).unwrap();
        let (tuned, script) = fine_tune(&local, &anc, &model(), &GapModel::default()).unwrap();
        assert_eq!(tuned, local);
        assert_eq!(script.ops, vec![Op::Match; 3]);
    }

    #[test]
    fn fine_tune_shorter_local_gets_one_insertion() {
        let local = aln(&[("a", b"AD"), ("b", b"AD")]);
        let anc_aln = aln(&[("r", b"ACD")]);
        let anc = profile_of(&anc_aln, &alpha()).unwrap();
        let (tuned, script) = fine_tune(&local, &anc, &model(), &GapModel::default()).unwrap();
        let ins_b = script.ops.iter().filter(|o| **o == Op::InsB).count();
        assert_eq!(ins_b, 1);
        assert_eq!(tuned.n_cols(), 3);
        for (id, row) in tuned.rows() {
            assert_eq!(degap(row), degap(local.row_by_id(id).unwrap()));
        }
    }

    #[test]
    fn glue_single_worker_is_identity() {
        let local = aln(&[("a", b"AC-D"), ("b", b"ACDD")]);
        let anc = profile_of(&local, &alpha()).unwrap();
        let (tuned, script) = fine_tune(&local, &anc, &model(), &GapModel::default()).unwrap();
        let frame = GlueFrame::new(anc.n_cols(), vec![script]).unwrap();
        let glued = glue(&frame, std::slice::from_ref(&tuned)).unwrap();
        assert_eq!(glued, tuned);
    }

    #[test]
    fn glue_without_insertions_stacks_rows() {
        let ops = vec![Op::Match, Op::Match, Op::Match];
        let frame =
            GlueFrame::new(3, vec![EditScript { ops: ops.clone() }, EditScript { ops }]).unwrap();
        let t0 = aln(&[("a", b"ACD")]);
        let t1 = aln(&[("b", b"AGD")]);
        let glued = glue(&frame, &[t0, t1]).unwrap();
        assert_eq!(glued.n_cols(), 3);
        assert_eq!(glued.depth(), 2);
        assert_eq!(glued.row_by_id("a").unwrap(), b"ACD");
        assert_eq!(glued.row_by_id("b").unwrap(), b"AGD");
    }

    #[test]
    fn glue_concatenates_insertions_in_worker_order() {
        // Ancestor has 4 columns; worker 0 inserts one column after
        // ancestor column 2, worker 1 inserts two columns there.
        let s0 = EditScript {
            ops: vec![Op::Match, Op::Match, Op::Match, Op::InsA, Op::Match],
        };
        let s1 = EditScript {
            ops: vec![
                Op::Match,
                Op::Match,
                Op::Match,
                Op::InsA,
                Op::InsA,
                Op::Match,
            ],
        };
        let frame = GlueFrame::new(4, vec![s0, s1]).unwrap();
        assert_eq!(frame.width(), 7);
        let t0 = aln(&[("a", b"ACDEF")]);
        let t1 = aln(&[("b", b"ACDGHF")]);
        let glued = glue(&frame, &[t0, t1]).unwrap();
        assert_eq!(glued.n_cols(), 7);
        // Worker 0's insertion comes first, then worker 1's two columns.
        assert_eq!(glued.row_by_id("a").unwrap(), b"ACDE--F");
        assert_eq!(glued.row_by_id("b").unwrap(), b"ACD-GHF");
    }

    #[test]
    fn glue_rejects_mismatched_inputs() {
        let script = EditScript {
            ops: vec![Op::Match, Op::Match],
        };
        let frame = GlueFrame::new(2, vec![script]).unwrap();
        let wrong_width = aln(&[("a", b"ACD")]);
        assert!(matches!(
            glue(&frame, &[wrong_width]),
            Err(Error::InconsistentScript(_))
        ));
        let bad = EditScript {
            ops: vec![Op::Match],
        };
        assert!(matches!(
            GlueFrame::new(2, vec![bad]),
            Err(Error::InconsistentScript(_))
        ));
    }

    #[test]
    fn glue_width_matches_tally_formula() {
        let s0 = EditScript {
            ops: vec![Op::InsA, Op::Match, Op::InsB, Op::InsA],
        };
        let s1 = EditScript {
            ops: vec![Op::Match, Op::InsA, Op::Match],
        };
        let frame = GlueFrame::new(2, vec![s0, s1]).unwrap();
        let total_insertions: usize = frame
            .insertions()
            .iter()
            .map(|t| t.iter().sum::<usize>())
            .sum();
        assert_eq!(frame.width(), 2 + total_insertions);
        let t0 = aln(&[("a", b"AC-D")]);
        let t1 = aln(&[("b", b"AGD")]);
        let glued = glue(&frame, &[t0.clone(), t1.clone()]).unwrap();
        assert_eq!(glued.n_cols(), frame.width());
        for (id, row) in glued.rows() {
            let source = t0.row_by_id(id).or_else(|| t1.row_by_id(id)).unwrap();
            assert_eq!(degap(row), degap(source));
        }
    }
}

//! Pairwise and profile-profile global alignment with affine gaps.
//!
//! Scoring: substitution log-odds for residue pairs, the profile sum-of-pairs
//! score for column pairs (gap frequencies contribute no substitution term),
//! and a gap of length L costs open + L*extend. In the profile DP the gap
//! charge is scaled by the non-gap mass of the opposing column, so aligning
//! into an already gappy region is cheaper.
//!
//! The three-state DP (match / insert-in-A / insert-in-B) is exact for this
//! objective. Traceback ties prefer MATCH, then INS_A, then INS_B.

use crate::error::{Error, Result};
use crate::seq::{Alignment, Alphabet, GAP};

const SYM_EPS: f64 = 1e-9;

/// Residue substitution log-odds over an alphabet, plus background
/// probabilities. Bundled tables ship as log-odds directly.
#[derive(Debug, Clone)]
pub struct SubstitutionModel {
    name: String,
    alphabet: Alphabet,
    matrix: Vec<Vec<f64>>,
    background: Vec<f64>,
}

const PAM200_TEXT: &str = include_str!("../data/pam200.mat");
const VTML240_TEXT: &str = include_str!("../data/vtml240.mat");

// Dayhoff amino-acid frequencies, normalized at load time.
const DAYHOFF_FREQS: [(u8, f64); 20] = [
    (b'A', 0.087),
    (b'C', 0.033),
    (b'D', 0.047),
    (b'E', 0.050),
    (b'F', 0.040),
    (b'G', 0.089),
    (b'H', 0.034),
    (b'I', 0.037),
    (b'K', 0.081),
    (b'L', 0.085),
    (b'M', 0.015),
    (b'N', 0.040),
    (b'P', 0.051),
    (b'Q', 0.038),
    (b'R', 0.041),
    (b'S', 0.070),
    (b'T', 0.058),
    (b'V', 0.065),
    (b'W', 0.010),
    (b'Y', 0.030),
];

impl SubstitutionModel {
    /// Match +2 / mismatch -1 test matrix with uniform background.
    /// The wildcard, when present, scores 0 against everything.
    pub fn unit(alphabet: Alphabet) -> Self {
        let c = alphabet.len();
        let wild = alphabet.wildcard().and_then(|w| alphabet.index_of(w));
        let mut matrix = vec![vec![0.0; c]; c];
        for (i, row) in matrix.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = if Some(i) == wild || Some(j) == wild {
                    0.0
                } else if i == j {
                    2.0
                } else {
                    -1.0
                };
            }
        }
        let background = vec![1.0 / c as f64; c];
        SubstitutionModel {
            name: "unit".into(),
            alphabet,
            matrix,
            background,
        }
    }

    /// Bundled 200-distance point-accepted-mutation log-odds table.
    pub fn pam200(alphabet: &Alphabet) -> Result<Self> {
        Self::from_matrix_text("pam200", PAM200_TEXT, alphabet, true)
    }

    /// Bundled 240-distance log-odds table.
    pub fn vtml240(alphabet: &Alphabet) -> Result<Self> {
        Self::from_matrix_text("vtml240", VTML240_TEXT, alphabet, true)
    }

    /// Resolve one of the bundled model names: pam200, vtml240, unit.
    pub fn by_name(name: &str, alphabet: &Alphabet) -> Result<Self> {
        match name {
            "pam200" => Self::pam200(alphabet),
            "vtml240" => Self::vtml240(alphabet),
            "unit" => Ok(Self::unit(alphabet.clone())),
            other => Err(Error::Matrix(format!("unknown matrix '{other}'"))),
        }
    }

    /// Load a matrix from the text format: a header row of residue letters,
    /// then c rows of c reals. Lines starting with '#' are ignored. Letters
    /// of the target alphabet missing from the table are an error, except
    /// the wildcard which scores 0. Background probabilities default to
    /// uniform unless `dayhoff_background` is set.
    pub fn from_matrix_text(
        name: &str,
        text: &str,
        alphabet: &Alphabet,
        dayhoff_background: bool,
    ) -> Result<Self> {
        let (letters, table) = parse_matrix_text(text)?;
        let c = alphabet.len();
        let wild = alphabet.wildcard();
        let pos_of = |sym: u8| -> Result<usize> {
            letters
                .iter()
                .position(|&l| l == sym)
                .ok_or_else(|| Error::Matrix(format!("letter '{}' not in matrix", sym as char)))
        };
        let mut matrix = vec![vec![0.0; c]; c];
        for (row, &a) in matrix.iter_mut().zip(alphabet.symbols()) {
            for (cell, &b) in row.iter_mut().zip(alphabet.symbols()) {
                *cell = if Some(a) == wild || Some(b) == wild {
                    0.0
                } else {
                    table[pos_of(a)?][pos_of(b)?]
                };
            }
        }
        for i in 0..c {
            for j in 0..i {
                if (matrix[i][j] - matrix[j][i]).abs() > SYM_EPS {
                    return Err(Error::Matrix(format!(
                        "matrix '{name}' is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let background = if dayhoff_background {
            let mut bg: Vec<f64> = alphabet
                .symbols()
                .iter()
                .map(|&s| {
                    DAYHOFF_FREQS
                        .iter()
                        .find(|&&(l, _)| l == s)
                        .map_or(0.0, |&(_, f)| f)
                })
                .collect();
            let sum: f64 = bg.iter().sum();
            if sum <= 0.0 {
                return Err(Error::Matrix(format!(
                    "no background frequencies cover alphabet '{}'",
                    alphabet.name()
                )));
            }
            bg.iter_mut().for_each(|f| *f /= sum);
            bg
        } else {
            vec![1.0 / c as f64; c]
        };
        Ok(SubstitutionModel {
            name: name.into(),
            alphabet: alphabet.clone(),
            matrix,
            background,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    #[inline]
    pub fn score(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn score_residues(&self, a: u8, b: u8) -> Result<f64> {
        let ia = self.index_of(a)?;
        let ib = self.index_of(b)?;
        Ok(self.matrix[ia][ib])
    }

    pub fn background(&self) -> &[f64] {
        &self.background
    }

    fn index_of(&self, residue: u8) -> Result<usize> {
        self.alphabet.index_of(residue).ok_or_else(|| {
            Error::Matrix(format!(
                "residue '{}' not in model alphabet",
                residue as char
            ))
        })
    }
}

/// Parse the whitespace-separated matrix text format.
pub fn parse_matrix_text(text: &str) -> Result<(Vec<u8>, Vec<Vec<f64>>)> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Matrix("empty matrix text".into()))?;
    let letters: Vec<u8> = header
        .split_whitespace()
        .map(|tok| {
            let b = tok.as_bytes();
            if b.len() == 1 && b[0].is_ascii_alphabetic() {
                Ok(b[0].to_ascii_uppercase())
            } else {
                Err(Error::Matrix(format!("bad header token '{tok}'")))
            }
        })
        .collect::<Result<_>>()?;
    let c = letters.len();
    let mut table = Vec::with_capacity(c);
    for (r, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::Matrix(format!("bad value '{tok}' in row {r}")))
            })
            .collect::<Result<_>>()?;
        if row.len() != c {
            return Err(Error::Matrix(format!(
                "row {r} has {} values, expected {c}",
                row.len()
            )));
        }
        table.push(row);
    }
    if table.len() != c {
        return Err(Error::Matrix(format!(
            "expected {c} rows, got {}",
            table.len()
        )));
    }
    Ok((letters, table))
}

/// Affine gap penalties: a gap of length L costs open + L*extend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapModel {
    pub open: f64,
    pub extend: f64,
}

impl GapModel {
    pub fn new(open: f64, extend: f64) -> Result<Self> {
        if open > 0.0 || extend > 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gap penalties must be <= 0, got open={open} extend={extend}"
            )));
        }
        Ok(GapModel { open, extend })
    }

    /// Total cost of one gap run of the given length.
    pub fn run_cost(&self, len: usize) -> f64 {
        if len == 0 {
            0.0
        } else {
            self.open + len as f64 * self.extend
        }
    }
}

impl Default for GapModel {
    fn default() -> Self {
        GapModel {
            open: -3.0,
            extend: -0.5,
        }
    }
}

/// Per-column residue and gap frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileColumn {
    freqs: Vec<f64>,
    gap_freq: f64,
}

impl ProfileColumn {
    pub fn new(freqs: Vec<f64>, gap_freq: f64) -> Result<Self> {
        let sum: f64 = freqs.iter().sum::<f64>() + gap_freq;
        if (sum - 1.0).abs() > SYM_EPS || freqs.iter().any(|&f| f < 0.0) || gap_freq < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "profile column frequencies must be non-negative and sum to 1, got {sum}"
            )));
        }
        Ok(ProfileColumn { freqs, gap_freq })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn gap_freq(&self) -> f64 {
        self.gap_freq
    }

    /// Fraction of rows with a residue in this column.
    pub fn residue_mass(&self) -> f64 {
        1.0 - self.gap_freq
    }
}

/// Column-frequency summary of an alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    columns: Vec<ProfileColumn>,
    depth: usize,
}

impl Profile {
    pub fn new(columns: Vec<ProfileColumn>, depth: usize) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyInput("profile columns"));
        }
        if depth == 0 {
            return Err(Error::EmptyInput("profile depth"));
        }
        Ok(Profile { columns, depth })
    }

    pub fn columns(&self) -> &[ProfileColumn] {
        &self.columns
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

/// Per-column frequencies of an alignment: residue counts and gap count
/// divided by depth.
pub fn profile_of(alignment: &Alignment, alphabet: &Alphabet) -> Result<Profile> {
    if alignment.is_empty() {
        return Err(Error::EmptyInput("alignment"));
    }
    let depth = alignment.depth() as f64;
    let c = alphabet.len();
    let mut columns = Vec::with_capacity(alignment.n_cols());
    for col in 0..alignment.n_cols() {
        let mut freqs = vec![0.0; c];
        let mut gaps = 0usize;
        for (id, row) in alignment.rows() {
            let b = row[col];
            if b == GAP {
                gaps += 1;
            } else {
                let i = alphabet.index_of(b).ok_or_else(|| Error::InvalidSequence {
                    id: id.clone(),
                    msg: format!("residue '{}' outside alphabet", b as char),
                })?;
                freqs[i] += 1.0;
            }
        }
        freqs.iter_mut().for_each(|f| *f /= depth);
        columns.push(ProfileColumn {
            freqs,
            gap_freq: gaps as f64 / depth,
        });
    }
    Profile::new(columns, alignment.depth())
}

/// Profile sum-of-pairs score between two columns: the expected
/// substitution log-odds over the residue frequencies. Gap frequencies
/// contribute nothing.
pub fn psp_score(x: &ProfileColumn, y: &ProfileColumn, model: &SubstitutionModel) -> f64 {
    let mut total = 0.0;
    for (i, &fx) in x.freqs.iter().enumerate() {
        if fx == 0.0 {
            continue;
        }
        for (j, &fy) in y.freqs.iter().enumerate() {
            if fy == 0.0 {
                continue;
            }
            total += fx * fy * model.matrix[i][j];
        }
    }
    total
}

/// One step of a pairwise alignment of two column/residue streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    /// Consume one column of A and one of B.
    Match,
    /// Consume one column of A; B receives a gap.
    InsA,
    /// Consume one column of B; A receives a gap.
    InsB,
}

/// An alignment of two streams as a sequence of [`Op`]s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditScript {
    pub ops: Vec<Op>,
}

impl EditScript {
    pub fn len_a(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, Op::Match | Op::InsA))
            .count()
    }

    pub fn len_b(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, Op::Match | Op::InsB))
            .count()
    }

    pub fn check(&self, a_cols: usize, b_cols: usize) -> Result<()> {
        if self.len_a() != a_cols || self.len_b() != b_cols {
            return Err(Error::InconsistentScript(format!(
                "script covers {}x{} columns, inputs have {a_cols}x{b_cols}",
                self.len_a(),
                self.len_b()
            )));
        }
        Ok(())
    }
}

const M: usize = 0; // match state
const IA: usize = 1; // gap in B, consuming A
const IB: usize = 2; // gap in A, consuming B

/// Shared three-state affine DP. `sub(i, j)` scores pairing column i of A
/// with column j of B; `scale_a(i)` scales gap charges opposite A's column
/// i (1.0 for plain sequences), likewise `scale_b`.
fn affine_dp(
    n: usize,
    m: usize,
    sub: impl Fn(usize, usize) -> f64,
    scale_a: impl Fn(usize) -> f64,
    scale_b: impl Fn(usize) -> f64,
    gaps: &GapModel,
) -> (EditScript, f64) {
    let w = m + 1;
    let neg = f64::NEG_INFINITY;
    let mut score = vec![[neg; 3]; (n + 1) * w];
    let mut from = vec![[3u8; 3]; (n + 1) * w];

    score[0][M] = 0.0;
    for i in 1..=n {
        let s = scale_a(i - 1);
        let (prev_m, prev_x) = (score[(i - 1) * w][M], score[(i - 1) * w][IA]);
        let open_path = prev_m + (gaps.open + gaps.extend) * s;
        let ext_path = prev_x + gaps.extend * s;
        if open_path >= ext_path {
            score[i * w][IA] = open_path;
            from[i * w][IA] = M as u8;
        } else {
            score[i * w][IA] = ext_path;
            from[i * w][IA] = IA as u8;
        }
    }
    for j in 1..=m {
        let s = scale_b(j - 1);
        let (prev_m, prev_y) = (score[j - 1][M], score[j - 1][IB]);
        let open_path = prev_m + (gaps.open + gaps.extend) * s;
        let ext_path = prev_y + gaps.extend * s;
        if open_path >= ext_path {
            score[j][IB] = open_path;
            from[j][IB] = M as u8;
        } else {
            score[j][IB] = ext_path;
            from[j][IB] = IB as u8;
        }
    }

    // Tie-break: candidate states are considered in priority order
    // M, IA, IB and replaced only on strict improvement.
    let pick = |cands: [f64; 3]| -> (usize, f64) {
        let mut best = 0;
        for s in 1..3 {
            if cands[s] > cands[best] {
                best = s;
            }
        }
        (best, cands[best])
    };

    for i in 1..=n {
        for j in 1..=m {
            let here = i * w + j;
            let diag = &score[(i - 1) * w + (j - 1)];
            let sub_ij = sub(i - 1, j - 1);
            let (src, best) = pick([diag[M], diag[IA], diag[IB]]);
            score[here][M] = best + sub_ij;
            from[here][M] = src as u8;

            let sa = scale_a(i - 1);
            let up = &score[(i - 1) * w + j];
            let (src, best) = pick([
                up[M] + (gaps.open + gaps.extend) * sa,
                up[IA] + gaps.extend * sa,
                up[IB] + (gaps.open + gaps.extend) * sa,
            ]);
            score[here][IA] = best;
            from[here][IA] = src as u8;

            let sb = scale_b(j - 1);
            let left = &score[i * w + (j - 1)];
            let (src, best) = pick([
                left[M] + (gaps.open + gaps.extend) * sb,
                left[IA] + (gaps.open + gaps.extend) * sb,
                left[IB] + gaps.extend * sb,
            ]);
            score[here][IB] = best;
            from[here][IB] = src as u8;
        }
    }

    let end = n * w + m;
    let (mut state, total) = pick(score[end]);
    let mut ops = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let prev = from[i * w + j][state] as usize;
        match state {
            M => {
                ops.push(Op::Match);
                i -= 1;
                j -= 1;
            }
            IA => {
                ops.push(Op::InsA);
                i -= 1;
            }
            _ => {
                ops.push(Op::InsB);
                j -= 1;
            }
        }
        state = prev;
    }
    ops.reverse();
    (EditScript { ops }, total)
}

/// Optimal global alignment of two residue strings under substitution
/// scores plus affine gap costs.
pub fn align_pair(
    a: &[u8],
    b: &[u8],
    model: &SubstitutionModel,
    gaps: &GapModel,
) -> Result<(EditScript, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("align_pair sequence"));
    }
    let ia: Vec<usize> = a
        .iter()
        .map(|&r| model.index_of(r))
        .collect::<Result<_>>()?;
    let ib: Vec<usize> = b
        .iter()
        .map(|&r| model.index_of(r))
        .collect::<Result<_>>()?;
    Ok(affine_dp(
        a.len(),
        b.len(),
        |i, j| model.matrix[ia[i]][ib[j]],
        |_| 1.0,
        |_| 1.0,
        gaps,
    ))
}

/// Optimal global column-level alignment of two profiles under the
/// profile sum-of-pairs score plus gap-mass-scaled affine gap costs.
pub fn align_profiles(
    x: &Profile,
    y: &Profile,
    model: &SubstitutionModel,
    gaps: &GapModel,
) -> Result<(EditScript, f64)> {
    if x.columns.is_empty() || y.columns.is_empty() {
        return Err(Error::EmptyInput("align_profiles profile"));
    }
    Ok(affine_dp(
        x.n_cols(),
        y.n_cols(),
        |i, j| psp_score(&x.columns[i], &y.columns[j], model),
        |i| x.columns[i].residue_mass(),
        |j| y.columns[j].residue_mass(),
        gaps,
    ))
}

/// Merge two alignments along an edit script: INS_A inserts an all-gap
/// column into B's rows and vice versa. Rows of A precede rows of B.
pub fn apply_script(script: &EditScript, a: &Alignment, b: &Alignment) -> Result<Alignment> {
    script.check(a.n_cols(), b.n_cols())?;
    let width = script.ops.len();
    let mut rows: Vec<(String, Vec<u8>)> = Vec::with_capacity(a.depth() + b.depth());
    for (id, _) in a.rows().iter().chain(b.rows()) {
        rows.push((id.clone(), Vec::with_capacity(width)));
    }
    let a_depth = a.depth();
    let (mut ai, mut bi) = (0usize, 0usize);
    for op in &script.ops {
        let (take_a, take_b) = match op {
            Op::Match => (true, true),
            Op::InsA => (true, false),
            Op::InsB => (false, true),
        };
        for (r, (_, row)) in a.rows().iter().enumerate() {
            rows[r].1.push(if take_a { row[ai] } else { GAP });
        }
        for (r, (_, row)) in b.rows().iter().enumerate() {
            rows[a_depth + r].1.push(if take_b { row[bi] } else { GAP });
        }
        if take_a {
            ai += 1;
        }
        if take_b {
            bi += 1;
        }
    }
    Alignment::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::Sequence;
    use proptest::prelude::*;

    const EPS: f64 = 1e-10;

    fn unit_dna() -> SubstitutionModel {
        SubstitutionModel::unit(Alphabet::dna())
    }

    fn unit_protein() -> SubstitutionModel {
        SubstitutionModel::unit(Alphabet::protein())
    }

    fn gaps() -> GapModel {
        GapModel::default()
    }

    fn aln(rows: &[(&str, &[u8])]) -> Alignment {
        Alignment::new(
            rows.iter()
                .map(|(id, r)| (id.to_string(), r.to_vec()))
                .collect(),
        )
        .unwrap()
    }

    fn pure_column(alphabet: &Alphabet, residue: u8) -> ProfileColumn {
        let mut freqs = vec![0.0; alphabet.len()];
        freqs[alphabet.index_of(residue).unwrap()] = 1.0;
        ProfileColumn::new(freqs, 0.0).unwrap()
    }

    #[test]
    fn psp_pure_columns_collapse_to_matrix_entry() {
        let model = unit_dna();
        let a = pure_column(model.alphabet(), b'A');
        assert!((psp_score(&a, &a, &model) - 2.0).abs() < EPS);
    }

    #[test]
    fn psp_gap_column_scores_zero() {
        let model = unit_dna();
        let gap_col = ProfileColumn::new(vec![0.0; 4], 1.0).unwrap();
        let a = pure_column(model.alphabet(), b'A');
        assert_eq!(psp_score(&gap_col, &a, &model), 0.0);
        assert_eq!(psp_score(&gap_col, &gap_col, &model), 0.0);
    }

    #[test]
    fn psp_mixed_column_hand_expansion() {
        let model = unit_dna();
        let alpha = model.alphabet();
        let mut freqs = vec![0.0; 4];
        freqs[alpha.index_of(b'A').unwrap()] = 0.5;
        freqs[alpha.index_of(b'C').unwrap()] = 0.5;
        let x = ProfileColumn::new(freqs, 0.0).unwrap();
        let y = pure_column(alpha, b'A');
        // 0.5*m[A][A] + 0.5*m[C][A] = 0.5*2 - 0.5 = 0.5
        assert!((psp_score(&x, &y, &model) - 0.5).abs() < EPS);
    }

    #[test]
    fn psp_is_symmetric() {
        let model = unit_dna();
        let alpha = model.alphabet();
        let mut f1 = vec![0.0; 4];
        f1[0] = 0.25;
        f1[2] = 0.5;
        let x = ProfileColumn::new(f1, 0.25).unwrap();
        let y = pure_column(alpha, b'G');
        assert!((psp_score(&x, &y, &model) - psp_score(&y, &x, &model)).abs() < EPS);
    }

    #[test]
    fn align_pair_identical() {
        let model = unit_dna();
        let (script, score) = align_pair(b"AA", b"AA", &model, &gaps()).unwrap();
        assert_eq!(script.ops, vec![Op::Match, Op::Match]);
        assert!((score - 4.0).abs() < EPS);
    }

    #[test]
    fn align_pair_empty_is_error() {
        let model = unit_dna();
        assert!(matches!(
            align_pair(b"A", b"", &model, &gaps()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn align_pair_single_insertion() {
        // AC vs C: best is one leading insertion then a match.
        let model = unit_dna();
        let (script, score) = align_pair(b"AC", b"C", &model, &gaps()).unwrap();
        assert_eq!(script.ops, vec![Op::InsA, Op::Match]);
        assert!((score - -1.5).abs() < EPS);
    }

    #[test]
    fn align_pair_prefers_match_on_ties() {
        // A vs A with zero-diagonal scoring would tie with gap routes under
        // some penalties; the unit model makes MATCH strictly best, so use a
        // crafted tie: score(A,C) = -1 vs InsA+InsB = -3.5-3.5; match wins.
        let model = unit_dna();
        let (script, _) = align_pair(b"A", b"C", &model, &gaps()).unwrap();
        assert_eq!(script.ops, vec![Op::Match]);
    }

    #[test]
    fn align_pair_brute_force_small() {
        // Exhaustive oracle over all global alignments, lengths <= 3.
        fn enumerate(i: usize, j: usize, a: &[u8], b: &[u8]) -> Vec<Vec<Op>> {
            let mut out = Vec::new();
            if i == a.len() && j == b.len() {
                out.push(Vec::new());
                return out;
            }
            if i < a.len() && j < b.len() {
                for mut rest in enumerate(i + 1, j + 1, a, b) {
                    rest.insert(0, Op::Match);
                    out.push(rest);
                }
            }
            if i < a.len() {
                for mut rest in enumerate(i + 1, j, a, b) {
                    rest.insert(0, Op::InsA);
                    out.push(rest);
                }
            }
            if j < b.len() {
                for mut rest in enumerate(i, j + 1, a, b) {
                    rest.insert(0, Op::InsB);
                    out.push(rest);
                }
            }
            out
        }
        let model = unit_dna();
        let g = gaps();
        let score_script = |ops: &[Op], a: &[u8], b: &[u8]| -> f64 {
            let (mut i, mut j, mut total) = (0usize, 0usize, 0.0);
            let mut run: Option<(Op, usize)> = None;
            for &op in ops {
                match op {
                    Op::Match => {
                        if let Some((_, len)) = run.take() {
                            total += g.run_cost(len);
                        }
                        total += model.score_residues(a[i], b[j]).unwrap();
                        i += 1;
                        j += 1;
                    }
                    gap_op => {
                        match run {
                            Some((kind, len)) if kind == gap_op => run = Some((kind, len + 1)),
                            Some((_, len)) => {
                                total += g.run_cost(len);
                                run = Some((gap_op, 1));
                            }
                            None => run = Some((gap_op, 1)),
                        }
                        if gap_op == Op::InsA {
                            i += 1;
                        } else {
                            j += 1;
                        }
                    }
                }
            }
            if let Some((_, len)) = run {
                total += g.run_cost(len);
            }
            total
        };
        let symbols = b"ACGT";
        let mut cases = Vec::new();
        for la in 1..=3usize {
            for lb in 1..=3usize {
                for pa in 0..4usize.pow(la as u32) {
                    for pb in 0..4usize.pow(lb as u32) {
                        let a: Vec<u8> = (0..la).map(|d| symbols[(pa >> (2 * d)) & 3]).collect();
                        let b: Vec<u8> = (0..lb).map(|d| symbols[(pb >> (2 * d)) & 3]).collect();
                        cases.push((a, b));
                    }
                }
            }
        }
        for (a, b) in cases {
            let (_, dp_score) = align_pair(&a, &b, &model, &g).unwrap();
            let best = enumerate(0, 0, &a, &b)
                .iter()
                .map(|ops| score_script(ops, &a, &b))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(
                (dp_score - best).abs() < EPS,
                "dp={dp_score} brute={best} for {:?} vs {:?}",
                String::from_utf8_lossy(&a),
                String::from_utf8_lossy(&b)
            );
        }
    }

    #[test]
    fn profile_of_hand_counts() {
        let alpha = Alphabet::dna();
        let a = aln(&[("a", b"A-"), ("b", b"AC")]);
        let p = profile_of(&a, &alpha).unwrap();
        assert_eq!(p.depth(), 2);
        let col0 = &p.columns()[0];
        assert!((col0.freqs()[alpha.index_of(b'A').unwrap()] - 1.0).abs() < EPS);
        assert_eq!(col0.gap_freq(), 0.0);
        let col1 = &p.columns()[1];
        assert!((col1.freqs()[alpha.index_of(b'C').unwrap()] - 0.5).abs() < EPS);
        assert!((col1.gap_freq() - 0.5).abs() < EPS);
    }

    #[test]
    fn profile_of_single_row_and_all_gap_column() {
        let alpha = Alphabet::dna();
        let single = profile_of(&aln(&[("a", b"AC")]), &alpha).unwrap();
        assert_eq!(single.n_cols(), 2);
        assert_eq!(single.columns()[0].gap_freq(), 0.0);
        assert_eq!(single.columns()[1].gap_freq(), 0.0);

        let padded = profile_of(&aln(&[("a", b"A-"), ("b", b"C-")]), &alpha).unwrap();
        assert!((padded.columns()[1].gap_freq() - 1.0).abs() < EPS);
    }

    #[test]
    fn align_profiles_identity_is_all_match() {
        let alpha = Alphabet::protein();
        let model = unit_protein();
        let a = aln(&[("a", b"ACD")]);
        let p = profile_of(&a, &alpha).unwrap();
        let (script, score) = align_profiles(&p, &p, &model, &gaps()).unwrap();
        assert_eq!(script.ops, vec![Op::Match; 3]);
        let expected: f64 = p.columns().iter().map(|c| psp_score(c, c, &model)).sum();
        assert!((score - expected).abs() < EPS);
    }

    #[test]
    fn align_profiles_matches_pairwise_on_single_rows() {
        let alpha = Alphabet::dna();
        let model = unit_dna();
        let g = gaps();
        let a = Sequence::new("a", b"ACCGT".to_vec(), &alpha).unwrap();
        let b = Sequence::new("b", b"ACGT".to_vec(), &alpha).unwrap();
        let pa = profile_of(&Alignment::from_sequence(&a), &alpha).unwrap();
        let pb = profile_of(&Alignment::from_sequence(&b), &alpha).unwrap();
        let (ps, pscore) = align_profiles(&pa, &pb, &model, &g).unwrap();
        let (ss, sscore) = align_pair(a.residues(), b.residues(), &model, &g).unwrap();
        assert_eq!(ps, ss);
        assert!((pscore - sscore).abs() < EPS);
    }

    #[test]
    fn align_profiles_insertion_example() {
        let alpha = Alphabet::protein();
        let model = unit_protein();
        let x = profile_of(&aln(&[("a", b"AC")]), &alpha).unwrap();
        let y = profile_of(&aln(&[("b", b"C")]), &alpha).unwrap();
        let (script, score) = align_profiles(&x, &y, &model, &gaps()).unwrap();
        assert_eq!(script.ops, vec![Op::InsA, Op::Match]);
        assert!((score - -1.5).abs() < EPS);
    }

    #[test]
    fn apply_script_all_match_concatenates() {
        let a = aln(&[("a", b"AC")]);
        let b = aln(&[("b", b"GT")]);
        let script = EditScript {
            ops: vec![Op::Match, Op::Match],
        };
        let merged = apply_script(&script, &a, &b).unwrap();
        assert_eq!(merged.depth(), 2);
        assert_eq!(merged.row_by_id("a").unwrap(), b"AC");
        assert_eq!(merged.row_by_id("b").unwrap(), b"GT");
    }

    #[test]
    fn apply_script_inconsistent_is_error() {
        // The script consumes two A columns but a has only one.
        let a = aln(&[("a", b"A")]);
        let b = aln(&[("b", b"G")]);
        let script = EditScript {
            ops: vec![Op::InsA, Op::Match],
        };
        assert!(matches!(
            apply_script(&script, &a, &b),
            Err(Error::InconsistentScript(_))
        ));
    }

    #[test]
    fn apply_script_inserts_gap_columns() {
        let a = aln(&[("a", b"AC")]);
        let b = aln(&[("b", b"C")]);
        let script = EditScript {
            ops: vec![Op::InsA, Op::Match],
        };
        let merged = apply_script(&script, &a, &b).unwrap();
        assert_eq!(merged.row_by_id("a").unwrap(), b"AC");
        assert_eq!(merged.row_by_id("b").unwrap(), b"-C");
    }

    #[test]
    fn bundled_matrices_load() {
        let alpha = Alphabet::protein();
        for name in ["pam200", "vtml240"] {
            let model = SubstitutionModel::by_name(name, &alpha).unwrap();
            assert_eq!(model.alphabet().len(), 20);
            let bg_sum: f64 = model.background().iter().sum();
            assert!((bg_sum - 1.0).abs() < 1e-9);
            for i in 0..20 {
                for j in 0..20 {
                    assert_eq!(model.score(i, j), model.score(j, i));
                }
                // Diagonal of a log-odds table is positive.
                assert!(model.score(i, i) > 0.0);
            }
        }
        // Spot values from the shipped pam200 table.
        let pam = SubstitutionModel::pam200(&alpha).unwrap();
        assert_eq!(pam.score_residues(b'A', b'A').unwrap(), 3.0);
        assert_eq!(pam.score_residues(b'W', b'W').unwrap(), 18.0);
        assert_eq!(pam.score_residues(b'C', b'C').unwrap(), 12.0);
    }

    #[test]
    fn matrix_text_rejects_ragged_input() {
        assert!(parse_matrix_text("A C\n1 2\n3").is_err());
        assert!(parse_matrix_text("").is_err());
        assert!(SubstitutionModel::by_name("nope", &Alphabet::dna()).is_err());
    }

    #[test]
    fn wildcard_scores_zero() {
        let alpha = Alphabet::protein().with_wildcard(b'X').unwrap();
        let model = SubstitutionModel::pam200(&alpha).unwrap();
        assert_eq!(model.score_residues(b'X', b'A').unwrap(), 0.0);
        assert_eq!(model.score_residues(b'X', b'X').unwrap(), 0.0);
        let unit = SubstitutionModel::unit(alpha);
        assert_eq!(unit.score_residues(b'X', b'X').unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn apply_script_preserves_rows(
            a_cols in 1usize..6,
            b_cols in 1usize..6,
            seed in 0u64..500,
        ) {
            use rand::prelude::*;
            use rand_chacha::ChaCha8Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let symbols = b"ACGT";
            let mut mk_row = |len: usize| -> Vec<u8> {
                (0..len).map(|_| symbols[rng.gen_range(0..4)]).collect()
            };
            let a = aln(&[("a0", &mk_row(a_cols)), ("a1", &mk_row(a_cols))]);
            let b = aln(&[("b0", &mk_row(b_cols))]);
            // Random valid script: shuffle the required op multiset while
            // keeping per-stream consumption counts exact.
            let matches = rng.gen_range(0..=a_cols.min(b_cols));
            let mut ops = Vec::new();
            ops.extend(std::iter::repeat_n(Op::Match, matches));
            ops.extend(std::iter::repeat_n(Op::InsA, a_cols - matches));
            ops.extend(std::iter::repeat_n(Op::InsB, b_cols - matches));
            ops.shuffle(&mut rng);
            let script = EditScript { ops };
            let merged = apply_script(&script, &a, &b).unwrap();
            prop_assert_eq!(merged.depth(), 3);
            prop_assert_eq!(merged.n_cols(), script.ops.len());
            for (id, row) in a.rows().iter().chain(b.rows()) {
                let merged_row = merged.row_by_id(id).unwrap();
                prop_assert_eq!(crate::seq::degap(merged_row), crate::seq::degap(row));
            }
        }
    }
}

//! Core sequence and alignment types plus FASTA I/O.
//!
//! A [`Sequence`] is an ungapped residue string over an [`Alphabet`]; an
//! [`Alignment`] is a set of equal-length gapped rows that degap back to
//! their input sequences. Everything here is immutable after construction.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// The gap character used throughout.
pub const GAP: u8 = b'-';

const FASTA_WRAP: usize = 60;

/// An ordered residue alphabet. Residues are uppercase ASCII bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    name: String,
    symbols: Vec<u8>,
    index: [i16; 256],
    wildcard: Option<u8>,
}

impl Alphabet {
    pub fn new(name: &str, symbols: &[u8]) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::InvalidAlphabet(format!(
                "need at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        let mut index = [-1i16; 256];
        for (i, &s) in symbols.iter().enumerate() {
            if s == GAP {
                return Err(Error::InvalidAlphabet(
                    "gap character cannot be a residue symbol".into(),
                ));
            }
            if index[s as usize] >= 0 {
                return Err(Error::InvalidAlphabet(format!(
                    "duplicate symbol '{}'",
                    s as char
                )));
            }
            index[s as usize] = i as i16;
        }
        Ok(Alphabet {
            name: name.to_string(),
            symbols: symbols.to_vec(),
            index,
            wildcard: None,
        })
    }

    /// The 20 standard amino acids, alphabetical.
    pub fn protein() -> Self {
        Alphabet::new("protein", b"ACDEFGHIKLMNPQRSTVWY").unwrap()
    }

    /// Four-letter nucleotide alphabet.
    pub fn dna() -> Self {
        Alphabet::new("dna", b"ACGT").unwrap()
    }

    /// Extend the alphabet with a wildcard residue. Parsers map unknown
    /// letters onto it and scoring models give it score 0 against everything.
    pub fn with_wildcard(mut self, wildcard: u8) -> Result<Self> {
        if self.contains(wildcard) || wildcard == GAP {
            return Err(Error::InvalidAlphabet(format!(
                "wildcard '{}' clashes with an existing symbol",
                wildcard as char
            )));
        }
        self.index[wildcard as usize] = self.symbols.len() as i16;
        self.symbols.push(wildcard);
        self.wildcard = Some(wildcard);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of residue symbols (c).
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn wildcard(&self) -> Option<u8> {
        self.wildcard
    }

    #[inline]
    pub fn index_of(&self, residue: u8) -> Option<usize> {
        let i = self.index[residue as usize];
        (i >= 0).then_some(i as usize)
    }

    #[inline]
    pub fn contains(&self, residue: u8) -> bool {
        self.index[residue as usize] >= 0
    }
}

/// A named, ungapped residue string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    id: String,
    residues: Vec<u8>,
}

impl Sequence {
    /// Build a sequence, validating every residue against the alphabet.
    pub fn new(id: impl Into<String>, residues: Vec<u8>, alphabet: &Alphabet) -> Result<Self> {
        let id = id.into();
        if residues.is_empty() {
            return Err(Error::EmptyRecord(id));
        }
        for &r in &residues {
            if !alphabet.contains(r) {
                return Err(Error::InvalidSequence {
                    id,
                    msg: format!("residue '{}' outside alphabet", r as char),
                });
            }
        }
        Ok(Sequence { id, residues })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn residues(&self) -> &[u8] {
        &self.residues
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            ">{} {}",
            self.id,
            String::from_utf8_lossy(&self.residues)
        )
    }
}

/// Remove all gap characters, preserving residue order.
pub fn degap(row: &[u8]) -> Vec<u8> {
    row.iter().copied().filter(|&b| b != GAP).collect()
}

/// A set of equal-length gapped rows keyed by sequence id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    rows: Vec<(String, Vec<u8>)>,
    n_cols: usize,
}

impl Alignment {
    /// Build an alignment, checking equal row lengths and unique ids.
    /// An empty row set is a valid (empty) alignment.
    pub fn new(rows: Vec<(String, Vec<u8>)>) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |(_, r)| r.len());
        let mut seen = HashSet::new();
        for (id, row) in &rows {
            if row.len() != n_cols {
                return Err(Error::RaggedAlignment {
                    id: id.clone(),
                    len: row.len(),
                    expected: n_cols,
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Alignment { rows, n_cols })
    }

    /// One-row, gap-free alignment of a single sequence.
    pub fn from_sequence(seq: &Sequence) -> Self {
        Alignment {
            n_cols: seq.len(),
            rows: vec![(seq.id().to_string(), seq.residues().to_vec())],
        }
    }

    pub fn rows(&self) -> &[(String, Vec<u8>)] {
        &self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of rows.
    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row_by_id(&self, id: &str) -> Option<&[u8]> {
        self.rows
            .iter()
            .find(|(rid, _)| rid == id)
            .map(|(_, r)| r.as_slice())
    }

    /// Check that this alignment covers exactly the given input sequences:
    /// every id present once and every row degapping to its input residues.
    pub fn validate_against(&self, seqs: &[Sequence]) -> Result<()> {
        for seq in seqs {
            let row = self
                .row_by_id(seq.id())
                .ok_or_else(|| Error::MissingId(seq.id().to_string()))?;
            if degap(row) != seq.residues() {
                return Err(Error::ResidueMismatch(seq.id().to_string()));
            }
        }
        if self.rows.len() != seqs.len() {
            let extra = self
                .rows
                .iter()
                .find(|(id, _)| seqs.iter().all(|s| s.id() != id))
                .map(|(id, _)| id.clone())
                .unwrap_or_default();
            return Err(Error::UnexpectedId(extra));
        }
        Ok(())
    }
}

enum ParseMode {
    Strict,
    Gapped,
}

struct RawRecord {
    id: String,
    body: Vec<u8>,
}

fn parse_records(text: &str, alphabet: &Alphabet, mode: ParseMode) -> Result<Vec<RawRecord>> {
    let mut records: Vec<RawRecord> = Vec::new();
    let mut seen = HashSet::new();
    let mut open: Option<(usize, RawRecord)> = None;

    let close = |rec: Option<(usize, RawRecord)>, out: &mut Vec<RawRecord>| -> Result<()> {
        if let Some((_, rec)) = rec {
            if rec.body.is_empty() {
                return Err(Error::EmptyRecord(rec.id));
            }
            out.push(rec);
        }
        Ok(())
    };

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix('>') {
            close(open.take(), &mut records)?;
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(Error::Fasta {
                    line: lineno,
                    msg: "header has no id".into(),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId(id));
            }
            open = Some((
                lineno,
                RawRecord {
                    id,
                    body: Vec::new(),
                },
            ));
        } else {
            let Some((_, rec)) = open.as_mut() else {
                return Err(Error::Fasta {
                    line: lineno,
                    msg: "sequence data before first '>' header".into(),
                });
            };
            for &b in trimmed.as_bytes() {
                let b = b.to_ascii_uppercase();
                if b == GAP {
                    match mode {
                        ParseMode::Gapped => rec.body.push(GAP),
                        ParseMode::Strict => {
                            return Err(Error::Fasta {
                                line: lineno,
                                msg: format!("gap character in ungapped input: '{line}'"),
                            })
                        }
                    }
                } else if alphabet.contains(b) {
                    rec.body.push(b);
                } else if b.is_ascii_alphabetic() && alphabet.wildcard().is_some() {
                    rec.body.push(alphabet.wildcard().unwrap());
                } else {
                    return Err(Error::Fasta {
                        line: lineno,
                        msg: format!("residue '{}' outside alphabet: '{line}'", b as char),
                    });
                }
            }
        }
    }
    close(open.take(), &mut records)?;
    Ok(records)
}

/// Parse ungapped FASTA. Ids are the header token up to the first
/// whitespace; residues are uppercased; gap characters are rejected.
pub fn parse_fasta(text: &str, alphabet: &Alphabet) -> Result<Vec<Sequence>> {
    parse_records(text, alphabet, ParseMode::Strict)?
        .into_iter()
        .map(|rec| Sequence::new(rec.id, rec.body, alphabet))
        .collect()
}

/// Parse gapped (aligned) FASTA into an [`Alignment`].
pub fn parse_fasta_alignment(text: &str, alphabet: &Alphabet) -> Result<Alignment> {
    let rows = parse_records(text, alphabet, ParseMode::Gapped)?
        .into_iter()
        .map(|rec| (rec.id, rec.body))
        .collect();
    Alignment::new(rows)
}

fn write_wrapped(out: &mut String, id: &str, body: &[u8]) {
    out.push('>');
    out.push_str(id);
    out.push('\n');
    for chunk in body.chunks(FASTA_WRAP) {
        out.push_str(std::str::from_utf8(chunk).expect("residues are ASCII"));
        out.push('\n');
    }
}

/// Serialize an alignment as gapped FASTA, 60 columns per line.
pub fn write_fasta(alignment: &Alignment) -> String {
    let mut out = String::new();
    for (id, row) in alignment.rows() {
        write_wrapped(&mut out, id, row);
    }
    out
}

/// Serialize ungapped sequences as FASTA, 60 columns per line.
pub fn write_fasta_seqs(seqs: &[Sequence]) -> String {
    let mut out = String::new();
    for seq in seqs {
        write_wrapped(&mut out, seq.id(), seq.residues());
    }
    out
}

//! The built-in progressive aligner: UPGMA guide tree over k-mer distances,
//! then profile-profile merges along the tree. Also the pluggable aligner
//! interface and the external-command escape hatch.
//!
//! Guide-tree construction and merge order are tie-broken on lexicographic
//! leaf ids, so the output is independent of input order.

use std::collections::HashSet;
use std::io::Write;
use std::process::{Command, Stdio};

use crate::error::{Error, Result};
use crate::kmer::{count_kmers, kmer_distance, KmerParams, KmerVector};
use crate::pairwise::{align_profiles, apply_script, profile_of, GapModel, SubstitutionModel};
use crate::seq::{parse_fasta_alignment, write_fasta_seqs, Alignment, Sequence};

/// A node of the guide tree. Children always precede their parent in the
/// node list, so index order is a valid evaluation order.
#[derive(Debug, Clone)]
pub enum GuideNode {
    Leaf {
        id: String,
    },
    Internal {
        left: usize,
        right: usize,
        height: f64,
    },
}

/// Binary guide tree with leaves labeled by sequence id.
#[derive(Debug, Clone)]
pub struct GuideTree {
    nodes: Vec<GuideNode>,
    root: usize,
}

impl GuideTree {
    pub fn nodes(&self) -> &[GuideNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, GuideNode::Leaf { .. }))
            .count()
    }

    pub fn leaf_ids(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                GuideNode::Leaf { id } => Some(id.as_str()),
                GuideNode::Internal { .. } => None,
            })
            .collect()
    }
}

/// Pairwise k-mer distance matrix. Each unordered pair is evaluated once;
/// the number of evaluations is n(n-1)/2.
pub fn distance_matrix(vectors: &[KmerVector], params: &KmerParams) -> Result<Vec<Vec<f64>>> {
    let n = vectors.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = kmer_distance(&vectors[i], &vectors[j], params)?;
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    Ok(d)
}

/// UPGMA clustering over the pairwise k-mer distance matrix. Ties on the
/// minimal distance pick the pair with the lexicographically smallest
/// (min id, max id) of the clusters' representative leaf ids.
pub fn build_guide_tree(seqs: &[Sequence], params: &KmerParams) -> Result<GuideTree> {
    if seqs.is_empty() {
        return Err(Error::EmptyInput("guide tree sequences"));
    }
    let vectors: Vec<KmerVector> = seqs.iter().map(|s| count_kmers(s, params.k())).collect();
    let dist = distance_matrix(&vectors, params)?;
    build_guide_tree_from_matrix(seqs, &dist)
}

pub(crate) fn build_guide_tree_from_matrix(
    seqs: &[Sequence],
    dist: &[Vec<f64>],
) -> Result<GuideTree> {
    let n = seqs.len();
    let mut nodes: Vec<GuideNode> = seqs
        .iter()
        .map(|s| GuideNode::Leaf {
            id: s.id().to_string(),
        })
        .collect();
    if n == 1 {
        return Ok(GuideTree { nodes, root: 0 });
    }

    struct Cluster {
        node: usize,
        size: usize,
        rep: String,
    }
    let mut clusters: Vec<Option<Cluster>> = seqs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Some(Cluster {
                node: i,
                size: 1,
                rep: s.id().to_string(),
            })
        })
        .collect();
    let mut d = dist.to_vec();

    for _ in 0..(n - 1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            let Some(ci) = clusters[i].as_ref() else {
                continue;
            };
            for j in (i + 1)..n {
                let Some(cj) = clusters[j].as_ref() else {
                    continue;
                };
                let key = if ci.rep <= cj.rep {
                    (ci.rep.as_str(), cj.rep.as_str())
                } else {
                    (cj.rep.as_str(), ci.rep.as_str())
                };
                let better = match &best {
                    None => true,
                    Some((bi, bj, bd)) => {
                        if d[i][j] != *bd {
                            d[i][j] < *bd
                        } else {
                            let (cbi, cbj) = (
                                clusters[*bi].as_ref().unwrap(),
                                clusters[*bj].as_ref().unwrap(),
                            );
                            let bkey = if cbi.rep <= cbj.rep {
                                (cbi.rep.as_str(), cbj.rep.as_str())
                            } else {
                                (cbj.rep.as_str(), cbi.rep.as_str())
                            };
                            key < bkey
                        }
                    }
                };
                if better {
                    best = Some((i, j, d[i][j]));
                }
            }
        }
        let (i, j, dij) = best.expect("at least two active clusters");
        let (ci, cj) = (clusters[i].take().unwrap(), clusters[j].take().unwrap());
        // Lexicographically smaller representative becomes the left child.
        let (left, right, rep) = if ci.rep <= cj.rep {
            (ci.node, cj.node, ci.rep.clone())
        } else {
            (cj.node, ci.node, cj.rep.clone())
        };
        nodes.push(GuideNode::Internal {
            left,
            right,
            height: dij / 2.0,
        });
        let merged = Cluster {
            node: nodes.len() - 1,
            size: ci.size + cj.size,
            rep,
        };
        // Average linkage update.
        let (si, sj) = (ci.size as f64, cj.size as f64);
        for k in 0..n {
            if k == i || clusters[k].is_none() {
                continue;
            }
            let nd = (si * d[i][k] + sj * d[j][k]) / (si + sj);
            d[i][k] = nd;
            d[k][i] = nd;
        }
        clusters[i] = Some(merged);
    }

    let root = clusters
        .iter()
        .flatten()
        .map(|c| c.node)
        .next()
        .expect("one cluster remains");
    Ok(GuideTree { nodes, root })
}

/// Progressive alignment along a guide tree, with the DP cell count of the
/// profile merges.
pub fn progressive_align_with_stats(
    seqs: &[Sequence],
    tree: &GuideTree,
    model: &SubstitutionModel,
    gaps: &GapModel,
) -> Result<(Alignment, u64)> {
    let input_ids: HashSet<&str> = seqs.iter().map(|s| s.id()).collect();
    let tree_ids: HashSet<&str> = tree.leaf_ids().into_iter().collect();
    if input_ids != tree_ids || seqs.len() != tree.leaf_count() {
        return Err(Error::TreeMismatch(format!(
            "{} leaves vs {} sequences",
            tree.leaf_count(),
            seqs.len()
        )));
    }
    let by_id: std::collections::HashMap<&str, &Sequence> =
        seqs.iter().map(|s| (s.id(), s)).collect();

    let mut partial: Vec<Option<Alignment>> = vec![None; tree.nodes().len()];
    let mut cells = 0u64;
    for (idx, node) in tree.nodes().iter().enumerate() {
        let aligned = match node {
            GuideNode::Leaf { id } => Alignment::from_sequence(by_id[id.as_str()]),
            GuideNode::Internal { left, right, .. } => {
                let la = partial[*left].take().expect("children precede parents");
                let ra = partial[*right].take().expect("children precede parents");
                let lp = profile_of(&la, model.alphabet())?;
                let rp = profile_of(&ra, model.alphabet())?;
                cells += (lp.n_cols() as u64) * (rp.n_cols() as u64);
                let (script, _) = align_profiles(&lp, &rp, model, gaps)?;
                apply_script(&script, &la, &ra)?
            }
        };
        partial[idx] = Some(aligned);
    }
    Ok((partial[tree.root()].take().unwrap(), cells))
}

/// Progressive alignment along a guide tree.
pub fn progressive_align(
    seqs: &[Sequence],
    tree: &GuideTree,
    model: &SubstitutionModel,
    gaps: &GapModel,
) -> Result<Alignment> {
    progressive_align_with_stats(seqs, tree, model, gaps).map(|(a, _)| a)
}

/// Work counters reported by an aligner run.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlignerStats {
    pub dp_cells: u64,
    pub kmer_evals: u64,
}

/// An alignment plus the work spent producing it.
#[derive(Debug, Clone)]
pub struct AlignedSet {
    pub alignment: Alignment,
    pub stats: AlignerStats,
}

/// The sequential multiple-alignment capability each worker runs.
pub trait Aligner: Send + Sync {
    fn align(&self, seqs: &[Sequence]) -> Result<AlignedSet>;
}

/// Guide-tree + progressive profile merging.
#[derive(Debug, Clone)]
pub struct BuiltinAligner {
    pub model: SubstitutionModel,
    pub gaps: GapModel,
    pub kmer: KmerParams,
}

impl Aligner for BuiltinAligner {
    fn align(&self, seqs: &[Sequence]) -> Result<AlignedSet> {
        if seqs.is_empty() {
            return Err(Error::EmptyInput("aligner sequences"));
        }
        if seqs.len() == 1 {
            return Ok(AlignedSet {
                alignment: Alignment::from_sequence(&seqs[0]),
                stats: AlignerStats::default(),
            });
        }
        let tree = build_guide_tree(seqs, &self.kmer)?;
        let kmer_evals = (seqs.len() * (seqs.len() - 1) / 2) as u64;
        let (alignment, dp_cells) =
            progressive_align_with_stats(seqs, &tree, &self.model, &self.gaps)?;
        Ok(AlignedSet {
            alignment,
            stats: AlignerStats {
                dp_cells,
                kmer_evals,
            },
        })
    }
}

/// Run an external alignment command: FASTA on stdin (or via an `{in}`
/// file placeholder), aligned FASTA on stdout, exit code 0 on success.
#[derive(Debug, Clone)]
pub struct ExternalAligner {
    pub command: String,
    pub alphabet: crate::seq::Alphabet,
}

impl Aligner for ExternalAligner {
    fn align(&self, seqs: &[Sequence]) -> Result<AlignedSet> {
        external_align(seqs, &self.command, &self.alphabet).map(|alignment| AlignedSet {
            alignment,
            stats: AlignerStats::default(),
        })
    }
}

/// Invoke `command` through the shell and validate its output against the
/// input sequences. All failure modes surface as external-aligner errors.
pub fn external_align(
    seqs: &[Sequence],
    command: &str,
    alphabet: &crate::seq::Alphabet,
) -> Result<Alignment> {
    if seqs.is_empty() {
        return Err(Error::EmptyInput("aligner sequences"));
    }
    let fasta = write_fasta_seqs(seqs);

    let mut tempfile_guard = None;
    let (cmd, use_stdin) = if command.contains("{in}") {
        let mut tmp = tempfile::NamedTempFile::new()?;
        tmp.write_all(fasta.as_bytes())?;
        tmp.flush()?;
        let path = tmp.path().to_string_lossy().into_owned();
        tempfile_guard = Some(tmp);
        (command.replace("{in}", &path), false)
    } else {
        (command.to_string(), true)
    };

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .stdin(if use_stdin {
            Stdio::piped()
        } else {
            Stdio::null()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::ExternalAligner(format!("failed to spawn '{cmd}': {e}")))?;
    if use_stdin {
        child
            .stdin
            .take()
            .expect("stdin was piped")
            .write_all(fasta.as_bytes())?;
    }
    let output = child
        .wait_with_output()
        .map_err(|e| Error::ExternalAligner(format!("failed to wait for '{cmd}': {e}")))?;
    drop(tempfile_guard);

    if !output.status.success() {
        return Err(Error::ExternalAligner(format!(
            "'{cmd}' exited with {}: {}",
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    let text = String::from_utf8_lossy(&output.stdout);
    let alignment = parse_fasta_alignment(&text, alphabet)
        .map_err(|e| Error::ExternalAligner(format!("invalid output of '{cmd}': {e}")))?;
    alignment
        .validate_against(seqs)
        .map_err(|e| Error::ExternalAligner(format!("invalid output of '{cmd}': {e}")))?;
    Ok(alignment)
}

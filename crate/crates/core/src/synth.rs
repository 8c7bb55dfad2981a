//! Synthetic sequence generator with a known true alignment: a random
//! root sequence evolved along a balanced binary tree with per-site
//! substitutions and geometric-length indels. Every site carries a column
//! key; the union of leaf site orders is acyclic, so a deterministic
//! topological sort yields the true multiple alignment.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seq::{Alignment, Alphabet, Sequence, GAP};

/// Evolution parameters. Substitution and indel probabilities are per
/// site per branch, scaled by `tree_depth_scale` as a divergence proxy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveParams {
    pub root_len: usize,
    pub n_seqs: usize,
    pub sub_rate: f64,
    pub indel_rate: f64,
    pub mean_indel_len: f64,
    pub tree_depth_scale: f64,
    pub seed: u64,
}

impl EvolveParams {
    pub fn validate(&self) -> Result<()> {
        if self.root_len < 1 {
            return Err(Error::InvalidConfig("root_len must be >= 1".into()));
        }
        if self.n_seqs < 1 {
            return Err(Error::InvalidConfig("n_seqs must be >= 1".into()));
        }
        for (name, rate) in [("sub_rate", self.sub_rate), ("indel_rate", self.indel_rate)] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be in [0, 1), got {rate}"
                )));
            }
        }
        if self.mean_indel_len < 1.0 {
            return Err(Error::InvalidConfig("mean_indel_len must be >= 1".into()));
        }
        if self.tree_depth_scale <= 0.0 {
            return Err(Error::InvalidConfig("tree_depth_scale must be > 0".into()));
        }
        Ok(())
    }

    fn effective_sub(&self) -> f64 {
        (self.sub_rate * self.tree_depth_scale).min(0.99)
    }

    fn effective_indel(&self) -> f64 {
        (self.indel_rate * self.tree_depth_scale).min(0.99)
    }
}

impl Default for EvolveParams {
    fn default() -> Self {
        EvolveParams {
            root_len: 100,
            n_seqs: 16,
            sub_rate: 0.05,
            indel_rate: 0.02,
            mean_indel_len: 2.0,
            tree_depth_scale: 1.0,
            seed: 0,
        }
    }
}

/// A residue carrying its homology column key.
#[derive(Debug, Clone, Copy)]
struct Site {
    col: u64,
    residue: u8,
}

struct Evolver<'a> {
    params: EvolveParams,
    alphabet: &'a Alphabet,
    rng: ChaCha8Rng,
    next_col: u64,
    leaves: Vec<Vec<Site>>,
}

impl<'a> Evolver<'a> {
    fn random_residue(&mut self) -> u8 {
        let c = self.alphabet.len();
        self.alphabet.symbols()[self.rng.gen_range(0..c)]
    }

    /// Geometric length on {1, 2, ...} with the configured mean.
    fn indel_len(&mut self) -> usize {
        let q = 1.0 / self.params.mean_indel_len;
        if q >= 1.0 {
            return 1;
        }
        let u: f64 = self.rng.gen();
        ((1.0 - u).ln() / (1.0 - q).ln()).ceil().max(1.0) as usize
    }

    fn fresh_site(&mut self) -> Site {
        let col = self.next_col;
        self.next_col += 1;
        Site {
            col,
            residue: self.random_residue(),
        }
    }

    /// One branch of evolution: substitutions, then indels.
    fn mutate(&mut self, parent: &[Site]) -> Vec<Site> {
        let sub = self.params.effective_sub();
        let indel = self.params.effective_indel();
        let c = self.alphabet.len();
        let mut sites: Vec<Site> = parent
            .iter()
            .map(|&s| {
                if self.rng.gen::<f64>() < sub {
                    let old = self.alphabet.index_of(s.residue).expect("valid residue");
                    let new = (old + 1 + self.rng.gen_range(0..c - 1)) % c;
                    Site {
                        col: s.col,
                        residue: self.alphabet.symbols()[new],
                    }
                } else {
                    s
                }
            })
            .collect();

        let mut out: Vec<Site> = Vec::with_capacity(sites.len());
        let mut i = 0usize;
        while i < sites.len() {
            if self.rng.gen::<f64>() < indel {
                let len = self.indel_len();
                if self.rng.gen_bool(0.5) {
                    // Insertion after the current site.
                    out.push(sites[i]);
                    for _ in 0..len {
                        let site = self.fresh_site();
                        out.push(site);
                    }
                } else {
                    // Deletion of up to `len` sites starting here.
                    i += len.min(sites.len() - i) - 1;
                }
            } else {
                out.push(sites[i]);
            }
            i += 1;
        }
        if out.is_empty() {
            // A sequence must keep at least one residue.
            out.push(sites[sites.len() - 1]);
        }
        sites = out;
        sites
    }

    /// Evolve a subtree with `n` leaves below the given node sequence.
    fn evolve(&mut self, node: Vec<Site>, n: usize) {
        if n == 1 {
            self.leaves.push(node);
            return;
        }
        let left = n.div_ceil(2);
        let left_child = self.mutate(&node);
        self.evolve(left_child, left);
        let right_child = self.mutate(&node);
        self.evolve(right_child, n - left);
    }
}

/// Generate `n_seqs` sequences and their true alignment.
pub fn generate(params: &EvolveParams, alphabet: &Alphabet) -> Result<(Vec<Sequence>, Alignment)> {
    params.validate()?;
    let mut evolver = Evolver {
        params: *params,
        alphabet,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        next_col: 0,
        leaves: Vec::new(),
    };
    let root: Vec<Site> = (0..params.root_len).map(|_| evolver.fresh_site()).collect();
    evolver.evolve(root, params.n_seqs);
    let leaves = std::mem::take(&mut evolver.leaves);

    let order = column_order(&leaves);
    let col_index: HashMap<u64, usize> = order.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    let mut seqs = Vec::with_capacity(leaves.len());
    let mut rows = Vec::with_capacity(leaves.len());
    for (i, leaf) in leaves.iter().enumerate() {
        let id = format!("s{i}");
        let residues: Vec<u8> = leaf.iter().map(|s| s.residue).collect();
        seqs.push(Sequence::new(id.clone(), residues, alphabet)?);
        let mut row = vec![GAP; order.len()];
        for site in leaf {
            row[col_index[&site.col]] = site.residue;
        }
        rows.push((id, row));
    }
    let alignment = Alignment::new(rows)?;
    Ok((seqs, alignment))
}

/// Total column order consistent with every leaf's site order: Kahn's
/// algorithm over the union of adjacency constraints, smallest column key
/// first among the ready set.
fn column_order(leaves: &[Vec<Site>]) -> Vec<u64> {
    let mut nodes: HashSet<u64> = HashSet::new();
    let mut edges: HashSet<(u64, u64)> = HashSet::new();
    for leaf in leaves {
        for site in leaf {
            nodes.insert(site.col);
        }
        for pair in leaf.windows(2) {
            edges.insert((pair[0].col, pair[1].col));
        }
    }
    let mut succ: HashMap<u64, Vec<u64>> = HashMap::new();
    let mut indegree: HashMap<u64, usize> = nodes.iter().map(|&n| (n, 0)).collect();
    for &(a, b) in &edges {
        succ.entry(a).or_default().push(b);
        *indegree.get_mut(&b).unwrap() += 1;
    }
    let mut ready: BinaryHeap<Reverse<u64>> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| Reverse(n))
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(Reverse(n)) = ready.pop() {
        order.push(n);
        if let Some(next) = succ.get(&n) {
            for &m in next {
                let d = indegree.get_mut(&m).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(Reverse(m));
                }
            }
        }
    }
    debug_assert_eq!(order.len(), nodes.len(), "leaf orders form a DAG");
    order
}

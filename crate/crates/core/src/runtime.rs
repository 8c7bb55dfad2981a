//! The distributed pipeline over p logical in-process workers.
//!
//! Workers share no state: every inter-worker data flow is an explicit
//! [`MessageRecord`] in the [`CostLedger`], sized by the payload's wire
//! encoding (length-prefixed strings, 8-byte reals, 1-byte script ops).
//! Stages run concurrently across workers where the algorithm allows, but
//! all results are collected in worker order, so scheduling never changes
//! the output: a fixed config gives a bit-identical alignment and counters.
//!
//! Pipeline: round-robin distribution; local k-mer ranks and sort; evenly
//! spaced sample selection and all-to-all sample broadcast; re-ranking
//! against the global sample; regular-sampling pivots at the root and
//! bucket redistribution; per-worker alignment; ancestor extraction,
//! global-ancestor construction and broadcast; per-worker fine-tuning; and
//! the final glue at the root. With one worker the ranking stage still
//! runs (its cost is part of the accounting) but sampling, redistribution,
//! fine-tuning and gluing are bypassed.

use std::time::Instant;

use rayon::prelude::*;

use crate::ancestor::{
    build_global_ancestor_with_stats, extract_ancestor, fine_tune, glue, AncestorProfile, GlueFrame,
};
use crate::error::{Error, Result};
use crate::kmer::{count_kmers, kmer_rank, rank_against_sample, KmerParams, KmerVector};
use crate::pairwise::{EditScript, GapModel, Profile, SubstitutionModel};
use crate::partition::{assign_buckets, choose_local_samples, select_pivots, PivotSet, RankedSeq};
use crate::progressive::{Aligner, BuiltinAligner, ExternalAligner};
use crate::seq::{Alignment, Alphabet, Sequence};

/// Which sequential aligner each worker runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlignerChoice {
    Builtin,
    /// Shell command template; FASTA on stdin (or `{in}` file), aligned
    /// FASTA on stdout.
    External(String),
}

/// Full pipeline configuration. A fixed config yields a fully
/// deterministic run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub workers: usize,
    pub kmer: KmerParams,
    /// Per-worker global-sample size (the paper-default is p-1).
    pub sample_k: usize,
    pub gaps: GapModel,
    pub matrix: String,
    pub alphabet: Alphabet,
    pub seed: u64,
    pub aligner: AlignerChoice,
}

impl RunConfig {
    /// Defaults for a given worker count: k = 5, delta = 0.02,
    /// sample_k = max(1, p-1), pam200 over the protein alphabet.
    pub fn with_workers(workers: usize) -> Self {
        RunConfig {
            workers,
            kmer: KmerParams::default(),
            sample_k: workers.saturating_sub(1).max(1),
            gaps: GapModel::default(),
            matrix: "pam200".into(),
            alphabet: Alphabet::protein(),
            seed: 0,
            aligner: AlignerChoice::Builtin,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers < 1 {
            return Err(Error::InvalidConfig("need at least 1 worker".into()));
        }
        if self.sample_k < 1 {
            return Err(Error::InvalidConfig("sample_k must be >= 1".into()));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<SubstitutionModel> {
        SubstitutionModel::by_name(&self.matrix, &self.alphabet)
    }

    fn make_aligner(&self, model: &SubstitutionModel) -> Box<dyn Aligner> {
        match &self.aligner {
            AlignerChoice::Builtin => Box::new(BuiltinAligner {
                model: model.clone(),
                gaps: self.gaps,
                kmer: self.kmer,
            }),
            AlignerChoice::External(command) => Box::new(ExternalAligner {
                command: command.clone(),
                alphabet: self.alphabet.clone(),
            }),
        }
    }
}

/// Payload kinds of the worker message contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    SampleSeqs,
    Pivots,
    SeqBatch,
    LocalAncestor,
    GlobalAncestor,
    TunedAlignment,
}

impl PayloadKind {
    pub fn name(&self) -> &'static str {
        match self {
            PayloadKind::SampleSeqs => "SAMPLE_SEQS",
            PayloadKind::Pivots => "PIVOTS",
            PayloadKind::SeqBatch => "SEQ_BATCH",
            PayloadKind::LocalAncestor => "LOCAL_ANCESTOR",
            PayloadKind::GlobalAncestor => "GLOBAL_ANCESTOR",
            PayloadKind::TunedAlignment => "TUNED_ALIGNMENT",
        }
    }
}

/// One logged inter-worker transfer.
#[derive(Debug, Clone)]
pub struct MessageRecord {
    pub from: usize,
    pub to: usize,
    pub kind: PayloadKind,
    pub bytes: usize,
    /// Stage tag; the paper's communication round 1 covers the
    /// "local-rank" and "pivot-select" stages, round 2 is "redistribute".
    pub round: &'static str,
}

/// Per-stage, per-worker operation counters.
#[derive(Debug, Clone)]
pub struct StageRecord {
    pub stage: &'static str,
    pub cells: Vec<u64>,
    pub kmer_evals: Vec<u64>,
    pub wall_ms: f64,
}

/// Complete cost accounting of one pipeline run.
#[derive(Debug, Clone, Default)]
pub struct CostLedger {
    pub p: usize,
    stages: Vec<StageRecord>,
    messages: Vec<MessageRecord>,
}

pub const ROUND1_STAGES: [&str; 2] = ["local-rank", "pivot-select"];
pub const ROUND2_STAGES: [&str; 1] = ["redistribute"];

impl CostLedger {
    fn new(p: usize) -> Self {
        CostLedger {
            p,
            stages: Vec::new(),
            messages: Vec::new(),
        }
    }

    fn push_stage(&mut self, stage: StageRecord) {
        self.stages.push(stage);
    }

    fn log(
        &mut self,
        from: usize,
        to: usize,
        kind: PayloadKind,
        bytes: usize,
        round: &'static str,
    ) {
        self.messages.push(MessageRecord {
            from,
            to,
            kind,
            bytes,
            round,
        });
    }

    pub fn stages(&self) -> &[StageRecord] {
        &self.stages
    }

    pub fn messages(&self) -> &[MessageRecord] {
        &self.messages
    }

    pub fn kmer_evals_in(&self, stage: &str) -> u64 {
        self.stages
            .iter()
            .filter(|s| s.stage == stage)
            .map(|s| s.kmer_evals.iter().sum::<u64>())
            .sum()
    }

    pub fn cells_in(&self, stage: &str) -> u64 {
        self.stages
            .iter()
            .filter(|s| s.stage == stage)
            .map(|s| s.cells.iter().sum::<u64>())
            .sum()
    }

    pub fn total_kmer_evals(&self) -> u64 {
        self.stages
            .iter()
            .map(|s| s.kmer_evals.iter().sum::<u64>())
            .sum()
    }

    pub fn total_cells(&self) -> u64 {
        self.stages
            .iter()
            .map(|s| s.cells.iter().sum::<u64>())
            .sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.messages.iter().map(|m| m.bytes as u64).sum()
    }

    pub fn bytes_in(&self, round: &str) -> u64 {
        self.messages
            .iter()
            .filter(|m| m.round == round)
            .map(|m| m.bytes as u64)
            .sum()
    }

    pub fn round1_bytes(&self) -> u64 {
        ROUND1_STAGES.iter().map(|s| self.bytes_in(s)).sum()
    }

    pub fn round2_bytes(&self) -> u64 {
        ROUND2_STAGES.iter().map(|s| self.bytes_in(s)).sum()
    }

    pub fn total_wall_ms(&self) -> f64 {
        self.stages.iter().map(|s| s.wall_ms).sum()
    }

    /// CSV report: one row per (stage, worker) with cells, k-mer distance
    /// evaluations, bytes sent, and the stage wall time.
    pub fn report(&self) -> String {
        let mut out = String::from("stage,worker,cells,kmer_evals,bytes_sent,wall_ms\n");
        for stage in &self.stages {
            for w in 0..self.p {
                let bytes: u64 = self
                    .messages
                    .iter()
                    .filter(|m| m.round == stage.stage && m.from == w)
                    .map(|m| m.bytes as u64)
                    .sum();
                out.push_str(&format!(
                    "{},{},{},{},{},{:.3}\n",
                    stage.stage, w, stage.cells[w], stage.kmer_evals[w], bytes, stage.wall_ms
                ));
            }
        }
        out
    }
}

// Wire sizes: 4-byte length prefixes, 1 byte per residue/op, 8 bytes per real.
fn seq_bytes(s: &Sequence) -> usize {
    8 + s.id().len() + s.len()
}

fn seqs_bytes(seqs: &[Sequence]) -> usize {
    4 + seqs.iter().map(seq_bytes).sum::<usize>()
}

fn alignment_bytes(a: &Alignment) -> usize {
    4 + a
        .rows()
        .iter()
        .map(|(id, row)| 8 + id.len() + row.len())
        .sum::<usize>()
}

fn script_bytes(s: &EditScript) -> usize {
    4 + s.ops.len()
}

fn profile_bytes(p: &Profile) -> usize {
    let c = p.columns().first().map_or(0, |col| col.freqs().len());
    4 + p.n_cols() * (c + 1) * 8
}

fn ranks_bytes(n: usize) -> usize {
    4 + 8 * n
}

fn ancestor_bytes(a: &AncestorProfile) -> usize {
    4 + profile_bytes(&a.profile) + seq_bytes(&a.consensus)
}

/// A logical worker's private data between stages.
struct Worker {
    pool: Vec<Sequence>,
    vectors: Vec<KmerVector>,
    ranks: Vec<f64>,
}

impl Worker {
    fn ranked(&self, index: usize) -> Vec<RankedSeq> {
        self.pool
            .iter()
            .zip(&self.ranks)
            .map(|(s, &r)| RankedSeq {
                id: s.id().to_string(),
                rank: r,
                home_worker: index,
            })
            .collect()
    }

    /// Sort pool, vectors and ranks together by (rank, id).
    fn sort_by_rank(&mut self) {
        let mut order: Vec<usize> = (0..self.pool.len()).collect();
        order.sort_by(|&a, &b| {
            self.ranks[a]
                .partial_cmp(&self.ranks[b])
                .expect("ranks are finite")
                .then_with(|| self.pool[a].id().cmp(self.pool[b].id()))
        });
        self.pool = order.iter().map(|&i| self.pool[i].clone()).collect();
        self.vectors = order.iter().map(|&i| self.vectors[i].clone()).collect();
        self.ranks = order.iter().map(|&i| self.ranks[i]).collect();
    }
}

/// Where one sequence ended up and the ranks that sent it there.
#[derive(Debug, Clone)]
pub struct SeqPlacement {
    pub id: String,
    pub home_worker: usize,
    pub local_rank: f64,
    pub global_rank: f64,
    pub bucket: usize,
}

/// Outcome of the decomposition stages: redistributed pools plus the
/// intermediate quantities the partition-inspect report exposes.
pub struct Decomposition {
    pub pools: Vec<Vec<Sequence>>,
    pub rows: Vec<SeqPlacement>,
    /// (source worker, id) of each global-sample member, in worker order.
    pub samples: Vec<(usize, String)>,
    pub pivots: Vec<f64>,
    pub bucket_sizes: Vec<usize>,
}

fn round_robin(seqs: &[Sequence], p: usize) -> Vec<Vec<Sequence>> {
    let mut pools: Vec<Vec<Sequence>> = vec![Vec::new(); p];
    for (i, s) in seqs.iter().enumerate() {
        pools[i % p].push(s.clone());
    }
    pools
}

/// Local-rank stage: per-worker mean-distance ranks over the local
/// pool (N_w^2 distance evaluations) and the rank sort.
fn local_rank_stage(
    workers: &mut [Worker],
    config: &RunConfig,
    ledger: &mut CostLedger,
) -> Result<()> {
    let t = Instant::now();
    let kmer = config.kmer;
    // With a single worker the ranks are still computed (their cost is
    // part of the accounting) but the pool keeps its input order, so an
    // order-sensitive aligner sees exactly what a direct run would.
    let reorder = workers.len() > 1;
    let evals: Vec<u64> = workers
        .par_iter_mut()
        .map(|w| {
            w.vectors = w.pool.iter().map(|s| count_kmers(s, kmer.k())).collect();
            w.ranks = (0..w.vectors.len())
                .map(|i| kmer_rank(i, &w.vectors, &kmer))
                .collect::<Result<_>>()?;
            if reorder {
                w.sort_by_rank();
            }
            Ok((w.pool.len() as u64) * (w.pool.len() as u64))
        })
        .collect::<Result<_>>()?;
    ledger.push_stage(StageRecord {
        stage: "local-rank",
        cells: vec![0; workers.len()],
        kmer_evals: evals,
        wall_ms: t.elapsed().as_secs_f64() * 1e3,
    });
    Ok(())
}

/// Sample-selection half of round 1: evenly spaced samples from every
/// sorted pool, broadcast all-to-all. Returns the global sample, identical
/// on every worker.
fn sample_broadcast(
    workers: &[Worker],
    config: &RunConfig,
    ledger: &mut CostLedger,
) -> Result<Vec<(usize, Sequence)>> {
    let mut global_sample = Vec::new();
    for (w, worker) in workers.iter().enumerate() {
        if worker.pool.is_empty() {
            continue;
        }
        let count = config.sample_k.min(worker.pool.len());
        let ids = choose_local_samples(&worker.ranked(w), count)?;
        let picked: Vec<Sequence> = ids
            .iter()
            .map(|id| {
                worker
                    .pool
                    .iter()
                    .find(|s| s.id() == id)
                    .expect("sample ids come from the pool")
                    .clone()
            })
            .collect();
        let bytes = seqs_bytes(&picked);
        for v in 0..workers.len() {
            if v != w {
                ledger.log(w, v, PayloadKind::SampleSeqs, bytes, "local-rank");
            }
        }
        global_sample.extend(picked.into_iter().map(|s| (w, s)));
    }
    Ok(global_sample)
}

/// Re-rank every sequence against the global sample.
fn re_rank_stage(
    workers: &mut [Worker],
    global_sample: &[(usize, Sequence)],
    config: &RunConfig,
    ledger: &mut CostLedger,
) -> Result<()> {
    let t = Instant::now();
    let kmer = config.kmer;
    let sample_vectors: Vec<KmerVector> = global_sample
        .iter()
        .map(|(_, s)| count_kmers(s, kmer.k()))
        .collect();
    let evals: Vec<u64> = workers
        .par_iter_mut()
        .map(|w| {
            w.ranks = w
                .vectors
                .iter()
                .map(|v| rank_against_sample(v, &sample_vectors, &kmer))
                .collect::<Result<_>>()?;
            w.sort_by_rank();
            Ok((w.pool.len() * sample_vectors.len()) as u64)
        })
        .collect::<Result<_>>()?;
    ledger.push_stage(StageRecord {
        stage: "re-rank",
        cells: vec![0; workers.len()],
        kmer_evals: evals,
        wall_ms: t.elapsed().as_secs_f64() * 1e3,
    });
    Ok(())
}

/// Pivot half of round 1: regular samples' ranks gathered at the root,
/// pivot selection, pivot broadcast.
fn pivot_stage(workers: &[Worker], ledger: &mut CostLedger) -> Result<PivotSet> {
    let t = Instant::now();
    let p = workers.len();
    let mut gathered: Vec<f64> = Vec::new();
    for (w, worker) in workers.iter().enumerate() {
        if worker.pool.is_empty() {
            continue;
        }
        let count = (p - 1).min(worker.pool.len());
        let ranked = worker.ranked(w);
        let ids = choose_local_samples(&ranked, count)?;
        let ranks: Vec<f64> = ids
            .iter()
            .map(|id| ranked.iter().find(|r| &r.id == id).unwrap().rank)
            .collect();
        if w != 0 {
            ledger.log(
                w,
                0,
                PayloadKind::Pivots,
                ranks_bytes(ranks.len()),
                "pivot-select",
            );
        }
        gathered.extend(ranks);
    }
    let pivots = if gathered.len() == p * (p - 1) {
        select_pivots(&gathered, p)?
    } else {
        // Workers held fewer than p-1 sequences; fall back to evenly
        // spaced pivots over whatever ranks arrived.
        let mut sorted = gathered;
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("ranks are finite"));
        if sorted.is_empty() {
            return Err(Error::EmptyPool);
        }
        let len = sorted.len();
        let picked: Vec<f64> = (0..p - 1)
            .map(|j| sorted[(((j + 1) * len) / p).min(len - 1)])
            .collect();
        PivotSet::new(picked)?
    };
    for v in 1..p {
        ledger.log(
            0,
            v,
            PayloadKind::Pivots,
            ranks_bytes(pivots.pivots().len()),
            "pivot-select",
        );
    }
    ledger.push_stage(StageRecord {
        stage: "pivot-select",
        cells: vec![0; p],
        kmer_evals: vec![0; p],
        wall_ms: t.elapsed().as_secs_f64() * 1e3,
    });
    Ok(pivots)
}

/// (id, source worker, rank at send time, destination bucket).
type Move = (String, usize, f64, usize);

/// Round 2: every worker sends each sequence to its pivot bucket's owner.
fn redistribute_stage(
    workers: &[Worker],
    pivots: &PivotSet,
    ledger: &mut CostLedger,
) -> (Vec<Vec<Sequence>>, Vec<Move>) {
    let t = Instant::now();
    let p = workers.len();
    let mut new_pools: Vec<Vec<Sequence>> = vec![Vec::new(); p];
    let mut moves: Vec<Move> = Vec::new();
    for (w, worker) in workers.iter().enumerate() {
        let plan = assign_buckets(&worker.ranked(w), pivots);
        for (bucket, ids) in plan.buckets().iter().enumerate() {
            if ids.is_empty() {
                continue;
            }
            let batch: Vec<Sequence> = ids
                .iter()
                .map(|id| {
                    worker
                        .pool
                        .iter()
                        .find(|s| s.id() == id)
                        .expect("bucket ids come from the pool")
                        .clone()
                })
                .collect();
            if bucket != w {
                ledger.log(
                    w,
                    bucket,
                    PayloadKind::SeqBatch,
                    seqs_bytes(&batch),
                    "redistribute",
                );
            }
            for (id, seq) in ids.iter().zip(batch) {
                let rank = worker
                    .ranks
                    .iter()
                    .zip(&worker.pool)
                    .find(|(_, s)| s.id() == id)
                    .map(|(&r, _)| r)
                    .unwrap();
                moves.push((id.clone(), w, rank, bucket));
                new_pools[bucket].push(seq);
            }
        }
    }
    ledger.push_stage(StageRecord {
        stage: "redistribute",
        cells: vec![0; p],
        kmer_evals: vec![0; p],
        wall_ms: t.elapsed().as_secs_f64() * 1e3,
    });
    (new_pools, moves)
}

/// Run the decomposition stages only (round-robin through redistribution).
pub fn decompose(seqs: &[Sequence], config: &RunConfig) -> Result<(Decomposition, CostLedger)> {
    config.validate()?;
    check_input(seqs, config)?;
    let p = config.workers;
    let mut ledger = CostLedger::new(p);
    let pools = round_robin(seqs, p);
    let mut workers: Vec<Worker> = pools
        .into_iter()
        .map(|pool| Worker {
            pool,
            vectors: Vec::new(),
            ranks: Vec::new(),
        })
        .collect();
    local_rank_stage(&mut workers, config, &mut ledger)?;
    if p == 1 {
        let rows = workers[0]
            .ranked(0)
            .into_iter()
            .map(|r| SeqPlacement {
                id: r.id,
                home_worker: 0,
                local_rank: r.rank,
                global_rank: r.rank,
                bucket: 0,
            })
            .collect();
        let pool = std::mem::take(&mut workers[0].pool);
        return Ok((
            Decomposition {
                bucket_sizes: vec![pool.len()],
                pools: vec![pool],
                rows,
                samples: Vec::new(),
                pivots: Vec::new(),
            },
            ledger,
        ));
    }
    let local_ranks: Vec<Vec<(String, f64)>> = workers
        .iter()
        .map(|w| {
            w.pool
                .iter()
                .zip(&w.ranks)
                .map(|(s, &r)| (s.id().to_string(), r))
                .collect()
        })
        .collect();
    let global_sample = sample_broadcast(&workers, config, &mut ledger)?;
    re_rank_stage(&mut workers, &global_sample, config, &mut ledger)?;
    let pivots = pivot_stage(&workers, &mut ledger)?;
    let (pools, moves) = redistribute_stage(&workers, &pivots, &mut ledger);

    let rows = moves
        .into_iter()
        .map(|(id, home_worker, global_rank, bucket)| {
            let local_rank = local_ranks[home_worker]
                .iter()
                .find(|(lid, _)| lid == &id)
                .map(|(_, r)| *r)
                .unwrap();
            SeqPlacement {
                id,
                home_worker,
                local_rank,
                global_rank,
                bucket,
            }
        })
        .collect();
    Ok((
        Decomposition {
            bucket_sizes: pools.iter().map(Vec::len).collect(),
            samples: global_sample
                .iter()
                .map(|(w, s)| (*w, s.id().to_string()))
                .collect(),
            pivots: pivots.pivots().to_vec(),
            pools,
            rows,
        },
        ledger,
    ))
}

fn check_input(seqs: &[Sequence], config: &RunConfig) -> Result<()> {
    if seqs.is_empty() {
        return Err(Error::EmptyInput("pipeline sequences"));
    }
    if config.workers > 1 && seqs.len() < config.workers {
        return Err(Error::InsufficientSequences {
            n: seqs.len(),
            p: config.workers,
        });
    }
    let mut seen = std::collections::HashSet::new();
    for s in seqs {
        if !seen.insert(s.id()) {
            return Err(Error::DuplicateId(s.id().to_string()));
        }
    }
    Ok(())
}

/// Execute the full pipeline and return the glued global alignment plus
/// the complete cost ledger.
pub fn run_pipeline(seqs: &[Sequence], config: &RunConfig) -> Result<(Alignment, CostLedger)> {
    let model = config.model()?;
    let aligner = config.make_aligner(&model);
    let (decomposition, mut ledger) = decompose(seqs, config)?;
    let p = config.workers;
    let pools = decomposition.pools;

    // Align stage: each non-empty bucket independently.
    let t = Instant::now();
    let aligned: Vec<Option<crate::progressive::AlignedSet>> = pools
        .par_iter()
        .map(|pool| {
            if pool.is_empty() {
                Ok(None)
            } else {
                aligner.align(pool).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    ledger.push_stage(StageRecord {
        stage: "align",
        cells: aligned
            .iter()
            .map(|a| a.as_ref().map_or(0, |s| s.stats.dp_cells))
            .collect(),
        kmer_evals: aligned
            .iter()
            .map(|a| a.as_ref().map_or(0, |s| s.stats.kmer_evals))
            .collect(),
        wall_ms: t.elapsed().as_secs_f64() * 1e3,
    });

    if p == 1 {
        let out = aligned
            .into_iter()
            .next()
            .flatten()
            .expect("one worker holds every sequence");
        return Ok((out.alignment, ledger));
    }

    // Ancestor stage: extract per worker, gather, build, broadcast.
    let t = Instant::now();
    let mut cells = vec![0u64; p];
    let mut locals: Vec<(usize, Alignment)> = Vec::new();
    let mut ancestors: Vec<AncestorProfile> = Vec::new();
    for (w, set) in aligned.iter().enumerate() {
        if let Some(set) = set {
            let anc = extract_ancestor(&set.alignment, w, &config.alphabet)?;
            if w != 0 {
                ledger.log(
                    w,
                    0,
                    PayloadKind::LocalAncestor,
                    ancestor_bytes(&anc),
                    "ancestor",
                );
            }
            locals.push((w, set.alignment.clone()));
            ancestors.push(anc);
        }
    }
    let (_, global_profile, root_cells) =
        build_global_ancestor_with_stats(&ancestors, &model, &config.gaps)?;
    cells[0] += root_cells;
    for &(w, _) in &locals {
        if w != 0 {
            ledger.log(
                0,
                w,
                PayloadKind::GlobalAncestor,
                profile_bytes(&global_profile),
                "ancestor",
            );
        }
    }
    ledger.push_stage(StageRecord {
        stage: "ancestor",
        cells,
        kmer_evals: vec![0; p],
        wall_ms: t.elapsed().as_secs_f64() * 1e3,
    });

    // Fine-tune stage: per worker against the global ancestor.
    let t = Instant::now();
    let tuned: Vec<(usize, Alignment, EditScript)> = locals
        .par_iter()
        .map(|(w, local)| {
            let (aln, script) = fine_tune(local, &global_profile, &model, &config.gaps)?;
            Ok((*w, aln, script))
        })
        .collect::<Result<_>>()?;
    let mut cells = vec![0u64; p];
    for ((w, local), _) in locals.iter().zip(&tuned) {
        cells[*w] += (local.n_cols() as u64) * (global_profile.n_cols() as u64);
    }
    for (w, aln, script) in &tuned {
        if *w != 0 {
            ledger.log(
                *w,
                0,
                PayloadKind::TunedAlignment,
                alignment_bytes(aln) + script_bytes(script),
                "fine-tune",
            );
        }
    }
    ledger.push_stage(StageRecord {
        stage: "fine-tune",
        cells,
        kmer_evals: vec![0; p],
        wall_ms: t.elapsed().as_secs_f64() * 1e3,
    });

    // Glue at the root.
    let t = Instant::now();
    let scripts: Vec<EditScript> = tuned.iter().map(|(_, _, s)| s.clone()).collect();
    let alignments: Vec<Alignment> = tuned.into_iter().map(|(_, a, _)| a).collect();
    let frame = GlueFrame::new(global_profile.n_cols(), scripts)?;
    let glued = glue(&frame, &alignments)?;
    ledger.push_stage(StageRecord {
        stage: "glue",
        cells: vec![0; p],
        kmer_evals: vec![0; p],
        wall_ms: t.elapsed().as_secs_f64() * 1e3,
    });
    Ok((glued, ledger))
}

/// The ledger report CSV (see [`CostLedger::report`]).
pub fn ledger_report(ledger: &CostLedger) -> String {
    ledger.report()
}

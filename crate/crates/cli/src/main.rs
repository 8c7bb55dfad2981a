//! Command-line front end: align, score, synth, bench, partition-inspect.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (parse or invariant
//! violations), 3 external-aligner failure. Diagnostics go to stderr, data
//! to stdout or the requested output files.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dmsa_core::error::Error as CoreError;
use dmsa_core::kmer::KmerParams;
use dmsa_core::pairwise::{GapModel, SubstitutionModel};
use dmsa_core::quality::{modeler_score, q_score, sp_score, tc_score};
use dmsa_core::runtime::{decompose, run_pipeline, AlignerChoice, RunConfig};
use dmsa_core::seq::{
    parse_fasta, parse_fasta_alignment, write_fasta, write_fasta_seqs, Alignment, Alphabet,
};
use dmsa_core::synth::{generate, EvolveParams};

use config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "dmsa",
    version,
    about = "Distributed multiple sequence alignment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align sequences with the decomposition pipeline.
    Align(AlignArgs),
    /// Score a test alignment against a reference.
    Score(ScoreArgs),
    /// Generate synthetic sequences with a known true alignment.
    Synth(SynthArgs),
    /// Sweep worker counts and report operation counts per run.
    Bench(BenchArgs),
    /// Dump ranks, samples, pivots, and bucket sizes as CSV.
    PartitionInspect(InspectArgs),
}

/// Engine settings shared by the pipeline-running subcommands. Every
/// value resolves as: flag, then config-file entry, then default.
#[derive(Args, Debug)]
struct EngineArgs {
    /// k-mer word length (1-8) [default: 5]
    #[arg(long)]
    kmer: Option<usize>,
    /// Constant added inside the distance logarithm [default: 0.02]
    #[arg(long)]
    delta: Option<f64>,
    /// Per-worker global-sample size [default: workers - 1]
    #[arg(long = "sample-k")]
    sample_k: Option<usize>,
    /// Substitution matrix: pam200, vtml240, or unit [default: pam200]
    #[arg(long)]
    matrix: Option<String>,
    /// Gap open penalty (<= 0) [default: -3]
    #[arg(long = "gap-open")]
    gap_open: Option<f64>,
    /// Gap extend penalty (<= 0) [default: -0.5]
    #[arg(long = "gap-extend")]
    gap_extend: Option<f64>,
    /// Run seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Aligner: "builtin" or "cmd:<shell template>" [default: builtin]
    #[arg(long)]
    aligner: Option<String>,
    /// Residue alphabet: protein or dna [default: protein]
    #[arg(long)]
    alphabet: Option<String>,
    /// Map unknown letters to a wildcard scoring 0 against everything.
    #[arg(long)]
    wildcard: bool,
    /// Optional key=value config file (flags take precedence).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AlignArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// Number of logical workers [default: 1]
    #[arg(long)]
    workers: Option<usize>,
    /// Input FASTA file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output aligned FASTA file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the cost-ledger CSV here.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Print stage timings to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct ScoreArgs {
    /// Test alignment (gapped FASTA).
    #[arg(long)]
    test: PathBuf,
    /// Reference alignment (gapped FASTA).
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long = "gap-open")]
    gap_open: Option<f64>,
    #[arg(long = "gap-extend")]
    gap_extend: Option<f64>,
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long)]
    wildcard: bool,
    /// Leave terminal gap runs unpenalized in the sum-of-pairs score.
    #[arg(long = "no-terminal-gaps")]
    no_terminal_gaps: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long = "root-len", default_value_t = 100)]
    root_len: usize,
    #[arg(long = "n-seqs", default_value_t = 16)]
    n_seqs: usize,
    #[arg(long = "sub-rate", default_value_t = 0.05)]
    sub_rate: f64,
    #[arg(long = "indel-rate", default_value_t = 0.02)]
    indel_rate: f64,
    #[arg(long = "mean-indel-len", default_value_t = 2.0)]
    mean_indel_len: f64,
    /// Divergence proxy scaling the per-branch rates.
    #[arg(long = "depth-scale", default_value_t = 1.0)]
    depth_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "protein")]
    alphabet: String,
    /// Output FASTA of the generated sequences.
    #[arg(long)]
    out: PathBuf,
    /// Output aligned FASTA of the true alignment.
    #[arg(long = "ref-out")]
    ref_out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// Comma-separated worker counts to sweep.
    #[arg(long, default_value = "1,2,4,8")]
    workers: String,
    #[arg(long = "in")]
    input: PathBuf,
    /// Reference alignment for the quality columns.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Add q, tc, modeler, sp columns (requires --ref).
    #[arg(long)]
    quality: bool,
    /// Output CSV file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// Number of logical workers [default: 1]
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "in")]
    input: PathBuf,
    /// Output CSV file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Data(CoreError),
    External(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ExternalAligner(_) => CliError::External(e),
            other => CliError::Data(other),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::External(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(msg) => msg.clone(),
            CliError::Data(e) | CliError::External(e) => e.to_string(),
        }
    }
}

fn usage<S: Into<String>>(msg: S) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Align(args) => cmd_align(args),
        Command::Score(args) => cmd_score(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Bench(args) => cmd_bench(args),
        Command::PartitionInspect(args) => cmd_inspect(args),
    }
}

fn parse_alphabet(name: &str, wildcard: bool) -> Result<Alphabet, CliError> {
    let alpha = match name {
        "protein" => Alphabet::protein(),
        "dna" => Alphabet::dna(),
        other => return Err(usage(format!("unknown alphabet '{other}'"))),
    };
    if wildcard {
        let w = if name == "dna" { b'N' } else { b'X' };
        return alpha.with_wildcard(w).map_err(|e| usage(e.to_string()));
    }
    Ok(alpha)
}

fn parse_matrix_name(name: &str) -> Result<String, CliError> {
    match name {
        "pam200" | "vtml240" | "unit" => Ok(name.to_string()),
        other => Err(usage(format!(
            "unknown matrix '{other}' (expected pam200, vtml240, or unit)"
        ))),
    }
}

fn parse_aligner(value: &str) -> Result<AlignerChoice, CliError> {
    if value == "builtin" {
        Ok(AlignerChoice::Builtin)
    } else if let Some(cmd) = value.strip_prefix("cmd:") {
        if cmd.trim().is_empty() {
            return Err(usage("empty external aligner command"));
        }
        Ok(AlignerChoice::External(cmd.to_string()))
    } else {
        Err(usage(format!(
            "unknown aligner '{value}' (expected builtin or cmd:<template>)"
        )))
    }
}

/// Engine settings with the sample size left symbolic so bench can
/// re-derive its per-p default.
struct ResolvedEngine {
    base: RunConfig,
    explicit_sample_k: Option<usize>,
}

impl ResolvedEngine {
    fn for_workers(&self, p: usize) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.workers = p;
        cfg.sample_k = self
            .explicit_sample_k
            .unwrap_or_else(|| p.saturating_sub(1).max(1));
        cfg
    }
}

fn resolve_engine(engine: &EngineArgs, workers: Option<usize>) -> Result<ResolvedEngine, CliError> {
    let file = match &engine.config {
        Some(path) => ConfigFile::load(path).map_err(usage)?,
        None => ConfigFile::empty(),
    };
    let workers = file.resolve(workers, "workers", 1).map_err(usage)?;
    if workers < 1 {
        return Err(usage("--workers must be >= 1"));
    }
    let k = file.resolve(engine.kmer, "kmer", 5).map_err(usage)?;
    if !(1..=8).contains(&k) {
        return Err(usage(format!("--kmer must be in 1..=8, got {k}")));
    }
    let delta = file.resolve(engine.delta, "delta", 0.02).map_err(usage)?;
    let kmer = KmerParams::new(k, delta).map_err(|e| usage(e.to_string()))?;
    let explicit_sample_k = file
        .resolve_opt(engine.sample_k, "sample-k")
        .map_err(usage)?;
    let matrix = parse_matrix_name(
        &file
            .resolve(engine.matrix.clone(), "matrix", "pam200".to_string())
            .map_err(usage)?,
    )?;
    let gap_open = file
        .resolve(engine.gap_open, "gap-open", -3.0)
        .map_err(usage)?;
    let gap_extend = file
        .resolve(engine.gap_extend, "gap-extend", -0.5)
        .map_err(usage)?;
    let gaps = GapModel::new(gap_open, gap_extend).map_err(|e| usage(e.to_string()))?;
    let seed = file.resolve(engine.seed, "seed", 0).map_err(usage)?;
    let aligner = parse_aligner(
        &file
            .resolve(engine.aligner.clone(), "aligner", "builtin".to_string())
            .map_err(usage)?,
    )?;
    let alphabet_name = file
        .resolve(engine.alphabet.clone(), "alphabet", "protein".to_string())
        .map_err(usage)?;
    let wildcard = engine.wildcard
        || file
            .resolve(None::<bool>, "wildcard", false)
            .map_err(usage)?;
    let alphabet = parse_alphabet(&alphabet_name, wildcard)?;

    let base = RunConfig {
        workers,
        kmer,
        sample_k: explicit_sample_k.unwrap_or_else(|| workers.saturating_sub(1).max(1)),
        gaps,
        matrix,
        alphabet,
        seed,
        aligner,
    };
    Ok(ResolvedEngine {
        base,
        explicit_sample_k,
    })
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| {
        CliError::Data(CoreError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })
}

fn write_output(path: Option<&Path>, data: &str) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, data).map_err(|e| {
            CliError::Data(CoreError::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            )))
        }),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

fn cmd_align(args: AlignArgs) -> Result<(), CliError> {
    let engine = resolve_engine(&args.engine, args.workers)?;
    let cfg = engine.base.clone();
    let text = read_to_string(&args.input)?;
    let seqs = parse_fasta(&text, &cfg.alphabet)?;
    let started = Instant::now();
    let (alignment, ledger) = run_pipeline(&seqs, &cfg)?;
    if args.verbose {
        for stage in ledger.stages() {
            eprintln!("stage {:<12} {:8.2} ms", stage.stage, stage.wall_ms);
        }
        eprintln!("total {:8.2} ms", started.elapsed().as_secs_f64() * 1e3);
    }
    write_output(args.out.as_deref(), &write_fasta(&alignment))?;
    if let Some(path) = &args.ledger {
        write_output(Some(path), &ledger.report())?;
    }
    Ok(())
}

fn load_alignment(path: &Path, alphabet: &Alphabet) -> Result<Alignment, CliError> {
    let text = read_to_string(path)?;
    Ok(parse_fasta_alignment(&text, alphabet)?)
}

fn cmd_score(args: ScoreArgs) -> Result<(), CliError> {
    let alphabet = parse_alphabet(args.alphabet.as_deref().unwrap_or("protein"), args.wildcard)?;
    let matrix = parse_matrix_name(args.matrix.as_deref().unwrap_or("pam200"))?;
    let model = SubstitutionModel::by_name(&matrix, &alphabet).map_err(|e| usage(e.to_string()))?;
    let gaps = GapModel::new(
        args.gap_open.unwrap_or(-3.0),
        args.gap_extend.unwrap_or(-0.5),
    )
    .map_err(|e| usage(e.to_string()))?;
    let test = load_alignment(&args.test, &alphabet)?;
    let reference = load_alignment(&args.reference, &alphabet)?;
    let q = q_score(&test, &reference)?;
    let tc = tc_score(&test, &reference)?;
    let modeler = modeler_score(&test, &reference)?;
    let sp = sp_score(&test, &model, &gaps, !args.no_terminal_gaps)?;
    println!("q,tc,modeler,sp");
    println!("{q:.6},{tc:.6},{modeler:.6},{sp:.6}");
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let alphabet = parse_alphabet(&args.alphabet, false)?;
    let params = EvolveParams {
        root_len: args.root_len,
        n_seqs: args.n_seqs,
        sub_rate: args.sub_rate,
        indel_rate: args.indel_rate,
        mean_indel_len: args.mean_indel_len,
        tree_depth_scale: args.depth_scale,
        seed: args.seed,
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    let (seqs, truth) = generate(&params, &alphabet)?;
    write_output(Some(&args.out), &write_fasta_seqs(&seqs))?;
    write_output(Some(&args.ref_out), &write_fasta(&truth))?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    if args.quality && args.reference.is_none() {
        return Err(usage("--quality requires --ref"));
    }
    let sweep: Vec<usize> = args
        .workers
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad worker count '{tok}'")))
        })
        .collect::<Result<_, _>>()?;
    if sweep.is_empty() || sweep.iter().any(|&p| p < 1) {
        return Err(usage(
            "--workers needs a comma-separated list of counts >= 1",
        ));
    }
    let engine = resolve_engine(&args.engine, None)?;
    let text = read_to_string(&args.input)?;
    let seqs = parse_fasta(&text, &engine.base.alphabet)?;
    let reference = match &args.reference {
        Some(path) => Some(load_alignment(path, &engine.base.alphabet)?),
        None => None,
    };
    let model = engine.base.model().map_err(|e| usage(e.to_string()))?;

    let mut out = String::from("p,dp_cells,kmer_evals,bytes,wall_ms");
    if args.quality {
        out.push_str(",q,tc,modeler,sp");
    }
    out.push('\n');
    for &p in &sweep {
        let cfg = engine.for_workers(p);
        let (alignment, ledger) = run_pipeline(&seqs, &cfg)?;
        out.push_str(&format!(
            "{p},{},{},{},{:.3}",
            ledger.total_cells(),
            ledger.total_kmer_evals(),
            ledger.total_bytes(),
            ledger.total_wall_ms()
        ));
        if args.quality {
            let reference = reference.as_ref().expect("checked above");
            let q = q_score(&alignment, reference)?;
            let tc = tc_score(&alignment, reference)?;
            let modeler = modeler_score(&alignment, reference)?;
            let sp = sp_score(&alignment, &model, &cfg.gaps, true)?;
            out.push_str(&format!(",{q:.6},{tc:.6},{modeler:.6},{sp:.6}"));
        }
        out.push('\n');
    }
    write_output(args.out.as_deref(), &out)
}

fn cmd_inspect(args: InspectArgs) -> Result<(), CliError> {
    let engine = resolve_engine(&args.engine, args.workers)?;
    let cfg = engine.base.clone();
    let text = read_to_string(&args.input)?;
    let seqs = parse_fasta(&text, &cfg.alphabet)?;
    let (decomposition, _) = decompose(&seqs, &cfg)?;

    let mut out = String::from("record,worker,id,local_rank,global_rank,bucket\n");
    for row in &decomposition.rows {
        out.push_str(&format!(
            "seq,{},{},{:.6},{:.6},{}\n",
            row.home_worker, row.id, row.local_rank, row.global_rank, row.bucket
        ));
    }
    for (worker, id) in &decomposition.samples {
        out.push_str(&format!("sample,{worker},{id},,,\n"));
    }
    for (j, pivot) in decomposition.pivots.iter().enumerate() {
        out.push_str(&format!("pivot,{j},,,{pivot:.6},\n"));
    }
    for (worker, count) in decomposition.bucket_sizes.iter().enumerate() {
        out.push_str(&format!("bucket,{worker},,,,{count}\n"));
    }
    write_output(args.out.as_deref(), &out)
}

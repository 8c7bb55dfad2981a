//! End-to-end tests of the dmsa binary: exit-code discipline, file
//! outputs, determinism, and the flag/config/default precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dmsa")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn dmsa")
}

fn synth(dir: &Path, out: &str, reference: &str, n: usize, seed: u64) {
    let status = run_in(
        dir,
        &[
            "synth",
            "--n-seqs",
            &n.to_string(),
            "--root-len",
            "80",
            "--sub-rate",
            "0.08",
            "--indel-rate",
            "0.03",
            "--alphabet",
            "dna",
            "--seed",
            &seed.to_string(),
            "--out",
            out,
            "--ref-out",
            reference,
        ],
    );
    assert!(status.status.success(), "{status:?}");
}

fn tmpdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("tempdir")
}

#[test]
fn align_writes_output_and_ledger() {
    let dir = tmpdir();
    synth(dir.path(), "in.fa", "ref.afa", 16, 5);
    let out = run_in(
        dir.path(),
        &[
            "align",
            "--workers",
            "4",
            "--alphabet",
            "dna",
            "--matrix",
            "unit",
            "--kmer",
            "3",
            "--in",
            "in.fa",
            "--out",
            "out.afa",
            "--ledger",
            "ledger.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let aligned = std::fs::read_to_string(dir.path().join("out.afa")).unwrap();
    assert!(aligned.starts_with('>'));
    let ledger = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert!(ledger.starts_with("stage,worker,cells,kmer_evals,bytes_sent,wall_ms"));
    // 8 stages x 4 workers.
    assert_eq!(ledger.lines().count(), 1 + 8 * 4);
}

#[test]
fn align_is_deterministic_across_invocations() {
    let dir = tmpdir();
    synth(dir.path(), "in.fa", "ref.afa", 12, 9);
    let args = [
        "align",
        "--workers",
        "2",
        "--alphabet",
        "dna",
        "--matrix",
        "unit",
        "--kmer",
        "3",
        "--seed",
        "42",
        "--in",
        "in.fa",
    ];
    let first = run_in(dir.path(), &args);
    let second = run_in(dir.path(), &args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tmpdir();
    let out = run_in(dir.path(), &["align", "--bogus", "--in", "x.fa"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("Usage") || stderr.contains("usage"),
        "{stderr}"
    );
}

#[test]
fn help_exits_zero() {
    let dir = tmpdir();
    let out = run_in(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("align"));
}

#[test]
fn duplicate_id_is_data_error_naming_the_id() {
    let dir = tmpdir();
    std::fs::write(dir.path().join("dup.fa"), ">a\nACGT\n>a\nACGG\n").unwrap();
    let out = run_in(
        dir.path(),
        &["align", "--alphabet", "dna", "--in", "dup.fa"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'a'"));
}

#[test]
fn missing_input_is_data_error() {
    let dir = tmpdir();
    let out = run_in(dir.path(), &["align", "--in", "absent.fa"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_external_aligner_is_exit_three() {
    let dir = tmpdir();
    synth(dir.path(), "in.fa", "ref.afa", 8, 2);
    let out = run_in(
        dir.path(),
        &[
            "align",
            "--alphabet",
            "dna",
            "--aligner",
            "cmd:false",
            "--in",
            "in.fa",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn score_reports_perfect_self_match() {
    let dir = tmpdir();
    synth(dir.path(), "in.fa", "ref.afa", 10, 3);
    let out = run_in(
        dir.path(),
        &[
            "score",
            "--test",
            "ref.afa",
            "--ref",
            "ref.afa",
            "--alphabet",
            "dna",
            "--matrix",
            "unit",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("q,tc,modeler,sp"));
    let values: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(values[0], "1.000000");
    assert_eq!(values[1], "1.000000");
    assert_eq!(values[2], "1.000000");
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tmpdir();
    synth(dir.path(), "a.fa", "a.afa", 10, 11);
    synth(dir.path(), "b.fa", "b.afa", 10, 11);
    synth(dir.path(), "c.fa", "c.afa", 10, 12);
    let a = std::fs::read(dir.path().join("a.fa")).unwrap();
    let b = std::fs::read(dir.path().join("b.fa")).unwrap();
    let c = std::fs::read(dir.path().join("c.fa")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn bench_sweeps_and_counts_shrink_with_workers() {
    let dir = tmpdir();
    // Large enough that ranking dominates the k-mer counters.
    let out = run_in(
        dir.path(),
        &[
            "synth",
            "--n-seqs",
            "256",
            "--root-len",
            "60",
            "--sub-rate",
            "0.05",
            "--indel-rate",
            "0.02",
            "--alphabet",
            "dna",
            "--seed",
            "21",
            "--out",
            "in.fa",
            "--ref-out",
            "ref.afa",
        ],
    );
    assert!(out.status.success());
    let out = run_in(
        dir.path(),
        &[
            "bench",
            "--in",
            "in.fa",
            "--ref",
            "ref.afa",
            "--quality",
            "--workers",
            "1,2,4",
            "--alphabet",
            "dna",
            "--matrix",
            "unit",
            "--kmer",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(
        lines[0],
        "p,dp_cells,kmer_evals,bytes,wall_ms,q,tc,modeler,sp"
    );
    assert_eq!(lines.len(), 4);
    let evals: Vec<u64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(evals[0] >= evals[1] && evals[1] >= evals[2], "{evals:?}");
}

#[test]
fn bench_quality_without_ref_is_usage_error() {
    let dir = tmpdir();
    synth(dir.path(), "in.fa", "ref.afa", 8, 1);
    let out = run_in(dir.path(), &["bench", "--in", "in.fa", "--quality"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_single_p_gives_one_row() {
    let dir = tmpdir();
    synth(dir.path(), "in.fa", "ref.afa", 12, 4);
    let out = run_in(
        dir.path(),
        &[
            "bench",
            "--in",
            "in.fa",
            "--workers",
            "2",
            "--alphabet",
            "dna",
            "--matrix",
            "unit",
            "--kmer",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
}

#[test]
fn partition_inspect_emits_all_record_kinds() {
    let dir = tmpdir();
    synth(dir.path(), "in.fa", "ref.afa", 16, 6);
    let out = run_in(
        dir.path(),
        &[
            "partition-inspect",
            "--workers",
            "4",
            "--alphabet",
            "dna",
            "--matrix",
            "unit",
            "--kmer",
            "3",
            "--in",
            "in.fa",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "record,worker,id,local_rank,global_rank,bucket");
    let count = |kind: &str| lines.iter().filter(|l| l.starts_with(kind)).count();
    assert_eq!(count("seq,"), 16);
    assert_eq!(count("sample,"), 4 * 3);
    assert_eq!(count("pivot,"), 3);
    assert_eq!(count("bucket,"), 4);
}

#[test]
fn config_file_layers_between_flags_and_defaults() {
    let dir = tmpdir();
    synth(dir.path(), "in.fa", "ref.afa", 12, 8);
    std::fs::write(
        dir.path().join("run.conf"),
        "workers=3\nmatrix=unit\nalphabet=dna\nkmer=3\n",
    )
    .unwrap();
    // Config alone: 3 workers show up in the ledger.
    let out = run_in(
        dir.path(),
        &[
            "align", "--config", "run.conf", "--in", "in.fa", "--out", "o1.afa", "--ledger",
            "l1.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let l1 = std::fs::read_to_string(dir.path().join("l1.csv")).unwrap();
    assert!(l1.contains("local-rank,2,"));
    assert!(!l1.contains("local-rank,3,"));
    // A flag overrides the config's worker count.
    let out = run_in(
        dir.path(),
        &[
            "align",
            "--config",
            "run.conf",
            "--workers",
            "2",
            "--in",
            "in.fa",
            "--out",
            "o2.afa",
            "--ledger",
            "l2.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let l2 = std::fs::read_to_string(dir.path().join("l2.csv")).unwrap();
    assert!(l2.contains("local-rank,1,"));
    assert!(!l2.contains("local-rank,2,"));
}

#[test]
fn external_aligner_via_template_round_trips() {
    let dir = tmpdir();
    // Equal-length sequences so the identity command yields a flush
    // alignment.
    std::fs::write(
        dir.path().join("in.fa"),
        ">a\nACGTACGT\n>b\nACGTAGGT\n>c\nAAGTACGT\n",
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &[
            "align",
            "--alphabet",
            "dna",
            "--matrix",
            "unit",
            "--kmer",
            "3",
            "--aligner",
            "cmd:cat {in}",
            "--in",
            "in.fa",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains(">a\nACGTACGT"));
}

fn path_of(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[test]
fn score_detects_mismatched_inputs() {
    let dir = tmpdir();
    std::fs::write(path_of(dir.path(), "t.afa"), ">a\nAC-\n>b\nACG\n").unwrap();
    std::fs::write(path_of(dir.path(), "r.afa"), ">a\nAC-\n>z\nACG\n").unwrap();
    let out = run_in(
        dir.path(),
        &[
            "score",
            "--test",
            "t.afa",
            "--ref",
            "r.afa",
            "--alphabet",
            "dna",
            "--matrix",
            "unit",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

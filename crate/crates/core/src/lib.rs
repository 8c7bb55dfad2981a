//! Distributed multiple sequence alignment by k-mer-rank domain
//! decomposition.
//!
//! Sequences are ranked by their mean k-mer distance to a sampled
//! representative of the whole set, redistributed into similarity buckets
//! over p logical workers by regular-sampling pivots, aligned
//! independently per bucket, and merged back through ancestor profiles:
//! each worker's alignment is profile-aligned to the global ancestor and
//! glued into one alignment at the root. Every inter-worker data flow and
//! operation count is recorded in a cost ledger.
//!
//! Modules:
//! - [`seq`]: alphabets, sequences, alignments, FASTA I/O.
//! - [`kmer`]: k-mer counting, distance, and rank.
//! - [`pairwise`]: affine-gap pairwise and profile-profile DP.
//! - [`progressive`]: guide trees, the built-in progressive aligner, and
//!   the external-aligner escape hatch.
//! - [`partition`]: regular sampling, pivots, bucket assignment.
//! - [`ancestor`]: ancestor extraction, fine-tuning, gluing.
//! - [`runtime`]: the p-worker pipeline with message and cost accounting.
//! - [`quality`]: Q/TC/Modeler/sum-of-pairs scoring against references.
//! - [`synth`]: synthetic evolution with known true alignments.

pub mod ancestor;
pub mod error;
pub mod kmer;
pub mod pairwise;
pub mod partition;
pub mod progressive;
pub mod quality;
pub mod runtime;
pub mod seq;
pub mod synth;

pub use error::{Error, Result};

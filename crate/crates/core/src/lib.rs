//! Evaluation toolkit for event-centric multi-document summarization.
//!
//! The crate covers the whole path from raw news to a results table:
//!
//! * [`corpus`] builds instances from raw encyclopedia entries and retrieved
//!   news (cleaning, relevance filtering, document-count clamping, temporal
//!   annotation of the reference).
//! * [`harness`] renders zero- and few-shot prompts and runs a generation
//!   backend over a split with resumable output.
//! * [`metrics`] scores summaries with character-level ROUGE and a greedy
//!   embedding-matching F1.
//! * [`recall`] computes Event, Argument, Causal and Temporal Recall by asking
//!   an entailment discriminator whether each annotated element is inferable
//!   from the summary.
//! * [`nli`] constructs the positive and negative training pairs for those
//!   discriminators.
//! * [`analysis`] aggregates per-instance scores into report rows, bucketed
//!   breakdowns and metric/human agreement.

pub mod analysis;
pub mod config;
pub mod corpus;
pub mod dates;
pub mod embedding;
pub mod evaluate;
pub mod harness;
pub mod hashing;
pub mod metrics;
pub mod model;
pub mod nli;
pub mod recall;
pub mod text;

pub use model::{
    Argument, ArgumentRole, CausalKind, CausalRelation, Document, GeneratedSummary, GlobalAnnotation, Instance,
    ReferenceKind, Split, TemporalRelation,
};

//! Simile triple completion by probing masked language models.
//!
//! A simile triple `(tenor, attribute, vehicle)` with one slot removed is a
//! prediction task: recover the attribute (simile interpretation) or the
//! vehicle (simile generation). This crate probes a masked language model for
//! the missing word through hand-designed sentence patterns and provides the
//! full surrounding pipeline:
//!
//! - [`triples`]: the domain model plus norms-dataset ingestion and splitting;
//! - [`patterns`]: the twelve-template registry and masked-sentence
//!   instantiation;
//! - [`scorer`]: backends turning a masked sentence into a distribution over
//!   a task vocabulary (deterministic mock, or a real MLM via subprocess);
//! - [`ant`]: adjective-noun masked training data construction and the
//!   fine-tuning driver;
//! - [`completion`]: pattern ensembling, exhaustive pattern-subset search,
//!   and embedding-based vehicle filtering;
//! - [`metrics`]: diversity, mean reciprocal rank, and synonym-expanded
//!   top-K correctness.
//!
//! All numeric code is generic over the scalar type through [`Real`]
//! (`f32` or `f64`); the aliases below fix the pipeline default of `f64`.

pub mod ant;
pub mod completion;
pub mod metrics;
pub mod patterns;
pub mod real;
pub mod scorer;
pub mod triples;

pub use real::Real;

/// Default-precision scored distribution.
pub type ScoredCandidates = scorer::ScoredCandidates<f64>;
/// Default-precision ensemble result.
pub type EnsembleResult = completion::EnsembleResult<f64>;
/// Default-precision embedding table.
pub type EmbeddingTable = completion::EmbeddingTable<f64>;
/// Default-precision search report.
pub type SearchReport = completion::SearchReport<f64>;
/// Default-precision completion.
pub type Completion = completion::Completion<f64>;

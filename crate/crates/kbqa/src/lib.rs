//! Question answering over Wikidata.
//!
//! The crate has three parts that build on each other:
//!
//! - an agent that answers natural-language questions by exploring Wikidata
//!   through five tool actions (search, entity lookup, property examples,
//!   SPARQL execution, stop) and iteratively writing a SPARQL query
//!   ([`agent`], [`kb`], [`llm`]);
//! - evaluation of predicted result tables against gold tables with
//!   row-major EM/F1 ([`eval`]);
//! - SPARQL complexity statistics and a benchmark harness with a CLI
//!   ([`stats`], [`bench`]).

pub mod agent;
pub mod bench;
pub mod config;
pub mod eval;
pub mod ids;
pub mod kb;
pub mod llm;
pub mod stats;

/// Scalar type for all reported scores and averages.
pub type Score = f64;

pub use eval::{EvalOutcome, ResultCell, ResultTable, ScoringMode};
pub use ids::{EntityId, IdError, PropertyId};
pub use kb::{SparqlResponse, WikidataClient};

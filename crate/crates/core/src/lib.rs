//! Narrative query engine over provenance-tagged document graphs.
//!
//! Documents arrive as pre-extracted `(subject, predicate, object)`
//! statements tagged with their document, sentence and statement group.
//! Queries are connected graph patterns over entities, literals and typed
//! variables; the engine joins per-clause bindings only when they share a
//! compatible context (see [`model::ContextPolicy`]) and ranks the resulting
//! substitutions by how many documents support them.

pub mod aggregate;
pub mod api;
pub mod context;
pub mod engine;
pub mod index;
pub mod ingest;
pub mod model;
pub mod parser;
pub mod provenance;
pub mod store;
pub mod vocab;

pub use aggregate::{aggregate, format_entry, AggregatedResult, CountUnit};
pub use context::compatible;
pub use engine::{ask, edge_bindings, execute, plan, EngineConfig, EngineError, QueryPlan};
pub use ingest::{export, ingest, IngestError, IngestReport, MalformedRecord};
pub use model::{
    validate_query, Binding, Clause, ContextPolicy, DocumentGraph, DocumentId, EntityRef, EntityType,
    GroupId, NarrativeQuery, QueryError, ResultRow, SentenceId, Statement, StatementId, Substitution,
    Term, Value,
};
pub use parser::{parse, render, ParseError};
pub use provenance::{explain, Explanation};
pub use store::StatementStore;
pub use vocab::Vocabulary;

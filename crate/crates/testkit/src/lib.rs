//! Test support for narql: an exhaustive reference evaluator, a seeded
//! random instance generator and the bundled demo corpora.

pub mod fixtures;
pub mod gen;
pub mod oracle;

pub use gen::{gen_random, GenParams};
pub use oracle::{oracle_execute, OracleError, ORACLE_TUPLE_LIMIT};

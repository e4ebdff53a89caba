//! Bundled corpora in the ingest format, with their vocabularies.

use narql_core::{ingest, StatementStore, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixture {
    pub name: &'static str,
    pub documents: &'static str,
    pub vocabulary: &'static str,
}

impl Fixture {
    pub fn vocab(&self) -> Vocabulary {
        Vocabulary::from_json(self.vocabulary).expect("bundled vocabulary parses")
    }

    /// Ingests the fixture; bundled fixtures contain no malformed records.
    pub fn store(&self) -> StatementStore {
        let (store, report) = ingest(self.documents, self.vocab()).expect("bundled fixture ingests");
        assert!(report.malformed.is_empty(), "{}: {:?}", self.name, report.malformed);
        store
    }
}

macro_rules! fixture {
    ($name:literal) => {
        Fixture {
            name: $name,
            documents: include_str!(concat!("../fixtures/", $name, ".jsonl")),
            vocabulary: include_str!(concat!("../fixtures/", $name, ".vocab.json")),
        }
    };
}

/// Two DBpedia-style documents: the senate term and the presidency.
pub const OBAMA: Fixture = fixture!("obama");
/// One trial abstract whose four statements form two groups.
pub const CVST: Fixture = fixture!("cvst");
/// Condition reports where pneumonia comes from a study of elderly patients.
pub const SMITH: Fixture = fixture!("smith");
/// Twelve synthetic Covid-19 abstracts.
pub const DEMO_COVID: Fixture = fixture!("demo_covid");

pub const ALL: [Fixture; 4] = [OBAMA, CVST, SMITH, DEMO_COVID];

pub fn obama() -> StatementStore {
    OBAMA.store()
}

pub fn cvst() -> StatementStore {
    CVST.store()
}

pub fn smith() -> StatementStore {
    SMITH.store()
}

pub fn demo_covid() -> StatementStore {
    DEMO_COVID.store()
}

/// Absolute path of a bundled fixture file, for tests that drive the CLI.
pub fn path(file: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(file)
}

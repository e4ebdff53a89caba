//! On-disk index directory: a versioned manifest plus the store in its
//! canonical ingest-format serialization.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{export, ingest, IngestError};
use crate::store::StatementStore;
use crate::vocab::{Vocabulary, VocabularyError};

pub const INDEX_FORMAT: &str = "narql-index";
pub const INDEX_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const DOCUMENTS: &str = "documents.jsonl";
const VOCABULARY: &str = "vocabulary.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub documents: usize,
    pub statements: usize,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: malformed manifest: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error("unsupported index {format:?} version {version} (expected {INDEX_FORMAT:?} version {INDEX_VERSION})")]
    VersionMismatch { format: String, version: u32 },
    #[error("index vocabulary: {0}")]
    Vocabulary(#[from] VocabularyError),
    #[error("index documents: {0}")]
    Ingest(#[from] IngestError),
    #[error("index is corrupt: {0}")]
    Corrupt(String),
}

fn read(path: PathBuf) -> Result<String, IndexError> {
    fs::read_to_string(&path).map_err(|source| IndexError::Io { path, source })
}

fn write(path: PathBuf, contents: &str) -> Result<(), IndexError> {
    fs::write(&path, contents).map_err(|source| IndexError::Io { path, source })
}

pub fn save(store: &StatementStore, dir: &Path) -> Result<Manifest, IndexError> {
    fs::create_dir_all(dir).map_err(|source| IndexError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let manifest = Manifest {
        format: INDEX_FORMAT.to_owned(),
        version: INDEX_VERSION,
        documents: store.documents().len(),
        statements: store.len(),
    };
    write(dir.join(VOCABULARY), &store.vocabulary().to_json())?;
    write(dir.join(DOCUMENTS), &export(store))?;
    write(
        dir.join(MANIFEST),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(manifest)
}

pub fn load(dir: &Path) -> Result<StatementStore, IndexError> {
    let path = dir.join(MANIFEST);
    let text = read(path.clone())?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|source| IndexError::Manifest { path, source })?;
    if manifest.format != INDEX_FORMAT || manifest.version != INDEX_VERSION {
        return Err(IndexError::VersionMismatch {
            format: manifest.format,
            version: manifest.version,
        });
    }
    let vocab = Vocabulary::from_json(&read(dir.join(VOCABULARY))?)?;
    let (store, report) = ingest(&read(dir.join(DOCUMENTS))?, vocab)?;
    if !report.malformed.is_empty()
        || report.documents != manifest.documents
        || report.statements != manifest.statements
    {
        return Err(IndexError::Corrupt(format!(
            "manifest says {} documents / {} statements, found {} / {} with {} malformed",
            manifest.documents,
            manifest.statements,
            report.documents,
            report.statements,
            report.malformed.len()
        )));
    }
    Ok(store)
}

//! Line-delimited document records in, [`StatementStore`] out (and back).

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DocumentGraph, DocumentId, EntityRef, GroupId, SentenceId, Statement, Value};
use crate::store::StatementStore;
use crate::vocab::Vocabulary;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRecord {
    id: String,
    title: String,
    source: String,
    authors: Vec<String>,
    date: String,
    keywords: Vec<String>,
    sentences: BTreeMap<String, String>,
    statements: Vec<StatementRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatementRecord {
    subject: String,
    predicate: String,
    object: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group: Option<String>,
}

/// A rejected input line. Ingestion continues past these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedRecord {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for MalformedRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("duplicate document id {id:?} on line {line}")]
    DuplicateDocumentId { id: String, line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IngestReport {
    pub documents: usize,
    pub statements: usize,
    pub unlinkable: usize,
    pub malformed: Vec<MalformedRecord>,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ingested {} documents, {} statements, {} malformed",
            self.documents,
            self.statements,
            self.malformed.len()
        )
    }
}

/// Parses document records (one JSON object per line) into a store.
///
/// Malformed lines are collected in the report and skipped; a repeated
/// document id aborts ingestion.
pub fn ingest(input: &str, vocab: Vocabulary) -> Result<(StatementStore, IngestReport), IngestError> {
    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    let mut malformed = Vec::new();

    for (idx, raw) in input.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord = match serde_json::from_str(raw) {
            Ok(r) => r,
            Err(e) => {
                malformed.push(MalformedRecord {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if !seen.insert(record.id.clone()) {
            return Err(IngestError::DuplicateDocumentId { id: record.id, line });
        }
        match convert(record) {
            Ok(doc) => documents.push(doc),
            Err(reason) => malformed.push(MalformedRecord { line, reason }),
        }
    }

    let store = StatementStore::build(vocab, documents);
    let report = IngestReport {
        documents: store.documents().len(),
        statements: store.len(),
        unlinkable: store.unlinkable_count(),
        malformed,
    };
    Ok((store, report))
}

fn convert(rec: DocumentRecord) -> Result<DocumentGraph, String> {
    if rec.id.trim().is_empty() {
        return Err("empty document id".into());
    }
    if !is_iso_date(&rec.date) {
        return Err(format!("date {:?} is not YYYY-MM-DD", rec.date));
    }
    let doc = DocumentId::new(rec.id);
    let sentences: BTreeMap<SentenceId, String> = rec
        .sentences
        .into_iter()
        .map(|(k, v)| (SentenceId::new(k), v))
        .collect();

    let mut statements = Vec::with_capacity(rec.statements.len());
    for (i, st) in rec.statements.into_iter().enumerate() {
        let subject = st.subject.trim();
        let predicate = st.predicate.trim();
        if subject.is_empty() || predicate.is_empty() {
            return Err(format!("statement {i}: empty subject or predicate"));
        }
        let object = match st.object {
            Value::Entity(e) if e.as_str().trim().is_empty() => {
                return Err(format!("statement {i}: empty object"));
            }
            Value::Entity(e) => Value::entity(e.as_str().trim()),
            lit => lit,
        };
        let sentence = match st.sentence {
            Some(sid) => {
                let sid = SentenceId::new(sid);
                if !sentences.contains_key(&sid) {
                    return Err(format!("statement {i}: unknown sentence {sid:?}"));
                }
                Some(sid)
            }
            None => None,
        };
        let group = match st.group {
            Some(g) if g.trim().is_empty() => return Err(format!("statement {i}: empty group")),
            Some(g) => GroupId::new(doc.clone(), g),
            None => GroupId::document_default(&doc),
        };
        statements.push(Statement {
            subject: EntityRef::new(subject),
            predicate: predicate.to_owned(),
            object,
            doc: doc.clone(),
            sentence,
            group,
        });
    }

    Ok(DocumentGraph {
        id: doc,
        title: rec.title,
        source: rec.source,
        authors: rec.authors,
        date: rec.date,
        keywords: rec.keywords,
        sentences,
        statements,
    })
}

fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit())
}

/// Serializes one document in the ingest record format.
pub fn document_to_json(doc: &DocumentGraph) -> String {
    let rec = DocumentRecord {
        id: doc.id.as_str().to_owned(),
        title: doc.title.clone(),
        source: doc.source.clone(),
        authors: doc.authors.clone(),
        date: doc.date.clone(),
        keywords: doc.keywords.clone(),
        sentences: doc
            .sentences
            .iter()
            .map(|(k, v)| (k.as_str().to_owned(), v.clone()))
            .collect(),
        statements: doc
            .statements
            .iter()
            .map(|s| StatementRecord {
                subject: s.subject.as_str().to_owned(),
                predicate: s.predicate.clone(),
                object: s.object.clone(),
                sentence: s.sentence.as_ref().map(|x| x.as_str().to_owned()),
                group: (!s.group.is_document_default()).then(|| s.group.label.clone()),
            })
            .collect(),
    };
    serde_json::to_string(&rec).expect("document serializes")
}

/// Writes the store's documents back out in canonical order, one per line.
pub fn export(store: &StatementStore) -> String {
    let mut out = String::new();
    for doc in store.documents() {
        out.push_str(&document_to_json(doc));
        out.push('\n');
    }
    out
}

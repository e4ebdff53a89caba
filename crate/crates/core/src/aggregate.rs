//! Groups result rows by substitution and ranks them by supporting documents.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{DocumentId, ResultRow, SentenceId, Substitution, Value};
use crate::store::StatementStore;
use crate::vocab::Vocabulary;

/// At most this many (document, sentence) pairs are kept per entry.
pub const SAMPLE_PROVENANCE_LIMIT: usize = 5;

/// What the bracketed count measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountUnit {
    #[default]
    Documents,
    Rows,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatedResult {
    pub substitution: Substitution,
    pub doc_count: usize,
    pub docs: BTreeSet<DocumentId>,
    pub row_count: usize,
    pub sample_provenance: Vec<(DocumentId, Option<SentenceId>)>,
}

impl AggregatedResult {
    pub fn count(&self, unit: CountUnit) -> usize {
        match unit {
            CountUnit::Documents => self.doc_count,
            CountUnit::Rows => self.row_count,
        }
    }
}

pub fn aggregate(rows: &[ResultRow], store: &StatementStore) -> Vec<AggregatedResult> {
    aggregate_by(rows, store, CountUnit::Documents)
}

/// One entry per distinct substitution, ranked by `unit` count descending,
/// then by substituted values (in variable-name order) ascending.
pub fn aggregate_by(rows: &[ResultRow], store: &StatementStore, unit: CountUnit) -> Vec<AggregatedResult> {
    let mut groups: BTreeMap<&Substitution, AggregatedResult> = BTreeMap::new();
    for row in rows {
        let entry = groups
            .entry(&row.substitution)
            .or_insert_with(|| AggregatedResult {
                substitution: row.substitution.clone(),
                doc_count: 0,
                docs: BTreeSet::new(),
                row_count: 0,
                sample_provenance: Vec::new(),
            });
        entry.row_count += 1;
        for b in &row.support {
            let Some(stmt) = store.statement(b.statement) else {
                continue;
            };
            entry.docs.insert(stmt.doc.clone());
            let pair = (stmt.doc.clone(), stmt.sentence.clone());
            if entry.sample_provenance.len() < SAMPLE_PROVENANCE_LIMIT
                && !entry.sample_provenance.contains(&pair)
            {
                entry.sample_provenance.push(pair);
            }
        }
    }

    let mut out: Vec<AggregatedResult> = groups
        .into_values()
        .map(|mut a| {
            a.doc_count = a.docs.len();
            a
        })
        .collect();
    out.sort_by(|a, b| {
        b.count(unit)
            .cmp(&a.count(unit))
            .then_with(|| value_strings(&a.substitution).cmp(&value_strings(&b.substitution)))
    });
    out
}

fn value_strings(s: &Substitution) -> Vec<&Value> {
    s.values().collect()
}

/// Display form of one value: entity name, raw id when unnamed or unknown,
/// or the literal text.
pub fn display_value<'a>(v: &'a Value, vocab: &'a Vocabulary) -> &'a str {
    match v {
        Value::Entity(e) => vocab.display_name(e),
        Value::Literal(l) => l,
    }
}

/// Renders `Name (count)`; multi-variable substitutions join their values
/// with `", "` in variable-name order.
pub fn format_entry(a: &AggregatedResult, vocab: &Vocabulary) -> String {
    format_entry_with(a, vocab, CountUnit::Documents)
}

pub fn format_entry_with(a: &AggregatedResult, vocab: &Vocabulary, unit: CountUnit) -> String {
    let values: Vec<&str> = a
        .substitution
        .values()
        .map(|v| display_value(v, vocab))
        .collect();
    format!("{} ({})", values.join(", "), a.count(unit))
}

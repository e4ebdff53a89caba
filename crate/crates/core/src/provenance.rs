//! On-demand explanations: which sentence and document support each clause of a row.

use serde::Serialize;
use thiserror::Error;

use crate::aggregate::display_value;
use crate::model::{Clause, DocumentId, NarrativeQuery, ResultRow, Statement, StatementId, Substitution, Term};
use crate::store::StatementStore;
use crate::vocab::Vocabulary;

/// Shown in place of sentence text when a statement carries no sentence id.
pub const NO_SENTENCE: &str = "(no sentence)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClauseExplanation {
    pub clause_text: String,
    pub statement_id: StatementId,
    pub statement: Statement,
    pub sentence_text: Option<String>,
    pub doc: DocumentId,
    pub doc_title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Explanation {
    pub per_clause: Vec<ClauseExplanation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProvenanceError {
    /// The row does not line up with this store, typically because it was
    /// produced against a different store version.
    #[error("stale row: statement {statement} does not support clause {clause}")]
    StaleRow { clause: usize, statement: StatementId },
    #[error("row has {support} bindings but the query has {clauses} clauses")]
    ShapeMismatch { support: usize, clauses: usize },
}

fn display_term(term: &Term, subst: &Substitution, vocab: &Vocabulary) -> String {
    match term.resolve(subst) {
        Some(v) => display_value(&v, vocab).to_owned(),
        None => match term {
            Term::Variable { name, ty } => format!("?{name}({ty})"),
            _ => unreachable!("constants always resolve"),
        },
    }
}

/// A clause with its variables replaced by display values.
pub fn substituted_clause_text(clause: &Clause, subst: &Substitution, vocab: &Vocabulary) -> String {
    format!(
        "({}, {}, {})",
        display_term(&clause.subject, subst, vocab),
        clause.predicate,
        display_term(&clause.object, subst, vocab)
    )
}

pub fn explain(row: &ResultRow, store: &StatementStore, q: &NarrativeQuery) -> Result<Explanation, ProvenanceError> {
    if row.support.len() != q.clauses.len() {
        return Err(ProvenanceError::ShapeMismatch {
            support: row.support.len(),
            clauses: q.clauses.len(),
        });
    }
    let mut per_clause = Vec::with_capacity(q.clauses.len());
    for (i, (clause, binding)) in q.clauses.iter().zip(&row.support).enumerate() {
        let stale = ProvenanceError::StaleRow {
            clause: i,
            statement: binding.statement,
        };
        let stmt = store.statement(binding.statement).ok_or(stale.clone())?;
        if binding.clause != i || clause.unify(stmt).as_ref() != Some(&binding.substitution) {
            return Err(stale);
        }
        let doc = store.document(&stmt.doc).ok_or(stale)?;
        per_clause.push(ClauseExplanation {
            clause_text: substituted_clause_text(clause, &row.substitution, store.vocabulary()),
            statement_id: binding.statement,
            statement: stmt.clone(),
            sentence_text: stmt
                .sentence
                .as_ref()
                .and_then(|sid| doc.sentences.get(sid))
                .cloned(),
            doc: doc.id.clone(),
            doc_title: doc.title.clone(),
        });
    }
    Ok(Explanation { per_clause })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::execute;
    use crate::ingest::ingest;
    use crate::model::{Binding, ContextPolicy, Value};
    use crate::parser::parse;
    use crate::vocab::EntityRecord;

    fn store() -> StatementStore {
        let mut v = Vocabulary::new();
        for (id, ty) in [("Smith", "Patient"), ("Flu", "Disease")] {
            v.insert(EntityRecord { id: id.into(), name: id.into(), ty: ty.into(), synonyms: vec![] }).unwrap();
        }
        v.add_predicate("suffered");
        let line = r#"{"id": "d1", "title": "Case", "source": "", "authors": [], "date": "2022-01-01", "keywords": [], "sentences": {"s1": "Smith had flu."}, "statements": [{"subject": "Smith", "predicate": "suffered", "object": "Flu", "sentence": "s1"}, {"subject": "Smith", "predicate": "suffered", "object": {"literal": "fever"}}]}"#;
        ingest(line, v).unwrap().0
    }

    #[test]
    fn sentence_text_is_verbatim_and_optional() {
        let s = store();
        let q = parse(r#"(Smith, suffered, ?X(Disease))"#, &s).unwrap();
        let rows = execute(&q, ContextPolicy::Document, &s).unwrap();
        let e = explain(&rows[0], &s, &q).unwrap();
        assert_eq!(e.per_clause.len(), 1);
        assert_eq!(e.per_clause[0].sentence_text.as_deref(), Some("Smith had flu."));
        assert_eq!(e.per_clause[0].clause_text, "(Smith, suffered, Flu)");
        assert_eq!(e.per_clause[0].doc_title, "Case");

        let q = parse(r#"(Smith, suffered, ?Y(Literal))"#, &s).unwrap();
        let rows = execute(&q, ContextPolicy::Document, &s).unwrap();
        let e = explain(&rows[0], &s, &q).unwrap();
        assert_eq!(e.per_clause[0].sentence_text, None);
        assert_eq!(e.per_clause[0].clause_text, "(Smith, suffered, fever)");
    }

    #[test]
    fn stale_rows_are_detected() {
        let s = store();
        let q = parse(r#"(Smith, suffered, ?X(Disease))"#, &s).unwrap();
        let subst: Substitution = [("X".to_string(), Value::entity("Flu"))].into();
        let bad = ResultRow {
            substitution: subst.clone(),
            support: vec![Binding { clause: 0, statement: StatementId(42), substitution: subst.clone() }],
        };
        assert!(matches!(explain(&bad, &s, &q), Err(ProvenanceError::StaleRow { .. })));

        // an id that exists but points at a statement the clause does not match
        let other = s.statements().find(|(_, st)| st.object.is_literal()).unwrap().0;
        let wrong = ResultRow {
            substitution: subst.clone(),
            support: vec![Binding { clause: 0, statement: other, substitution: subst }],
        };
        assert!(matches!(explain(&wrong, &s, &q), Err(ProvenanceError::StaleRow { .. })));
    }
}

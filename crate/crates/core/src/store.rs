//! Immutable statement store with lookup indexes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::model::{
    DocumentGraph, DocumentId, EntityRef, EntityType, Statement, StatementId, Value,
};
use crate::vocab::Vocabulary;

/// All ingested documents plus the vocabulary, indexed for clause lookups.
///
/// Documents are kept sorted by id and each document's statements in
/// canonical order with duplicates removed, so two stores built from the
/// same logical content are identical regardless of input order.
#[derive(Debug, Clone)]
pub struct StatementStore {
    vocab: Vocabulary,
    documents: Vec<DocumentGraph>,
    doc_index: HashMap<DocumentId, usize>,
    // StatementId -> (document index, position in document)
    locations: Vec<(u32, u32)>,
    unlinkable: Vec<bool>,
    by_predicate: HashMap<String, Vec<StatementId>>,
    by_subject_predicate: HashMap<(EntityRef, String), Vec<StatementId>>,
    by_predicate_object: HashMap<(String, Value), Vec<StatementId>>,
    entities_by_type: BTreeMap<EntityType, BTreeSet<EntityRef>>,
    statement_entities: HashSet<EntityRef>,
}

impl PartialEq for StatementStore {
    fn eq(&self, other: &Self) -> bool {
        // Everything else is derived from these two.
        self.vocab == other.vocab && self.documents == other.documents
    }
}

impl Eq for StatementStore {}

impl StatementStore {
    /// Builds the store from already validated documents. Document ids must
    /// be unique and every statement's `doc` must equal its document's id.
    pub fn build(vocab: Vocabulary, mut documents: Vec<DocumentGraph>) -> Self {
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        for doc in &mut documents {
            doc.statements.sort_by(canonical_statement_order);
            doc.statements.dedup();
        }

        let mut store = StatementStore {
            vocab,
            doc_index: HashMap::with_capacity(documents.len()),
            locations: Vec::new(),
            unlinkable: Vec::new(),
            by_predicate: HashMap::new(),
            by_subject_predicate: HashMap::new(),
            by_predicate_object: HashMap::new(),
            entities_by_type: BTreeMap::new(),
            statement_entities: HashSet::new(),
            documents: Vec::new(),
        };

        for (di, doc) in documents.iter().enumerate() {
            debug_assert!(doc.statements.iter().all(|s| s.doc == doc.id));
            store.doc_index.insert(doc.id.clone(), di);
            for (si, stmt) in doc.statements.iter().enumerate() {
                let id = StatementId(store.locations.len() as u32);
                store.locations.push((di as u32, si as u32));
                store.index_statement(id, stmt);
            }
        }
        store.documents = documents;
        store
    }

    fn index_statement(&mut self, id: StatementId, stmt: &Statement) {
        let mut linked = true;
        for entity in std::iter::once(&stmt.subject).chain(stmt.object.as_entity()) {
            self.statement_entities.insert(entity.clone());
            match self.vocab.entity_type(entity) {
                Some(ty) => {
                    self.entities_by_type
                        .entry(ty.clone())
                        .or_default()
                        .insert(entity.clone());
                }
                None => linked = false,
            }
        }
        self.unlinkable.push(!linked);
        self.by_predicate
            .entry(stmt.predicate.clone())
            .or_default()
            .push(id);
        self.by_subject_predicate
            .entry((stmt.subject.clone(), stmt.predicate.clone()))
            .or_default()
            .push(id);
        self.by_predicate_object
            .entry((stmt.predicate.clone(), stmt.object.clone()))
            .or_default()
            .push(id);
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn documents(&self) -> &[DocumentGraph] {
        &self.documents
    }

    pub fn document(&self, id: &DocumentId) -> Option<&DocumentGraph> {
        self.doc_index.get(id).map(|&i| &self.documents[i])
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn statement(&self, id: StatementId) -> Option<&Statement> {
        let &(d, s) = self.locations.get(id.0 as usize)?;
        Some(&self.documents[d as usize].statements[s as usize])
    }

    pub fn statements(&self) -> impl Iterator<Item = (StatementId, &Statement)> {
        self.documents
            .iter()
            .flat_map(|d| d.statements.iter())
            .enumerate()
            .map(|(i, s)| (StatementId(i as u32), s))
    }

    /// True when the statement mentions an entity missing from the vocabulary.
    pub fn is_unlinkable(&self, id: StatementId) -> bool {
        self.unlinkable.get(id.0 as usize).copied().unwrap_or(false)
    }

    pub fn unlinkable_count(&self) -> usize {
        self.unlinkable.iter().filter(|&&u| u).count()
    }

    /// Distinct statement groups across all documents.
    pub fn group_count(&self) -> usize {
        self.statements()
            .map(|(_, s)| &s.group)
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn by_predicate(&self, predicate: &str) -> &[StatementId] {
        self.by_predicate
            .get(predicate)
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    pub fn by_subject_predicate(&self, subject: &EntityRef, predicate: &str) -> &[StatementId] {
        // Owned key lookup; HashMap cannot borrow a tuple of references.
        self.by_subject_predicate
            .get(&(subject.clone(), predicate.to_owned()))
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    pub fn by_predicate_object(&self, predicate: &str, object: &Value) -> &[StatementId] {
        self.by_predicate_object
            .get(&(predicate.to_owned(), object.clone()))
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    /// Linked entities of type `ty` that occur in at least one statement.
    pub fn entities_of_type(&self, ty: &EntityType) -> impl Iterator<Item = &EntityRef> {
        self.entities_by_type.get(ty).into_iter().flatten()
    }

    pub fn entity_types(&self) -> impl Iterator<Item = &EntityType> {
        self.entities_by_type.keys()
    }

    /// Whether `id` occurs as subject or object of some statement.
    pub fn mentions_entity(&self, id: &EntityRef) -> bool {
        self.statement_entities.contains(id)
    }

    /// Whether a value may bind a variable of type `ty`: literals bind only
    /// `Literal`, entities bind only their exact vocabulary type.
    pub fn value_has_type(&self, value: &Value, ty: &EntityType) -> bool {
        match value {
            Value::Literal(_) => ty.is_literal(),
            Value::Entity(e) => self.vocab.entity_type(e) == Some(ty),
        }
    }
}

/// Canonical order of statements inside one document.
pub fn canonical_statement_order(a: &Statement, b: &Statement) -> std::cmp::Ordering {
    (&a.sentence, &a.group, &a.subject, &a.predicate, &a.object)
        .cmp(&(&b.sentence, &b.group, &b.subject, &b.predicate, &b.object))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GroupId, SentenceId};
    use crate::vocab::EntityRecord;

    fn doc(id: &str, stmts: &[(&str, &str, Value)]) -> DocumentGraph {
        let did = DocumentId::new(id);
        DocumentGraph {
            id: did.clone(),
            title: id.into(),
            source: String::new(),
            authors: vec![],
            date: "2022-01-01".into(),
            keywords: vec![],
            sentences: [(SentenceId::new("s1"), "text".to_owned())].into(),
            statements: stmts
                .iter()
                .map(|(s, p, o)| Statement {
                    subject: EntityRef::new(*s),
                    predicate: (*p).into(),
                    object: o.clone(),
                    doc: did.clone(),
                    sentence: Some(SentenceId::new("s1")),
                    group: GroupId::document_default(&did),
                })
                .collect(),
        }
    }

    fn vocab() -> Vocabulary {
        let mut v = Vocabulary::new();
        for (id, ty) in [("a", "T"), ("b", "T"), ("c", "U")] {
            v.insert(EntityRecord {
                id: id.into(),
                name: id.to_uppercase(),
                ty: ty.into(),
                synonyms: vec![],
            })
            .unwrap();
        }
        v
    }

    #[test]
    fn canonical_regardless_of_input_order() {
        let d1 = doc("d1", &[("a", "p", Value::entity("b")), ("b", "p", Value::literal("1"))]);
        let d2 = doc("d2", &[("c", "q", Value::entity("zz"))]);
        let mut d1_rev = d1.clone();
        d1_rev.statements.reverse();
        let s1 = StatementStore::build(vocab(), vec![d1, d2.clone()]);
        let s2 = StatementStore::build(vocab(), vec![d2, d1_rev]);
        assert_eq!(s1, s2);
        let ids1: Vec<_> = s1.statements().map(|(_, s)| s.clone()).collect();
        let ids2: Vec<_> = s2.statements().map(|(_, s)| s.clone()).collect();
        assert_eq!(ids1, ids2);
    }

    #[test]
    fn dedups_identical_statements() {
        let d = doc("d", &[("a", "p", Value::entity("b")), ("a", "p", Value::entity("b"))]);
        let s = StatementStore::build(vocab(), vec![d]);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn unlinkable_flag_and_type_index() {
        let d = doc("d", &[("a", "p", Value::entity("ghost")), ("a", "p", Value::entity("c"))]);
        let s = StatementStore::build(vocab(), vec![d]);
        let flags: Vec<_> = s.statements().map(|(id, st)| (st.object.as_str().to_owned(), s.is_unlinkable(id))).collect();
        assert!(flags.contains(&("ghost".into(), true)));
        assert!(flags.contains(&("c".into(), false)));
        assert_eq!(s.unlinkable_count(), 1);
        assert!(s.mentions_entity(&EntityRef::new("ghost")));
        let ts: Vec<_> = s.entities_of_type(&EntityType::new("T")).cloned().collect();
        assert_eq!(ts, vec![EntityRef::new("a")]);
        assert!(!s.value_has_type(&Value::entity("ghost"), &EntityType::new("T")));
        assert!(s.value_has_type(&Value::literal("x"), &EntityType::new("Literal")));
    }
}

//! Context-compatibility: which bindings may be fused into one result row.

use std::collections::BTreeSet;

use crate::model::{Binding, ContextPolicy, DocumentGraph, DocumentId, GroupId, Statement};
use crate::store::StatementStore;

/// Documents and groups touched by a set of bindings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContextKeyset {
    pub docs: BTreeSet<DocumentId>,
    pub groups: BTreeSet<GroupId>,
}

impl ContextKeyset {
    pub fn of<'a>(statements: impl IntoIterator<Item = &'a Statement>) -> Self {
        let mut keys = ContextKeyset::default();
        for s in statements {
            keys.docs.insert(s.doc.clone());
            keys.groups.insert(s.group.clone());
        }
        keys
    }
}

/// Keyword-set Jaccard similarity; keywords compare trimmed and lowercased.
/// Two keyword-less documents score 0.
pub fn keyword_jaccard(a: &DocumentGraph, b: &DocumentGraph) -> f64 {
    let norm = |d: &DocumentGraph| -> BTreeSet<String> {
        d.keywords
            .iter()
            .map(|k| k.trim().to_lowercase())
            .filter(|k| !k.is_empty())
            .collect()
    };
    let (ka, kb) = (norm(a), norm(b));
    let union = ka.union(&kb).count();
    if union == 0 {
        return 0.0;
    }
    ka.intersection(&kb).count() as f64 / union as f64
}

pub fn share_author(a: &DocumentGraph, b: &DocumentGraph) -> bool {
    a.authors
        .iter()
        .map(|x| x.trim())
        .filter(|x| !x.is_empty())
        .any(|x| b.authors.iter().any(|y| y.trim() == x))
}

/// Whether two distinct documents are similar enough to share a context.
pub fn documents_similar(a: &DocumentGraph, b: &DocumentGraph, threshold: f64) -> bool {
    share_author(a, b) || keyword_jaccard(a, b) >= threshold
}

fn similar_ids(store: &StatementStore, a: &DocumentId, b: &DocumentId, threshold: f64) -> bool {
    match (store.document(a), store.document(b)) {
        (Some(da), Some(db)) => documents_similar(da, db, threshold),
        _ => false,
    }
}

/// Checks a complete set of bindings against `policy`.
///
/// Bindings whose statement is missing from the store are never compatible.
pub fn compatible(bindings: &[Binding], policy: ContextPolicy, store: &StatementStore) -> bool {
    let mut statements = Vec::with_capacity(bindings.len());
    for b in bindings {
        match store.statement(b.statement) {
            Some(s) => statements.push(s),
            None => return false,
        }
    }
    statements_compatible(&statements, policy, store)
}

pub fn statements_compatible(statements: &[&Statement], policy: ContextPolicy, store: &StatementStore) -> bool {
    let keys = ContextKeyset::of(statements.iter().copied());
    match policy {
        ContextPolicy::Global => true,
        ContextPolicy::Document => keys.docs.len() <= 1,
        ContextPolicy::Group => keys.groups.len() <= 1,
        ContextPolicy::Similarity(t) => {
            let docs: Vec<_> = keys.docs.into_iter().collect();
            docs.iter().enumerate().all(|(i, a)| {
                docs[i + 1..].iter().all(|b| similar_ids(store, a, b, t))
            })
        }
    }
}

/// Incremental compatibility state for a partial row under construction.
///
/// Every policy is a pairwise condition, so checking each new statement
/// against what is already in scope is equivalent to re-checking the
/// completed row.
#[derive(Debug, Clone)]
pub struct ContextScope<'s> {
    policy: ContextPolicy,
    store: &'s StatementStore,
    docs: Vec<&'s DocumentId>,
    group: Option<&'s GroupId>,
}

impl<'s> ContextScope<'s> {
    pub fn new(policy: ContextPolicy, store: &'s StatementStore) -> Self {
        Self {
            policy,
            store,
            docs: Vec::new(),
            group: None,
        }
    }

    /// Whether `stmt` can join the statements already in scope.
    pub fn admits(&self, stmt: &Statement) -> bool {
        match self.policy {
            ContextPolicy::Global => true,
            ContextPolicy::Document => self.docs.first().is_none_or(|d| **d == stmt.doc),
            ContextPolicy::Group => self.group.is_none_or(|g| *g == stmt.group),
            ContextPolicy::Similarity(t) => self
                .docs
                .iter()
                .all(|d| **d == stmt.doc || similar_ids(self.store, d, &stmt.doc, t)),
        }
    }

    /// Returns the extended scope, or `None` when `stmt` is incompatible.
    pub fn extend(&self, stmt: &'s Statement) -> Option<Self> {
        if !self.admits(stmt) {
            return None;
        }
        let mut next = self.clone();
        if !next.docs.contains(&&stmt.doc) {
            next.docs.push(&stmt.doc);
        }
        next.group.get_or_insert(&stmt.group);
        Some(next)
    }
}

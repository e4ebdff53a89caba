//! Domain types shared by every other module.
//!
//! Everything here is plain data: no I/O and no matching logic beyond the
//! structural checks a query must pass before it can be executed.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved variable type that binds literal objects instead of entities.
pub const LITERAL_TYPE: &str = "Literal";

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

string_id!(
    /// Opaque entity identifier, usually a vocabulary id.
    EntityRef
);
string_id!(
    /// Flat entity type tag such as `Disease` or `Vaccine`.
    EntityType
);
string_id!(DocumentId);
string_id!(SentenceId);

impl EntityType {
    pub fn is_literal(&self) -> bool {
        self.0 == LITERAL_TYPE
    }
}

/// Statement group. Labels are namespaced by their document, so a group
/// never spans two documents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupId {
    pub doc: DocumentId,
    pub label: String,
}

impl GroupId {
    pub fn new(doc: DocumentId, label: impl Into<String>) -> Self {
        Self {
            doc,
            label: label.into(),
        }
    }

    /// The singleton group every statement without an explicit group falls into.
    pub fn document_default(doc: &DocumentId) -> Self {
        Self {
            doc: doc.clone(),
            label: doc.as_str().to_owned(),
        }
    }

    pub fn is_document_default(&self) -> bool {
        self.label == self.doc.as_str()
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc, self.label)
    }
}

/// Index of a statement inside a [`crate::store::StatementStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatementId(pub u32);

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A concrete node value: an entity or a literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Entity(EntityRef),
    Literal(String),
}

impl Value {
    pub fn entity(id: impl Into<String>) -> Self {
        Value::Entity(EntityRef::new(id))
    }

    /// Literals are stored trimmed; comparison is exact on the trimmed text.
    pub fn literal(text: impl AsRef<str>) -> Self {
        Value::Literal(text.as_ref().trim().to_owned())
    }

    /// Raw string form: the entity id or the literal text.
    pub fn as_str(&self) -> &str {
        match self {
            Value::Entity(e) => e.as_str(),
            Value::Literal(l) => l,
        }
    }

    pub fn as_entity(&self) -> Option<&EntityRef> {
        match self {
            Value::Entity(e) => Some(e),
            Value::Literal(_) => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Value::Literal(_))
    }
}

// Values order by their string form first; kind only breaks ties.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        self.as_str()
            .cmp(other.as_str())
            .then_with(|| self.is_literal().cmp(&other.is_literal()))
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

// Wire form shared with the document file format: entities are bare
// strings, literals are `{"literal": "..."}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ValueRepr {
    Entity(String),
    Literal(LiteralRepr),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiteralRepr {
    literal: String,
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Entity(e) => ValueRepr::Entity(e.0.clone()),
            Value::Literal(l) => ValueRepr::Literal(LiteralRepr { literal: l.clone() }),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match ValueRepr::deserialize(d)? {
            ValueRepr::Entity(e) => Value::Entity(EntityRef(e)),
            ValueRepr::Literal(LiteralRepr { literal }) => Value::literal(literal),
        })
    }
}

/// One provenance-tagged edge of a document graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Statement {
    pub subject: EntityRef,
    pub predicate: String,
    pub object: Value,
    pub doc: DocumentId,
    pub sentence: Option<SentenceId>,
    pub group: GroupId,
}

/// A document's statements together with its metadata and sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentGraph {
    pub id: DocumentId,
    pub title: String,
    pub source: String,
    pub authors: Vec<String>,
    pub date: String,
    pub keywords: Vec<String>,
    pub sentences: BTreeMap<SentenceId, String>,
    pub statements: Vec<Statement>,
}

/// A query node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Entity(EntityRef),
    Literal(String),
    Variable { name: String, ty: EntityType },
}

impl Term {
    pub fn entity(id: impl Into<String>) -> Self {
        Term::Entity(EntityRef::new(id))
    }

    pub fn literal(text: impl AsRef<str>) -> Self {
        Term::Literal(text.as_ref().trim().to_owned())
    }

    pub fn var(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Term::Variable {
            name: name.into(),
            ty: EntityType::new(ty),
        }
    }

    pub fn variable_name(&self) -> Option<&str> {
        match self {
            Term::Variable { name, .. } => Some(name),
            _ => None,
        }
    }

    /// Node identity inside the clause graph: variables by name, constants by value.
    fn node_key(&self) -> NodeKey<'_> {
        match self {
            Term::Entity(e) => NodeKey::Entity(e.as_str()),
            Term::Literal(l) => NodeKey::Literal(l),
            Term::Variable { name, .. } => NodeKey::Variable(name),
        }
    }

    /// The concrete value this term denotes under `subst`, if any.
    pub fn resolve(&self, subst: &Substitution) -> Option<Value> {
        match self {
            Term::Entity(e) => Some(Value::Entity(e.clone())),
            Term::Literal(l) => Some(Value::Literal(l.clone())),
            Term::Variable { name, .. } => subst.get(name).cloned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum NodeKey<'a> {
    Entity(&'a str),
    Literal(&'a str),
    Variable(&'a str),
}

/// One `(subject, predicate, object)` pattern of a query.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

impl Clause {
    pub fn new(subject: Term, predicate: impl Into<String>, object: Term) -> Self {
        Self {
            subject,
            predicate: predicate.into(),
            object,
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = (&str, &EntityType)> {
        [&self.subject, &self.object]
            .into_iter()
            .filter_map(|t| match t {
                Term::Variable { name, ty } => Some((name.as_str(), ty)),
                _ => None,
            })
    }

    /// Structural match of this clause against a statement: fixed terms by
    /// identity, variables consistently. Type checks are the engine's job.
    pub fn unify(&self, stmt: &Statement) -> Option<Substitution> {
        if self.predicate != stmt.predicate {
            return None;
        }
        let mut subst = Substitution::new();
        bind_term(&self.subject, &Value::Entity(stmt.subject.clone()), &mut subst)?;
        bind_term(&self.object, &stmt.object, &mut subst)?;
        Some(subst)
    }

    /// Applies a substitution, yielding the concrete triple if every variable is bound.
    pub fn instantiate(&self, subst: &Substitution) -> Option<(Value, &str, Value)> {
        Some((
            self.subject.resolve(subst)?,
            self.predicate.as_str(),
            self.object.resolve(subst)?,
        ))
    }
}

fn bind_term(term: &Term, value: &Value, subst: &mut Substitution) -> Option<()> {
    match term {
        Term::Entity(e) => (value.as_entity() == Some(e)).then_some(()),
        Term::Literal(l) => matches!(value, Value::Literal(v) if v == l).then_some(()),
        Term::Variable { name, .. } => match subst.get(name) {
            Some(bound) => (bound == value).then_some(()),
            None => {
                subst.insert(name.clone(), value.clone());
                Some(())
            }
        },
    }
}

/// Variable name → bound value.
pub type Substitution = BTreeMap<String, Value>;

/// A connected graph pattern whose nodes are entities, literals or typed variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NarrativeQuery {
    pub clauses: Vec<Clause>,
}

impl NarrativeQuery {
    /// Builds a query and validates it.
    pub fn new(clauses: Vec<Clause>) -> Result<Self, QueryError> {
        let q = Self { clauses };
        validate_query(&q)?;
        Ok(q)
    }

    /// Distinct variable names in first-mention order.
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for clause in &self.clauses {
            for (name, _) in clause.variables() {
                if seen.insert(name) {
                    out.push(name);
                }
            }
        }
        out
    }

    pub fn has_variables(&self) -> bool {
        self.clauses.iter().any(|c| c.variables().next().is_some())
    }

    /// Whether clauses `i` and `j` share a node.
    pub fn clauses_share_node(&self, i: usize, j: usize) -> bool {
        let a = &self.clauses[i];
        let b = &self.clauses[j];
        let ak = [a.subject.node_key(), a.object.node_key()];
        let bk = [b.subject.node_key(), b.object.node_key()];
        ak.iter().any(|k| bk.contains(k))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query has no clauses")]
    EmptyQuery,
    /// `clause` is the first clause not reachable from clause 0.
    #[error("query graph is disconnected: clause {clause} is not connected to clause 0")]
    DisconnectedQuery { clause: usize },
    /// `clause` is the first clause mentioning `name` with a conflicting type.
    #[error("variable ?{name} is declared with conflicting types {first} and {second}")]
    ConflictingVariableType {
        name: String,
        first: EntityType,
        second: EntityType,
        clause: usize,
    },
}

/// Checks that a query is non-empty, connected and type-consistent.
pub fn validate_query(q: &NarrativeQuery) -> Result<(), QueryError> {
    if q.clauses.is_empty() {
        return Err(QueryError::EmptyQuery);
    }

    let mut types: BTreeMap<&str, &EntityType> = BTreeMap::new();
    for (i, clause) in q.clauses.iter().enumerate() {
        for (name, ty) in clause.variables() {
            match types.get(name) {
                Some(first) if *first != ty => {
                    return Err(QueryError::ConflictingVariableType {
                        name: name.to_owned(),
                        first: (*first).clone(),
                        second: ty.clone(),
                        clause: i,
                    })
                }
                Some(_) => {}
                None => {
                    types.insert(name, ty);
                }
            }
        }
    }

    // Union-find over clause graph nodes.
    let mut nodes: BTreeMap<NodeKey<'_>, usize> = BTreeMap::new();
    let mut parent: Vec<usize> = Vec::new();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    fn node_of<'q>(nodes: &mut BTreeMap<NodeKey<'q>, usize>, key: NodeKey<'q>, parent: &mut Vec<usize>) -> usize {
        let next = parent.len();
        let id = *nodes.entry(key).or_insert(next);
        if id == next {
            parent.push(next);
        }
        id
    }
    let mut clause_nodes = Vec::with_capacity(q.clauses.len());
    for clause in &q.clauses {
        let s = node_of(&mut nodes, clause.subject.node_key(), &mut parent);
        let o = node_of(&mut nodes, clause.object.node_key(), &mut parent);
        let (rs, ro) = (find(&mut parent, s), find(&mut parent, o));
        parent[rs] = ro;
        clause_nodes.push(s);
    }
    let root = find(&mut parent, clause_nodes[0]);
    for (i, &n) in clause_nodes.iter().enumerate().skip(1) {
        if find(&mut parent, n) != root {
            return Err(QueryError::DisconnectedQuery { clause: i });
        }
    }
    Ok(())
}

/// One query clause matched against one stored statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Binding {
    pub clause: usize,
    pub statement: StatementId,
    /// Only the variables occurring in that clause.
    pub substitution: Substitution,
}

impl Binding {
    /// Matches `clause` against `stmt`; `None` when they do not unify.
    pub fn new(clause_index: usize, clause: &Clause, id: StatementId, stmt: &Statement) -> Option<Self> {
        let substitution = clause.unify(stmt)?;
        debug_assert!(clause
            .instantiate(&substitution)
            .is_some_and(|(s, p, o)| s == Value::Entity(stmt.subject.clone())
                && p == stmt.predicate
                && o == stmt.object));
        Some(Self {
            clause: clause_index,
            statement: id,
            substitution,
        })
    }
}

/// A full substitution of all query variables with one supporting binding per clause.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResultRow {
    pub substitution: Substitution,
    /// Indexed by clause position in the query.
    pub support: Vec<Binding>,
}

impl ResultRow {
    pub fn statement_ids(&self) -> impl Iterator<Item = StatementId> + '_ {
        self.support.iter().map(|b| b.statement)
    }

    /// Canonical ordering key: substitution values (by variable name), then support ids.
    pub fn canonical_key(&self) -> (Vec<(&str, &Value)>, Vec<StatementId>) {
        (
            self.substitution.iter().map(|(k, v)| (k.as_str(), v)).collect(),
            self.statement_ids().collect(),
        )
    }
}

/// Rule deciding which bindings may be fused into one result row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContextPolicy {
    Global,
    Document,
    Group,
    Similarity(f64),
}

impl ContextPolicy {
    pub const DEFAULT_SIMILARITY: f64 = 0.5;

    pub fn similarity(threshold: f64) -> Result<Self, PolicyError> {
        if (0.0..=1.0).contains(&threshold) {
            Ok(ContextPolicy::Similarity(threshold))
        } else {
            Err(PolicyError::ThresholdOutOfRange(threshold))
        }
    }

    /// Parses the uppercase wire name; `threshold` only matters for SIMILARITY.
    pub fn from_name(name: &str, threshold: Option<f64>) -> Result<Self, PolicyError> {
        match name {
            "GLOBAL" => Ok(ContextPolicy::Global),
            "DOCUMENT" => Ok(ContextPolicy::Document),
            "GROUP" => Ok(ContextPolicy::Group),
            "SIMILARITY" => Self::similarity(threshold.unwrap_or(Self::DEFAULT_SIMILARITY)),
            other => Err(PolicyError::UnknownPolicy(other.to_owned())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ContextPolicy::Global => "GLOBAL",
            ContextPolicy::Document => "DOCUMENT",
            ContextPolicy::Group => "GROUP",
            ContextPolicy::Similarity(_) => "SIMILARITY",
        }
    }
}

impl fmt::Display for ContextPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContextPolicy::Similarity(t) => write!(f, "SIMILARITY({t})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("unknown context policy {0:?} (expected GLOBAL, DOCUMENT, GROUP or SIMILARITY)")]
    UnknownPolicy(String),
    #[error("similarity threshold {0} outside [0, 1]")]
    ThresholdOutOfRange(f64),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clause(s: Term, p: &str, o: Term) -> Clause {
        Clause::new(s, p, o)
    }

    #[test]
    fn single_clause_is_valid() {
        let q = NarrativeQuery {
            clauses: vec![clause(Term::entity("A"), "p", Term::var("X", "T"))],
        };
        assert_eq!(validate_query(&q), Ok(()));
    }

    #[test]
    fn disjoint_clauses_are_disconnected() {
        let q = NarrativeQuery {
            clauses: vec![
                clause(Term::entity("A"), "p", Term::var("X", "T")),
                clause(Term::entity("B"), "q", Term::var("Y", "U")),
            ],
        };
        assert_eq!(validate_query(&q), Err(QueryError::DisconnectedQuery { clause: 1 }));
    }

    #[test]
    fn conflicting_variable_type() {
        let q = NarrativeQuery {
            clauses: vec![
                clause(Term::entity("A"), "p", Term::var("X", "Disease")),
                clause(Term::var("X", "Drug"), "q", Term::entity("B")),
            ],
        };
        match validate_query(&q) {
            Err(QueryError::ConflictingVariableType { name, clause, .. }) => {
                assert_eq!(name, "X");
                assert_eq!(clause, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_query() {
        assert_eq!(
            validate_query(&NarrativeQuery { clauses: vec![] }),
            Err(QueryError::EmptyQuery)
        );
    }

    #[test]
    fn connectivity_is_transitive() {
        // C3 connects to C1 only through C2.
        let q = NarrativeQuery {
            clauses: vec![
                clause(Term::entity("A"), "p", Term::var("X", "T")),
                clause(Term::entity("B"), "q", Term::var("Y", "T")),
                clause(Term::var("X", "T"), "r", Term::var("Y", "T")),
            ],
        };
        assert_eq!(validate_query(&q), Ok(()));
    }

    #[test]
    fn shared_literal_connects() {
        let q = NarrativeQuery {
            clauses: vec![
                clause(Term::entity("A"), "p", Term::literal("4.01")),
                clause(Term::entity("B"), "p", Term::literal(" 4.01 ")),
            ],
        };
        assert_eq!(validate_query(&q), Ok(()));
    }

    #[test]
    fn entity_and_literal_with_same_text_are_distinct_nodes() {
        let q = NarrativeQuery {
            clauses: vec![
                clause(Term::entity("A"), "p", Term::literal("B")),
                clause(Term::entity("B"), "p", Term::entity("C")),
            ],
        };
        assert!(matches!(validate_query(&q), Err(QueryError::DisconnectedQuery { .. })));
    }

    #[test]
    fn unify_respects_direction_and_repeated_variables() {
        let doc = DocumentId::new("d");
        let stmt = Statement {
            subject: EntityRef::new("A"),
            predicate: "p".into(),
            object: Value::entity("B"),
            doc: doc.clone(),
            sentence: None,
            group: GroupId::document_default(&doc),
        };
        assert!(clause(Term::entity("A"), "p", Term::entity("B")).unify(&stmt).is_some());
        assert!(clause(Term::entity("B"), "p", Term::entity("A")).unify(&stmt).is_none());
        assert!(clause(Term::var("X", "T"), "p", Term::var("X", "T")).unify(&stmt).is_none());
        assert!(clause(Term::entity("A"), "p", Term::literal("B")).unify(&stmt).is_none());

        let b = Binding::new(0, &clause(Term::var("X", "T"), "p", Term::entity("B")), StatementId(0), &stmt)
            .unwrap();
        assert_eq!(b.substitution.get("X"), Some(&Value::entity("A")));
    }

    #[test]
    fn value_wire_form() {
        assert_eq!(serde_json::to_string(&Value::entity("Q76")).unwrap(), "\"Q76\"");
        assert_eq!(
            serde_json::to_string(&Value::literal("4.01")).unwrap(),
            "{\"literal\":\"4.01\"}"
        );
        let v: Value = serde_json::from_str("{\"literal\":\" 3.58 \"}").unwrap();
        assert_eq!(v, Value::Literal("3.58".into()));
    }

    #[test]
    fn policy_names() {
        assert_eq!(ContextPolicy::from_name("GROUP", None), Ok(ContextPolicy::Group));
        assert_eq!(
            ContextPolicy::from_name("SIMILARITY", None),
            Ok(ContextPolicy::Similarity(0.5))
        );
        assert!(ContextPolicy::from_name("group", None).is_err());
        assert!(ContextPolicy::similarity(1.5).is_err());
    }
}

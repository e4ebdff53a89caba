//! JSON request/response layer shared by the HTTP service and the CLI.
//!
//! Both front ends call these functions and serialize with [`to_json`], so
//! their output for the same logical request is identical.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate_by, display_value, format_entry_with, CountUnit};
use crate::engine::{ask, execute_with, EngineConfig, EngineError};
use crate::model::{ContextPolicy, DocumentId, EntityRef, ResultRow, SentenceId, StatementId, Substitution, Value};
use crate::parser::{parse, ParseError};
use crate::provenance::{explain, ProvenanceError};
use crate::store::StatementStore;

pub const MAX_PAGE: usize = 1000;
pub const DEFAULT_PAGE: usize = 100;
pub const VOCABULARY_SEARCH_LIMIT: usize = 50;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub query: String,
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
    #[serde(default = "default_true")]
    pub aggregate: bool,
    /// Ranking unit for aggregated entries; distinct documents unless set.
    #[serde(default, skip_serializing_if = "is_documents")]
    pub count: CountUnit,
}

fn is_documents(unit: &CountUnit) -> bool {
    *unit == CountUnit::Documents
}

impl QueryRequest {
    pub fn new(query: impl Into<String>, policy: impl Into<String>) -> Self {
        Self {
            query: query.into(),
            policy: policy.into(),
            similarity_threshold: None,
            limit: None,
            offset: None,
            aggregate: true,
            count: CountUnit::Documents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub parse_ms: f64,
    pub exec_ms: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProvenanceRef {
    pub doc: DocumentId,
    pub sentence: Option<SentenceId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportRef {
    pub clause: usize,
    pub statement: StatementId,
    pub doc: DocumentId,
    pub group: String,
    pub sentence: Option<SentenceId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ResultEntry {
    Aggregated {
        substitution: Substitution,
        doc_count: usize,
        display: String,
        provenance_sample: Vec<ProvenanceRef>,
    },
    Row {
        substitution: Substitution,
        display: String,
        support: Vec<SupportRef>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResponse {
    pub variables: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ask: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<Vec<ResultEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total: Option<usize>,
    pub stats: Stats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub id: EntityRef,
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Candidate>>,
}

/// An error with its HTTP status; serializes as `{"error": {...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error: ErrorBody,
}

impl ApiError {
    pub fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            error: ErrorBody {
                code: code.to_owned(),
                message: message.into(),
                position: None,
                candidates: None,
            },
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(400, code, message)
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(404, code, message)
    }

    pub fn code(&self) -> &str {
        &self.error.code
    }

    fn from_parse(e: ParseError, store: &StatementStore) -> Self {
        let mut err = Self::bad_request(e.code(), e.to_string());
        err.error.position = Some(e.position());
        if let ParseError::AmbiguousEntity { candidates, .. } = &e {
            err.error.candidates = Some(
                candidates
                    .iter()
                    .map(|id| {
                        let info = store.vocabulary().entity(id);
                        Candidate {
                            id: id.clone(),
                            name: info.map(|i| i.name.clone()).unwrap_or_default(),
                            ty: info.map(|i| i.ty.to_string()).unwrap_or_default(),
                        }
                    })
                    .collect(),
            );
        }
        err
    }

    fn from_engine(e: EngineError) -> Self {
        let status = match e {
            EngineError::ResultLimitExceeded { .. } => 422,
            EngineError::InvalidQuery(_) | EngineError::QueryHasVariables => 400,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.error.code, self.error.message)
    }
}

impl std::error::Error for ApiError {}

/// Server-side defaults applied to every request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceConfig {
    pub similarity_threshold: f64,
    pub engine: EngineConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: ContextPolicy::DEFAULT_SIMILARITY,
            engine: EngineConfig::default(),
        }
    }
}

/// Compact JSON, the exact bytes both front ends emit.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("response serializes")
}

fn millis(since: Instant) -> f64 {
    (since.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

fn resolve_policy(name: &str, threshold: Option<f64>, config: &ServiceConfig) -> Result<ContextPolicy, ApiError> {
    ContextPolicy::from_name(name, Some(threshold.unwrap_or(config.similarity_threshold)))
        .map_err(|e| ApiError::bad_request("InvalidPolicy", e.to_string()))
}

fn display_substitution(subst: &Substitution, store: &StatementStore) -> String {
    subst
        .values()
        .map(|v| display_value(v, store.vocabulary()))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn run_query(store: &StatementStore, req: &QueryRequest, config: &ServiceConfig) -> Result<QueryResponse, ApiError> {
    let limit = req.limit.unwrap_or(DEFAULT_PAGE);
    if limit > MAX_PAGE {
        return Err(ApiError::bad_request(
            "InvalidRequest",
            format!("limit {limit} exceeds the maximum page size {MAX_PAGE}"),
        ));
    }
    let offset = req.offset.unwrap_or(0);
    let policy = resolve_policy(&req.policy, req.similarity_threshold, config)?;

    let started = Instant::now();
    let q = parse(&req.query, store).map_err(|e| ApiError::from_parse(e, store))?;
    let parse_ms = millis(started);
    let variables: Vec<String> = q.variables().into_iter().map(str::to_owned).collect();

    let started = Instant::now();
    if variables.is_empty() {
        let found = ask(&q, policy, store).map_err(ApiError::from_engine)?;
        return Ok(QueryResponse {
            variables,
            ask: Some(found),
            results: None,
            total: None,
            stats: Stats {
                parse_ms,
                exec_ms: millis(started),
                rows: usize::from(found),
            },
        });
    }

    let rows = execute_with(&q, policy, store, &config.engine).map_err(ApiError::from_engine)?;
    let entries: Vec<ResultEntry> = if req.aggregate {
        aggregate_by(&rows, store, req.count)
            .iter()
            .map(|a| ResultEntry::Aggregated {
                substitution: a.substitution.clone(),
                doc_count: a.doc_count,
                display: format_entry_with(a, store.vocabulary(), req.count),
                provenance_sample: a
                    .sample_provenance
                    .iter()
                    .map(|(doc, sentence)| ProvenanceRef {
                        doc: doc.clone(),
                        sentence: sentence.clone(),
                    })
                    .collect(),
            })
            .collect()
    } else {
        rows.iter().map(|r| raw_entry(r, store)).collect()
    };
    let exec_ms = millis(started);

    let total = entries.len();
    let page = entries.into_iter().skip(offset).take(limit).collect();
    Ok(QueryResponse {
        variables,
        ask: None,
        results: Some(page),
        total: Some(total),
        stats: Stats {
            parse_ms,
            exec_ms,
            rows: rows.len(),
        },
    })
}

fn raw_entry(row: &ResultRow, store: &StatementStore) -> ResultEntry {
    ResultEntry::Row {
        substitution: row.substitution.clone(),
        display: display_substitution(&row.substitution, store),
        support: row
            .support
            .iter()
            .filter_map(|b| {
                let st = store.statement(b.statement)?;
                Some(SupportRef {
                    clause: b.clause,
                    statement: b.statement,
                    doc: st.doc.clone(),
                    group: st.group.label.clone(),
                    sentence: st.sentence.clone(),
                })
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VocabularyEntry {
    pub id: EntityRef,
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub synonyms: Vec<String>,
}

pub fn vocabulary_search(store: &StatementStore, q: &str, ty: Option<&str>) -> Result<Vec<VocabularyEntry>, ApiError> {
    if q.trim().is_empty() {
        return Err(ApiError::bad_request("InvalidRequest", "query parameter q must not be empty"));
    }
    let ty = ty.filter(|t| !t.is_empty());
    Ok(store
        .vocabulary()
        .search(q, ty, VOCABULARY_SEARCH_LIMIT)
        .into_iter()
        .map(|(id, info)| VocabularyEntry {
            id: id.clone(),
            name: info.name.clone(),
            ty: info.ty.to_string(),
            synonyms: info.synonyms.clone(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatementView {
    pub id: StatementId,
    pub subject: EntityRef,
    pub predicate: String,
    pub object: Value,
    pub sentence: Option<SentenceId>,
    pub group: String,
    pub unlinkable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocumentView {
    pub id: DocumentId,
    pub title: String,
    pub source: String,
    pub authors: Vec<String>,
    pub date: String,
    pub keywords: Vec<String>,
    pub sentences: BTreeMap<SentenceId, String>,
    pub statements: Vec<StatementView>,
}

pub fn document_view(store: &StatementStore, id: &str) -> Result<DocumentView, ApiError> {
    let doc_id = DocumentId::new(id);
    let doc = store
        .document(&doc_id)
        .ok_or_else(|| ApiError::not_found("NotFound", format!("no document {id:?}")))?;
    Ok(DocumentView {
        id: doc.id.clone(),
        title: doc.title.clone(),
        source: doc.source.clone(),
        authors: doc.authors.clone(),
        date: doc.date.clone(),
        keywords: doc.keywords.clone(),
        sentences: doc.sentences.clone(),
        statements: store
            .statements()
            .filter(|(_, s)| s.doc == doc_id)
            .map(|(sid, s)| StatementView {
                id: sid,
                subject: s.subject.clone(),
                predicate: s.predicate.clone(),
                object: s.object.clone(),
                sentence: s.sentence.clone(),
                group: s.group.label.clone(),
                unlinkable: store.is_unlinkable(sid),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainRequest {
    pub query: String,
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity_threshold: Option<f64>,
    /// Variable name → entity id, entity name/synonym, or literal text.
    pub pick: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClauseProvenance {
    pub clause: String,
    pub doc: DocumentId,
    pub doc_title: String,
    pub sentence: Option<SentenceId>,
    pub sentence_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExplainedRow {
    pub substitution: Substitution,
    pub display: String,
    pub clauses: Vec<ClauseProvenance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExplainResponse {
    pub rows: Vec<ExplainedRow>,
}

/// Whether a picked string designates `value`.
fn pick_matches(pick: &str, value: &Value, store: &StatementStore) -> bool {
    let pick = pick.trim();
    match value {
        Value::Literal(l) => l == pick,
        Value::Entity(e) => {
            e.as_str() == pick || store.vocabulary().resolve_surface(pick).contains(e)
        }
    }
}

/// Parses `X=Name,Y=Other` into a pick map.
pub fn parse_pick(text: &str) -> Result<BTreeMap<String, String>, ApiError> {
    let mut pick = BTreeMap::new();
    for part in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (var, value) = part.split_once('=').ok_or_else(|| {
            ApiError::bad_request("InvalidRequest", format!("pick entry {part:?} is not VAR=VALUE"))
        })?;
        let var = var.trim().trim_start_matches('?');
        pick.insert(var.to_owned(), value.trim().to_owned());
    }
    if pick.is_empty() {
        return Err(ApiError::bad_request("InvalidRequest", "empty pick"));
    }
    Ok(pick)
}

/// Provenance for every row whose substitution matches `pick`.
pub fn run_explain(store: &StatementStore, req: &ExplainRequest, config: &ServiceConfig) -> Result<ExplainResponse, ApiError> {
    let policy = resolve_policy(&req.policy, req.similarity_threshold, config)?;
    let q = parse(&req.query, store).map_err(|e| ApiError::from_parse(e, store))?;
    let variables = q.variables();
    if let Some(unknown) = req.pick.keys().find(|k| !variables.contains(&k.as_str())) {
        return Err(ApiError::bad_request(
            "UnknownVariable",
            format!("?{unknown} does not occur in the query"),
        ));
    }
    let rows = execute_with(&q, policy, store, &config.engine).map_err(ApiError::from_engine)?;
    let mut out = Vec::new();
    for row in rows.iter().filter(|r| {
        req.pick
            .iter()
            .all(|(var, want)| r.substitution.get(var).is_some_and(|v| pick_matches(want, v, store)))
    }) {
        let explanation = explain(row, store, &q).map_err(|e: ProvenanceError| {
            ApiError::new(409, "StaleRow", e.to_string())
        })?;
        out.push(ExplainedRow {
            substitution: row.substitution.clone(),
            display: display_substitution(&row.substitution, store),
            clauses: explanation
                .per_clause
                .into_iter()
                .map(|c| ClauseProvenance {
                    clause: c.clause_text,
                    doc: c.doc,
                    doc_title: c.doc_title,
                    sentence: c.statement.sentence,
                    sentence_text: c.sentence_text,
                })
                .collect(),
        });
    }
    if out.is_empty() {
        let wanted: Vec<String> = req.pick.iter().map(|(k, v)| format!("{k}={v}")).collect();
        return Err(ApiError::not_found(
            "NoSuchSubstitution",
            format!("no result row matches {}", wanted.join(",")),
        ));
    }
    Ok(ExplainResponse { rows: out })
}

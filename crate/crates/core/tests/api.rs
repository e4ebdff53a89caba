use narql_core::api::{
    document_view, parse_pick, run_explain, run_query, to_json, vocabulary_search, ExplainRequest, QueryRequest,
    ResultEntry, ServiceConfig, MAX_PAGE, VOCABULARY_SEARCH_LIMIT,
};
use narql_core::vocab::EntityRecord;
use narql_core::{ingest, CountUnit, StatementStore, Vocabulary};

fn load(docs: &str, vocab: &str) -> StatementStore {
    let (store, report) = ingest(docs, Vocabulary::from_json(vocab).unwrap()).unwrap();
    assert!(report.malformed.is_empty());
    store
}

fn cvst() -> StatementStore {
    load(
        include_str!("../../testkit/fixtures/cvst.jsonl"),
        include_str!("../../testkit/fixtures/cvst.vocab.json"),
    )
}

fn obama() -> StatementStore {
    load(
        include_str!("../../testkit/fixtures/obama.jsonl"),
        include_str!("../../testkit/fixtures/obama.vocab.json"),
    )
}

const CVST_QUERY: &str =
    "(?V(Vaccine), observed condition, CVST) AND (CVST, risk after vaccination, ?R(Literal))";

fn displays(entries: &[ResultEntry]) -> Vec<&str> {
    entries
        .iter()
        .map(|e| match e {
            ResultEntry::Aggregated { display, .. } | ResultEntry::Row { display, .. } => display.as_str(),
        })
        .collect()
}

#[test]
fn group_policy_keeps_ratios_with_their_vaccine() {
    let s = cvst();
    let res = run_query(&s, &QueryRequest::new(CVST_QUERY, "GROUP"), &ServiceConfig::default()).unwrap();
    assert_eq!(res.variables, ["V", "R"]);
    assert_eq!(res.total, Some(2));
    assert_eq!(displays(res.results.as_deref().unwrap()), ["3.58, BNT162 (1)", "4.01, ChAdOx1 nCov-19 (1)"]);
    let res = run_query(&s, &QueryRequest::new(CVST_QUERY, "DOCUMENT"), &ServiceConfig::default()).unwrap();
    assert_eq!(res.total, Some(4));
    let err = run_query(&s, &QueryRequest::new(CVST_QUERY, "document"), &ServiceConfig::default()).unwrap_err();
    assert_eq!(err.code(), "InvalidPolicy");
}

#[test]
fn pagination() {
    let s = cvst();
    let cfg = ServiceConfig::default();
    let mut req = QueryRequest::new(CVST_QUERY, "GLOBAL");
    req.limit = Some(1);
    req.offset = Some(1);
    let res = run_query(&s, &req, &cfg).unwrap();
    assert_eq!(res.total, Some(4));
    assert_eq!(res.results.unwrap().len(), 1);

    req.offset = Some(10);
    let res = run_query(&s, &req, &cfg).unwrap();
    assert_eq!(res.total, Some(4));
    assert!(res.results.unwrap().is_empty());

    req.limit = Some(MAX_PAGE + 1);
    assert_eq!(run_query(&s, &req, &cfg).unwrap_err().code(), "InvalidRequest");
    req.limit = Some(MAX_PAGE);
    assert!(run_query(&s, &req, &cfg).is_ok());
}

#[test]
fn raw_rows_carry_support() {
    let s = cvst();
    let mut req = QueryRequest::new(CVST_QUERY, "GROUP");
    req.aggregate = false;
    let res = run_query(&s, &req, &ServiceConfig::default()).unwrap();
    let results = res.results.unwrap();
    assert_eq!(results.len(), 2);
    let ResultEntry::Row { support, .. } = &results[0] else {
        panic!("expected a raw row");
    };
    assert_eq!(support.len(), 2);
    assert!(support.iter().all(|b| b.doc.as_str() == "pmid34446436" && b.group == "g2"));
}

#[test]
fn count_rows_ranks_by_rows() {
    let s = cvst();
    let mut req = QueryRequest::new("(?V(Vaccine), observed condition, CVST) AND (CVST, risk after vaccination, ?R(Literal))", "GLOBAL");
    req.count = CountUnit::Rows;
    let res = run_query(&s, &req, &ServiceConfig::default()).unwrap();
    for e in res.results.unwrap() {
        let ResultEntry::Aggregated { doc_count, .. } = e else {
            panic!("expected an aggregated entry");
        };
        assert_eq!(doc_count, 1);
    }
    let json = to_json(&req);
    assert!(json.contains(r#""count":"rows""#), "{json}");
    assert!(!to_json(&QueryRequest::new("q", "GLOBAL")).contains("count"));
}

#[test]
fn ask_and_errors() {
    let s = obama();
    let cfg = ServiceConfig::default();
    let res = run_query(
        &s,
        &QueryRequest::new("(Obama, was, U.S. President) AND (Obama, predecessor, Bush)", "DOCUMENT"),
        &cfg,
    )
    .unwrap();
    assert_eq!(res.ask, Some(true));
    assert!(res.results.is_none());
    let res = run_query(
        &s,
        &QueryRequest::new("(Obama, was, Senator of Illinois) AND (Obama, predecessor, Bush)", "DOCUMENT"),
        &cfg,
    )
    .unwrap();
    assert_eq!(res.ask, Some(false));

    let err = run_query(&s, &QueryRequest::new("(Obama, was, ?X(Office))", "NEARBY"), &cfg).unwrap_err();
    assert_eq!((err.status, err.code()), (400, "InvalidPolicy"));
    let err = run_query(&s, &QueryRequest::new("(Obama, met, ?X(Office))", "GLOBAL"), &cfg).unwrap_err();
    assert_eq!(err.status, 400);
    assert!(err.error.position.is_some());
    let err = run_query(&s, &QueryRequest::new("(Obama, was, ?X(Office)", "GLOBAL"), &cfg).unwrap_err();
    assert_eq!(err.status, 400);
}

#[test]
fn request_json_is_strict() {
    let ok: QueryRequest = serde_json::from_str(r#"{"query": "q", "policy": "GLOBAL"}"#).unwrap();
    assert!(ok.aggregate);
    assert_eq!(ok.count, CountUnit::Documents);
    assert!(serde_json::from_str::<QueryRequest>(r#"{"query": "q", "policy": "GLOBAL", "extra": 1}"#).is_err());
}

#[test]
fn vocabulary_search_is_capped() {
    let mut v = Vocabulary::new();
    for i in 0..(VOCABULARY_SEARCH_LIMIT + 20) {
        v.insert(EntityRecord {
            id: format!("c{i:03}"),
            name: format!("Compound {i}"),
            ty: "Drug".into(),
            synonyms: vec![],
        })
        .unwrap();
    }
    let s = StatementStore::build(v, Vec::new());
    assert_eq!(vocabulary_search(&s, "compound", None).unwrap().len(), VOCABULARY_SEARCH_LIMIT);
    assert!(vocabulary_search(&s, "compound", Some("Disease")).unwrap().is_empty());
    assert_eq!(vocabulary_search(&s, "  ", None).unwrap_err().code(), "InvalidRequest");
}

#[test]
fn documents() {
    let s = obama();
    let d = document_view(&s, "dbpedia-senate").unwrap();
    assert_eq!(d.statements.len(), 2);
    assert_eq!(d.sentences.len(), 2);
    assert!(d.statements.iter().all(|st| !st.unlinkable && st.group == "dbpedia-senate"));
    let err = document_view(&s, "missing").unwrap_err();
    assert_eq!((err.status, err.code()), (404, "NotFound"));
}

fn explain_req(query: &str, policy: &str, pick: &str) -> ExplainRequest {
    ExplainRequest {
        query: query.into(),
        policy: policy.into(),
        similarity_threshold: None,
        pick: parse_pick(pick).unwrap(),
    }
}

#[test]
fn explain_by_synonym_and_literal() {
    let s = cvst();
    let cfg = ServiceConfig::default();
    let res = run_explain(&s, &explain_req(CVST_QUERY, "GROUP", "V=Astra Zeneca"), &cfg).unwrap();
    assert_eq!(res.rows.len(), 1);
    assert_eq!(res.rows[0].display, "4.01, ChAdOx1 nCov-19");
    assert_eq!(res.rows[0].clauses.len(), 2);
    assert!(res.rows[0].clauses[0].sentence_text.as_deref().unwrap().contains("ChAdOx1 nCoV-19 vaccination"));

    let res = run_explain(&s, &explain_req(CVST_QUERY, "GLOBAL", "?R=3.58"), &cfg).unwrap();
    assert_eq!(res.rows.len(), 2);
}

#[test]
fn explain_errors() {
    let s = cvst();
    let cfg = ServiceConfig::default();
    let err = run_explain(&s, &explain_req(CVST_QUERY, "GROUP", "V=Astra Zeneca,R=3.58"), &cfg).unwrap_err();
    assert_eq!((err.status, err.code()), (404, "NoSuchSubstitution"));
    let err = run_explain(&s, &explain_req(CVST_QUERY, "GROUP", "W=BNT162"), &cfg).unwrap_err();
    assert_eq!((err.status, err.code()), (400, "UnknownVariable"));
    assert_eq!(parse_pick("").unwrap_err().code(), "InvalidRequest");
    assert_eq!(parse_pick("V").unwrap_err().code(), "InvalidRequest");
}

#[test]
fn error_json_shape() {
    let s = obama();
    let err = run_query(&s, &QueryRequest::new("(Obama, was, ?X(Office))", "SOMETIMES"), &ServiceConfig::default())
        .unwrap_err();
    let v: serde_json::Value = serde_json::from_str(&to_json(&err)).unwrap();
    assert_eq!(v["error"]["code"], "InvalidPolicy");
    assert!(v.get("status").is_none());
}

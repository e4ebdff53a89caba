//! Seeded random stores and queries.
//!
//! Queries are grown as walks over the generated statements and then
//! partially abstracted into typed variables, so most of them hit; a few
//! are perturbed (swapped entity, wrong variable type) so misses occur too.

use std::collections::BTreeMap;

use narql_core::vocab::EntityRecord;
use narql_core::{
    Clause, DocumentGraph, DocumentId, EntityRef, GroupId, NarrativeQuery, SentenceId, Statement, StatementStore,
    Term, Value, Vocabulary,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub docs: usize,
    pub statements: usize,
    pub types: usize,
    pub entities: usize,
    pub predicates: usize,
    /// Number of queries to generate.
    pub queries: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            docs: 6,
            statements: 40,
            types: 3,
            entities: 10,
            predicates: 3,
            queries: 8,
        }
    }
}

pub const MAX_CLAUSES: usize = 4;
pub const MAX_VARIABLES: usize = 3;

const AUTHORS: [&str; 4] = ["Adeyemi O", "Kim S", "Moreau E", "Novak P"];
const KEYWORDS: [&str; 6] = ["covid-19", "Vaccination", "thrombosis", "fatigue", "cohort", "case report"];
const LITERALS: [&str; 4] = ["0.5", "1.29", "3.58", "4.01"];
const VARIABLE_NAMES: [&str; MAX_VARIABLES] = ["X", "Y", "Z"];

fn entity_id(i: usize) -> String {
    format!("e{i:02}")
}

fn type_name(i: usize) -> String {
    format!("T{i}")
}

/// Builds a store and a list of valid queries, deterministically per seed.
pub fn gen_random(seed: u64, params: GenParams) -> (StatementStore, Vec<NarrativeQuery>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = params.types.max(1);
    let predicates: Vec<String> = (0..params.predicates.max(1)).map(|i| format!("p{i}")).collect();

    let mut vocab = Vocabulary::new();
    for p in &predicates {
        vocab.add_predicate(p.clone());
    }
    for i in 0..params.entities {
        // pairs of entities share a synonym, making that surface form ambiguous
        let synonyms = if matches!(i % 5, 1 | 2) {
            vec![format!("alias {}", i / 5)]
        } else {
            vec![]
        };
        vocab
            .insert(EntityRecord {
                id: entity_id(i),
                name: format!("Entity {i}"),
                ty: type_name(rng.gen_range(0..types)),
                synonyms,
            })
            .expect("generated vocabulary is valid");
    }

    if params.docs == 0 {
        return (StatementStore::build(vocab, Vec::new()), Vec::new());
    }

    let mut docs: Vec<DocumentGraph> = (0..params.docs)
        .map(|d| {
            let id = DocumentId::new(format!("d{d:02}"));
            let sentences: BTreeMap<SentenceId, String> = (1..=rng.gen_range(1..=3))
                .map(|s| (SentenceId::new(format!("s{s}")), format!("Sentence {s} of document {d}.")))
                .collect();
            let n_authors = rng.gen_range(0..=2);
            let authors = AUTHORS
                .choose_multiple(&mut rng, n_authors)
                .map(|a| a.to_string())
                .collect();
            let n_keywords = rng.gen_range(0..=3);
            let keywords = KEYWORDS
                .choose_multiple(&mut rng, n_keywords)
                .map(|k| k.to_string())
                .collect();
            DocumentGraph {
                id,
                title: format!("Document {d}"),
                source: "generated".into(),
                authors,
                date: format!("2021-{:02}-{:02}", rng.gen_range(1..=12), rng.gen_range(1..=28)),
                keywords,
                sentences,
                statements: Vec::new(),
            }
        })
        .collect();

    let pick_entity = |rng: &mut ChaCha8Rng| -> EntityRef {
        // occasionally an id missing from the vocabulary
        if params.entities == 0 || rng.gen_bool(0.08) {
            EntityRef::new(format!("u{}", rng.gen_range(0..3)))
        } else {
            EntityRef::new(entity_id(rng.gen_range(0..params.entities)))
        }
    };
    for _ in 0..params.statements {
        let d = rng.gen_range(0..docs.len());
        let subject = pick_entity(&mut rng);
        let predicate = predicates.choose(&mut rng).expect("at least one predicate").clone();
        let object = if rng.gen_bool(0.15) {
            Value::literal(LITERALS.choose(&mut rng).expect("literal pool"))
        } else {
            Value::Entity(pick_entity(&mut rng))
        };
        let doc = &mut docs[d];
        let sentence = if rng.gen_bool(0.1) {
            None
        } else {
            doc.sentences.keys().collect::<Vec<_>>().choose(&mut rng).map(|s| (*s).clone())
        };
        let group = match rng.gen_range(0..3) {
            0 => GroupId::document_default(&doc.id),
            g => GroupId::new(doc.id.clone(), format!("g{g}")),
        };
        doc.statements.push(Statement {
            subject,
            predicate,
            object,
            doc: doc.id.clone(),
            sentence,
            group,
        });
    }

    let store = StatementStore::build(vocab, docs);
    let queries = (0..params.queries)
        .filter_map(|_| gen_query(&mut rng, &store, types))
        .collect();
    (store, queries)
}

/// Grows a connected walk over stored statements and abstracts some of its
/// nodes into variables.
fn gen_query(rng: &mut ChaCha8Rng, store: &StatementStore, types: usize) -> Option<NarrativeQuery> {
    let all: Vec<&Statement> = store.statements().map(|(_, s)| s).collect();
    let first = *all.choose(rng)?;
    let mut triples: Vec<(Value, String, Value)> =
        vec![(Value::Entity(first.subject.clone()), first.predicate.clone(), first.object.clone())];
    let len = rng.gen_range(1..=MAX_CLAUSES);
    while triples.len() < len {
        let nodes: Vec<&Value> = triples.iter().flat_map(|(s, _, o)| [s, o]).collect();
        let anchor = (*nodes.choose(rng)?).clone();
        let touching: Vec<&&Statement> = all
            .iter()
            .filter(|s| s.object == anchor || anchor.as_entity() == Some(&s.subject))
            .collect();
        let Some(next) = touching.choose(rng) else {
            break;
        };
        triples.push((Value::Entity(next.subject.clone()), next.predicate.clone(), next.object.clone()));
    }

    let mut nodes: Vec<Value> = triples.iter().flat_map(|(s, _, o)| [s.clone(), o.clone()]).collect();
    nodes.sort();
    nodes.dedup();

    // swap one fixed entity for another, everywhere it occurs
    if rng.gen_bool(0.15) {
        let entities: Vec<EntityRef> = store.vocabulary().entities().map(|(id, _)| id.clone()).collect();
        if let (Some(from), Some(to)) = (
            nodes.iter().filter(|v| !v.is_literal()).collect::<Vec<_>>().choose(rng).map(|v| (*v).clone()),
            entities.choose(rng),
        ) {
            let to = Value::Entity(to.clone());
            for (s, _, o) in &mut triples {
                if *s == from {
                    *s = to.clone();
                }
                if *o == from {
                    *o = to.clone();
                }
            }
            nodes = triples.iter().flat_map(|(s, _, o)| [s.clone(), o.clone()]).collect();
            nodes.sort();
            nodes.dedup();
        }
    }

    nodes.shuffle(rng);
    let wanted = rng.gen_range(0..=MAX_VARIABLES.min(nodes.len()));
    let mut variables: BTreeMap<Value, Term> = BTreeMap::new();
    for value in nodes.into_iter() {
        if variables.len() == wanted {
            break;
        }
        let ty = match &value {
            Value::Literal(_) => "Literal".to_owned(),
            Value::Entity(e) => match store.vocabulary().entity_type(e) {
                Some(t) if rng.gen_bool(0.9) => t.to_string(),
                // a deliberately wrong or unlinkable type
                _ => type_name(rng.gen_range(0..types)),
            },
        };
        let name = VARIABLE_NAMES[variables.len()];
        variables.insert(value, Term::var(name, ty));
    }

    let term = |v: &Value| -> Term {
        variables.get(v).cloned().unwrap_or_else(|| match v {
            Value::Entity(e) => Term::Entity(e.clone()),
            Value::Literal(l) => Term::literal(l),
        })
    };
    let clauses = triples.iter().map(|(s, p, o)| Clause::new(term(s), p.clone(), term(o))).collect();
    NarrativeQuery::new(clauses).ok()
}

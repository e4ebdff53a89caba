//! Reference evaluator: enumerates every per-clause statement combination.
//!
//! Shares nothing with the engine beyond the data types. Matching, type
//! checks, context compatibility, deduplication and ordering are all
//! re-implemented here from the definitions.

use std::collections::{BTreeMap, BTreeSet};

use narql_core::{
    validate_query, Binding, Clause, ContextPolicy, DocumentGraph, NarrativeQuery, QueryError, ResultRow, Statement,
    StatementId, StatementStore, Substitution, Term, Value,
};
use thiserror::Error;

/// Largest candidate cross product the oracle will enumerate.
pub const ORACLE_TUPLE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{tuples} candidate tuples exceed the oracle limit of {ORACLE_TUPLE_LIMIT}")]
    TooLargeForOracle { tuples: u128 },
    #[error("invalid query: {0}")]
    InvalidQuery(#[from] QueryError),
}

fn match_term(term: &Term, value: &Value, store: &StatementStore, subst: &mut Substitution) -> bool {
    match term {
        Term::Entity(e) => matches!(value, Value::Entity(v) if v == e),
        Term::Literal(l) => matches!(value, Value::Literal(v) if v == l),
        Term::Variable { name, ty } => {
            let typed = match value {
                Value::Literal(_) => ty.as_str() == "Literal",
                Value::Entity(e) => store.vocabulary().entity_type(e) == Some(ty),
            };
            if !typed {
                return false;
            }
            match subst.get(name) {
                Some(v) => v == value,
                None => {
                    subst.insert(name.clone(), value.clone());
                    true
                }
            }
        }
    }
}

/// The clause's substitution if `stmt` satisfies it in isolation.
fn match_clause(clause: &Clause, stmt: &Statement, store: &StatementStore) -> Option<Substitution> {
    if clause.predicate != stmt.predicate {
        return None;
    }
    let mut subst = Substitution::new();
    let subject = Value::Entity(stmt.subject.clone());
    (match_term(&clause.subject, &subject, store, &mut subst)
        && match_term(&clause.object, &stmt.object, store, &mut subst))
    .then_some(subst)
}

fn norm_keywords(d: &DocumentGraph) -> BTreeSet<String> {
    d.keywords
        .iter()
        .map(|k| k.trim().to_lowercase())
        .filter(|k| !k.is_empty())
        .collect()
}

fn similar(a: &DocumentGraph, b: &DocumentGraph, threshold: f64) -> bool {
    let authors_a: BTreeSet<&str> = a.authors.iter().map(|x| x.trim()).filter(|x| !x.is_empty()).collect();
    if b.authors.iter().any(|x| authors_a.contains(x.trim())) {
        return true;
    }
    let (ka, kb) = (norm_keywords(a), norm_keywords(b));
    let union = ka.union(&kb).count();
    let jaccard = if union == 0 {
        0.0
    } else {
        ka.intersection(&kb).count() as f64 / union as f64
    };
    jaccard >= threshold
}

fn context_ok(stmts: &[&Statement], policy: ContextPolicy, store: &StatementStore) -> bool {
    let Some(first) = stmts.first() else {
        return true;
    };
    match policy {
        ContextPolicy::Global => true,
        ContextPolicy::Document => stmts.iter().all(|s| s.doc == first.doc),
        ContextPolicy::Group => stmts
            .iter()
            .all(|s| s.doc == first.doc && s.group.label == first.group.label),
        ContextPolicy::Similarity(t) => stmts.iter().all(|a| {
            stmts.iter().all(|b| {
                a.doc == b.doc
                    || match (store.document(&a.doc), store.document(&b.doc)) {
                        (Some(da), Some(db)) => similar(da, db, t),
                        _ => false,
                    }
            })
        }),
    }
}

fn merge(into: &mut Substitution, part: &Substitution) -> bool {
    for (k, v) in part {
        match into.get(k) {
            Some(existing) if existing != v => return false,
            Some(_) => {}
            None => {
                into.insert(k.clone(), v.clone());
            }
        }
    }
    true
}

/// All valid result rows of `q` under `policy`, deduplicated by
/// (substitution, set of supporting statements) and sorted canonically.
pub fn oracle_execute(q: &NarrativeQuery, policy: ContextPolicy, store: &StatementStore) -> Result<Vec<ResultRow>, OracleError> {
    validate_query(q)?;

    let per_clause: Vec<Vec<(StatementId, &Statement, Substitution)>> = q
        .clauses
        .iter()
        .map(|c| {
            store
                .statements()
                .filter_map(|(id, s)| match_clause(c, s, store).map(|sub| (id, s, sub)))
                .collect()
        })
        .collect();

    let tuples = per_clause
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    if tuples > ORACLE_TUPLE_LIMIT {
        return Err(OracleError::TooLargeForOracle { tuples });
    }

    // key: (substitution, sorted distinct statement ids) -> smallest support list
    let mut found: BTreeMap<(Substitution, Vec<StatementId>), Vec<StatementId>> = BTreeMap::new();
    let mut pick = vec![0usize; per_clause.len()];
    if per_clause.iter().all(|c| !c.is_empty()) {
        loop {
            let chosen: Vec<&(StatementId, &Statement, Substitution)> =
                pick.iter().enumerate().map(|(i, &j)| &per_clause[i][j]).collect();
            let mut subst = Substitution::new();
            let consistent = chosen.iter().all(|(_, _, part)| merge(&mut subst, part));
            let stmts: Vec<&Statement> = chosen.iter().map(|(_, s, _)| *s).collect();
            if consistent && context_ok(&stmts, policy, store) {
                let support: Vec<StatementId> = chosen.iter().map(|(id, _, _)| *id).collect();
                let set: Vec<StatementId> = support.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
                found
                    .entry((subst, set))
                    .and_modify(|best| {
                        if support < *best {
                            *best = support.clone();
                        }
                    })
                    .or_insert(support);
            }
            // odometer over the cross product
            let mut i = pick.len();
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                pick[i] += 1;
                if pick[i] < per_clause[i].len() {
                    break;
                }
                pick[i] = 0;
            }
            if pick.iter().all(|&j| j == 0) {
                break;
            }
        }
    }

    let mut rows: Vec<ResultRow> = found
        .into_iter()
        .map(|((substitution, _), support)| ResultRow {
            support: support
                .iter()
                .enumerate()
                .map(|(i, &id)| {
                    let (_, _, part) = per_clause[i]
                        .iter()
                        .find(|(sid, _, _)| *sid == id)
                        .expect("support statement comes from the candidate list");
                    Binding {
                        clause: i,
                        statement: id,
                        substitution: part.clone(),
                    }
                })
                .collect(),
            substitution,
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &ResultRow| {
            (
                r.substitution.iter().map(|(k, v)| (k.clone(), v.clone())).collect::<Vec<_>>(),
                r.support.iter().map(|b| b.statement).collect::<Vec<_>>(),
            )
        };
        key(a).cmp(&key(b))
    });
    Ok(rows)
}

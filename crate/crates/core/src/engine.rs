//! Query execution: per-clause bindings, a connected left-deep plan, and a
//! backtracking join that prunes context-incompatible partial rows early.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::context::ContextScope;
use crate::model::{
    validate_query, Binding, Clause, ContextPolicy, NarrativeQuery, QueryError, ResultRow,
    StatementId, Substitution, Value,
};
use crate::store::StatementStore;

pub const DEFAULT_RESULT_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    /// Maximum number of distinct rows `execute` may produce.
    pub result_limit: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            result_limit: DEFAULT_RESULT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid query: {0}")]
    InvalidQuery(#[from] QueryError),
    #[error("result limit of {limit} rows exceeded")]
    ResultLimitExceeded { limit: usize },
    #[error("ASK queries must not contain variables")]
    QueryHasVariables,
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::InvalidQuery(QueryError::EmptyQuery) => "EmptyQuery",
            EngineError::InvalidQuery(QueryError::DisconnectedQuery { .. }) => "DisconnectedQuery",
            EngineError::InvalidQuery(QueryError::ConflictingVariableType { .. }) => {
                "ConflictingVariableType"
            }
            EngineError::ResultLimitExceeded { .. } => "ResultLimitExceeded",
            EngineError::QueryHasVariables => "QueryHasVariables",
        }
    }
}

/// Statement ids worth testing against `clause`, given the variables bound so far.
fn candidates<'s>(clause: &Clause, subst: &Substitution, store: &'s StatementStore) -> &'s [StatementId] {
    let subject = clause.subject.resolve(subst);
    let object = clause.object.resolve(subst);
    match (subject, object) {
        (Some(Value::Entity(s)), _) => store.by_subject_predicate(&s, &clause.predicate),
        // a literal can never be a subject
        (Some(Value::Literal(_)), _) => &[],
        (None, Some(o)) => store.by_predicate_object(&clause.predicate, &o),
        (None, None) => store.by_predicate(&clause.predicate),
    }
}

/// Full binding check: structural match, variable types, and agreement
/// with already bound variables.
fn bind(
    clause_index: usize,
    clause: &Clause,
    id: StatementId,
    store: &StatementStore,
    bound: &Substitution,
) -> Option<Binding> {
    let stmt = store.statement(id)?;
    let binding = Binding::new(clause_index, clause, id, stmt)?;
    for (name, ty) in clause.variables() {
        let value = &binding.substitution[name];
        if !store.value_has_type(value, ty) {
            return None;
        }
        if bound.get(name).is_some_and(|b| b != value) {
            return None;
        }
    }
    Some(binding)
}

/// Every stored statement matching `clause` in isolation.
pub fn edge_bindings(clause_index: usize, clause: &Clause, store: &StatementStore) -> Vec<Binding> {
    let empty = Substitution::new();
    candidates(clause, &empty, store)
        .iter()
        .filter_map(|&id| bind(clause_index, clause, id, store, &empty))
        .collect()
}

/// Clause evaluation order with the per-clause candidate counts it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPlan {
    pub clause_order: Vec<usize>,
    pub estimates: Vec<usize>,
}

/// Orders clauses greedily: cheapest clause first, then always the cheapest
/// clause connected to those already placed. Ties go to the lower index.
pub fn plan(q: &NarrativeQuery, store: &StatementStore) -> QueryPlan {
    let estimates = q
        .clauses
        .iter()
        .enumerate()
        .map(|(i, c)| edge_bindings(i, c, store).len())
        .collect();
    plan_with_estimates(q, estimates)
}

pub fn plan_with_estimates(q: &NarrativeQuery, estimates: Vec<usize>) -> QueryPlan {
    let n = q.clauses.len();
    assert_eq!(estimates.len(), n);
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let connected = |i: usize| order.is_empty() || order.iter().any(|&j| q.clauses_share_node(i, j));
        // fall back to any clause if nothing connects (only for invalid queries)
        let next = (0..n)
            .filter(|&i| !placed[i] && connected(i))
            .min_by_key(|&i| (estimates[i], i))
            .or_else(|| (0..n).filter(|&i| !placed[i]).min_by_key(|&i| (estimates[i], i)))
            .expect("unplaced clause");
        placed[next] = true;
        order.push(next);
    }
    QueryPlan {
        clause_order: order,
        estimates,
    }
}

struct Join<'a> {
    q: &'a NarrativeQuery,
    store: &'a StatementStore,
    order: &'a [usize],
}

impl<'a> Join<'a> {
    fn run<B>(
        &self,
        depth: usize,
        subst: &Substitution,
        scope: &ContextScope<'a>,
        support: &mut Vec<Option<Binding>>,
        visit: &mut dyn FnMut(ResultRow) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if depth == self.order.len() {
            let row = ResultRow {
                substitution: subst.clone(),
                support: support.iter().map(|b| b.clone().expect("every clause bound")).collect(),
            };
            return visit(row);
        }
        let ci = self.order[depth];
        let clause = &self.q.clauses[ci];
        for &id in candidates(clause, subst, self.store) {
            let Some(binding) = bind(ci, clause, id, self.store, subst) else {
                continue;
            };
            let stmt = self.store.statement(id).expect("candidate exists");
            let Some(next_scope) = scope.extend(stmt) else {
                continue;
            };
            let mut next = subst.clone();
            next.extend(binding.substitution.iter().map(|(k, v)| (k.clone(), v.clone())));
            support[ci] = Some(binding);
            self.run(depth + 1, &next, &next_scope, support, visit)?;
            support[ci] = None;
        }
        ControlFlow::Continue(())
    }
}

fn for_each_row<B>(
    q: &NarrativeQuery,
    policy: ContextPolicy,
    store: &StatementStore,
    order: &[usize],
    visit: &mut dyn FnMut(ResultRow) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let join = Join { q, store, order };
    let mut support = vec![None; q.clauses.len()];
    join.run(0, &Substitution::new(), &ContextScope::new(policy, store), &mut support, visit)
}

/// Deduplicates rows by (substitution, set of supporting statements) and
/// sorts them canonically. Among duplicates the row with the smallest
/// per-clause support list is kept.
#[derive(Debug, Default)]
pub struct RowSet {
    rows: BTreeMap<(Substitution, Vec<StatementId>), ResultRow>,
}

impl RowSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Returns whether the row's key was new.
    pub fn insert(&mut self, row: ResultRow) -> bool {
        let mut ids: Vec<StatementId> = row.statement_ids().collect();
        ids.sort();
        ids.dedup();
        match self.rows.entry((row.substitution.clone(), ids)) {
            Entry::Vacant(e) => {
                e.insert(row);
                true
            }
            Entry::Occupied(mut e) => {
                if row.statement_ids().lt(e.get().statement_ids()) {
                    e.insert(row);
                }
                false
            }
        }
    }

    pub fn into_sorted(self) -> Vec<ResultRow> {
        let mut rows: Vec<ResultRow> = self.rows.into_values().collect();
        rows.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
        rows
    }
}

/// Runs a query under a context policy with the default configuration.
pub fn execute(q: &NarrativeQuery, policy: ContextPolicy, store: &StatementStore) -> Result<Vec<ResultRow>, EngineError> {
    execute_with(q, policy, store, &EngineConfig::default())
}

pub fn execute_with(
    q: &NarrativeQuery,
    policy: ContextPolicy,
    store: &StatementStore,
    config: &EngineConfig,
) -> Result<Vec<ResultRow>, EngineError> {
    validate_query(q)?;
    let order = plan(q, store).clause_order;
    execute_in_order(q, policy, store, &order, config)
}

/// Executes with an explicit clause order (a permutation of clause indices).
pub fn execute_in_order(
    q: &NarrativeQuery,
    policy: ContextPolicy,
    store: &StatementStore,
    order: &[usize],
    config: &EngineConfig,
) -> Result<Vec<ResultRow>, EngineError> {
    validate_query(q)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    assert!(
        sorted.iter().copied().eq(0..q.clauses.len()),
        "clause order must be a permutation"
    );

    let mut rows = RowSet::default();
    let limit = config.result_limit;
    let flow = for_each_row(q, policy, store, order, &mut |row| {
        if rows.insert(row) && rows.len() > limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    if flow.is_break() {
        return Err(EngineError::ResultLimitExceeded { limit });
    }
    Ok(rows.into_sorted())
}

/// Existence check for a variable-free query.
pub fn ask(q: &NarrativeQuery, policy: ContextPolicy, store: &StatementStore) -> Result<bool, EngineError> {
    validate_query(q)?;
    if q.has_variables() {
        return Err(EngineError::QueryHasVariables);
    }
    let order = plan(q, store).clause_order;
    Ok(for_each_row(q, policy, store, &order, &mut |_| ControlFlow::Break(())).is_break())
}

//! Textual narrative query language.
//!
//! ```text
//! query  := clause ("AND" clause)*
//! clause := "(" term "," predicate "," term ")"
//! term   := "?" IDENT "(" IDENT ")" | QUOTED_STRING | BARE_TEXT
//! ```
//!
//! `AND` is case-sensitive and must be surrounded by whitespace. Bare text
//! runs up to the next `,` or `)` and is trimmed; it may not contain `(`,
//! `)`, `,` or `"`. Quoted strings accept `\"` and `\\` escapes.
//!
//! Entity surface forms are resolved through the vocabulary. A quoted object
//! that resolves to no entity becomes a literal; unresolved bare text is an
//! error. Error positions are character offsets into the input.

use std::fmt;

use thiserror::Error;

use crate::model::{validate_query, Clause, EntityRef, NarrativeQuery, QueryError, Term};
use crate::store::StatementStore;
use crate::vocab::Vocabulary;

/// Lookup surface used while parsing.
pub trait EntityResolver {
    fn vocabulary(&self) -> &Vocabulary;

    /// Exact-id fallback for text that matches no name or synonym.
    fn knows_id(&self, id: &EntityRef) -> bool;
}

impl EntityResolver for Vocabulary {
    fn vocabulary(&self) -> &Vocabulary {
        self
    }

    fn knows_id(&self, id: &EntityRef) -> bool {
        self.contains(id)
    }
}

// The store also knows ids that only occur in unlinkable statements.
impl EntityResolver for StatementStore {
    fn vocabulary(&self) -> &Vocabulary {
        StatementStore::vocabulary(self)
    }

    fn knows_id(&self, id: &EntityRef) -> bool {
        self.vocabulary().contains(id) || self.mentions_entity(id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown entity {form:?} at {position}")]
    UnknownEntity { form: String, position: usize },
    #[error("ambiguous entity {form:?} at {position}: candidates {}", candidates.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", "))]
    AmbiguousEntity {
        form: String,
        candidates: Vec<EntityRef>,
        position: usize,
    },
    #[error("unknown predicate {name:?} at {position}")]
    UnknownPredicate { name: String, position: usize },
    #[error("{error} (at {position})")]
    Invalid { error: QueryError, position: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. }
            | ParseError::UnknownEntity { position, .. }
            | ParseError::AmbiguousEntity { position, .. }
            | ParseError::UnknownPredicate { position, .. }
            | ParseError::Invalid { position, .. } => *position,
        }
    }

    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "SyntaxError",
            ParseError::UnknownEntity { .. } => "UnknownEntity",
            ParseError::AmbiguousEntity { .. } => "AmbiguousEntity",
            ParseError::UnknownPredicate { .. } => "UnknownPredicate",
            ParseError::Invalid { error, .. } => match error {
                QueryError::EmptyQuery => "EmptyQuery",
                QueryError::DisconnectedQuery { .. } => "DisconnectedQuery",
                QueryError::ConflictingVariableType { .. } => "ConflictingVariableType",
            },
        }
    }
}

#[derive(Debug)]
enum RawTerm {
    Variable { name: String, ty: String },
    Quoted(String),
    Bare(String),
}

#[derive(Debug)]
struct Spanned {
    term: RawTerm,
    pos: usize,
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
        self.pos > start
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("'{c}'")))
        }
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            position: self.pos,
            expected: expected.into(),
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.chars.get(self.pos + i) == Some(&c))
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || c == '_')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("identifier"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn term(&mut self) -> Result<Spanned, ParseError> {
        self.skip_ws();
        let pos = self.pos;
        let term = match self.peek() {
            Some('?') => {
                self.pos += 1;
                let name = self.ident()?;
                self.skip_ws();
                self.expect('(')?;
                self.skip_ws();
                let ty = self.ident()?;
                self.skip_ws();
                self.expect(')')?;
                RawTerm::Variable { name, ty }
            }
            Some('"') => {
                self.pos += 1;
                let mut text = String::new();
                loop {
                    match self.peek() {
                        None => return Err(self.error("closing '\"'")),
                        Some('"') => {
                            self.pos += 1;
                            break;
                        }
                        Some('\\') => {
                            self.pos += 1;
                            match self.peek() {
                                Some(c @ ('"' | '\\')) => {
                                    text.push(c);
                                    self.pos += 1;
                                }
                                _ => return Err(self.error("'\\\"' or '\\\\' escape")),
                            }
                        }
                        Some(c) => {
                            text.push(c);
                            self.pos += 1;
                        }
                    }
                }
                RawTerm::Quoted(text)
            }
            _ => {
                let start = self.pos;
                while self
                    .peek()
                    .is_some_and(|c| !matches!(c, ',' | ')' | '(' | '"'))
                {
                    self.pos += 1;
                }
                let text: String = self.chars[start..self.pos].iter().collect();
                let text = text.trim();
                if text.is_empty() {
                    self.pos = start;
                    return Err(self.error("term"));
                }
                RawTerm::Bare(text.to_owned())
            }
        };
        self.skip_ws();
        Ok(Spanned { term, pos })
    }
}

/// Parses query text into a validated [`NarrativeQuery`].
pub fn parse(text: &str, resolver: &impl EntityResolver) -> Result<NarrativeQuery, ParseError> {
    let mut cur = Cursor {
        chars: text.chars().collect(),
        pos: 0,
    };
    let mut clauses = Vec::new();
    let mut starts = Vec::new();

    cur.skip_ws();
    loop {
        starts.push(cur.pos);
        clauses.push(clause(&mut cur, resolver)?);
        let had_ws = cur.skip_ws();
        if cur.peek().is_none() {
            break;
        }
        if !had_ws || !cur.starts_with("AND") {
            return Err(cur.error("whitespace-separated 'AND' or end of query"));
        }
        cur.pos += 3;
        if !cur.skip_ws() {
            return Err(cur.error("whitespace after 'AND'"));
        }
    }

    let q = NarrativeQuery { clauses };
    validate_query(&q).map_err(|error| {
        let position = match &error {
            QueryError::EmptyQuery => 0,
            QueryError::DisconnectedQuery { clause } => starts[*clause],
            QueryError::ConflictingVariableType { clause, .. } => starts[*clause],
        };
        ParseError::Invalid { error, position }
    })?;
    Ok(q)
}

fn clause(cur: &mut Cursor, resolver: &impl EntityResolver) -> Result<Clause, ParseError> {
    cur.expect('(')?;
    let subject = cur.term()?;
    cur.expect(',')?;
    let predicate = cur.term()?;
    cur.expect(',')?;
    let object = cur.term()?;
    cur.expect(')')?;

    let predicate = match predicate.term {
        RawTerm::Variable { .. } => {
            return Err(ParseError::Syntax {
                position: predicate.pos,
                expected: "predicate name (variables are not allowed here)".into(),
            })
        }
        RawTerm::Quoted(p) | RawTerm::Bare(p) => {
            let p = p.trim().to_owned();
            if !resolver.vocabulary().has_predicate(&p) {
                return Err(ParseError::UnknownPredicate {
                    name: p,
                    position: predicate.pos,
                });
            }
            p
        }
    };

    Ok(Clause {
        subject: resolve_term(subject, false, resolver)?,
        predicate,
        object: resolve_term(object, true, resolver)?,
    })
}

fn resolve_term(t: Spanned, object: bool, resolver: &impl EntityResolver) -> Result<Term, ParseError> {
    let (form, quoted) = match t.term {
        RawTerm::Variable { name, ty } => return Ok(Term::var(name, ty)),
        RawTerm::Quoted(s) => (s, true),
        RawTerm::Bare(s) => (s, false),
    };
    let mut candidates = resolver.vocabulary().resolve_surface(&form);
    match candidates.len() {
        1 => Ok(Term::Entity(candidates.remove(0))),
        0 => {
            let id = EntityRef::new(form.trim());
            if !id.as_str().is_empty() && resolver.knows_id(&id) {
                Ok(Term::Entity(id))
            } else if quoted && object {
                Ok(Term::literal(form))
            } else {
                Err(ParseError::UnknownEntity {
                    form,
                    position: t.pos,
                })
            }
        }
        _ => Err(ParseError::AmbiguousEntity {
            form,
            candidates,
            position: t.pos,
        }),
    }
}

fn bare_safe(s: &str) -> bool {
    !s.is_empty()
        && s.trim() == s
        && !s.starts_with('?')
        && !s.contains([',', '(', ')', '"'])
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn text_form(s: &str) -> String {
    if bare_safe(s) {
        s.to_owned()
    } else {
        quote(s)
    }
}

/// Canonical text for one term. Entities prefer their display name when
/// it resolves back to exactly that entity, falling back to the id.
pub fn render_term(term: &Term, resolver: &impl EntityResolver) -> String {
    match term {
        Term::Variable { name, ty } => format!("?{name}({ty})"),
        Term::Literal(l) => quote(l),
        Term::Entity(id) => {
            let vocab = resolver.vocabulary();
            let name = vocab.display_name(id);
            if vocab.resolve_surface(name) == std::slice::from_ref(id) {
                text_form(name)
            } else {
                text_form(id.as_str())
            }
        }
    }
}

pub fn render_clause(clause: &Clause, resolver: &impl EntityResolver) -> String {
    format!(
        "({}, {}, {})",
        render_term(&clause.subject, resolver),
        text_form(&clause.predicate),
        render_term(&clause.object, resolver)
    )
}

/// Canonical pretty-printer; `parse(render(q)) == q` for queries whose
/// entities have an unambiguous name or id.
pub fn render(q: &NarrativeQuery, resolver: &impl EntityResolver) -> String {
    q.clauses
        .iter()
        .map(|c| render_clause(c, resolver))
        .collect::<Vec<_>>()
        .join(" AND ")
}

/// Wrapper for displaying a query with a resolver at hand.
pub struct Rendered<'a, R>(pub &'a NarrativeQuery, pub &'a R);

impl<R: EntityResolver> fmt::Display for Rendered<'_, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self.0, self.1))
    }
}

//! Conjunctive queries.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::program::{hoist_comparisons, Program};
use crate::rule::{Atom, Literal};
use crate::syntax::{parse_literals, ParseError};
use crate::term::Name;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(Name),
    #[error("predicate `{predicate}` has arity {expected}, but the query uses {found} arguments")]
    ArityMismatch {
        predicate: Name,
        expected: usize,
        found: usize,
    },
    #[error("a query needs at least one atom")]
    NoAtoms,
    #[error("variable ?{0} occurs in a comparison but in no query atom")]
    Unsafe(Name),
}

/// A conjunction of atoms and comparisons. Answer variables are all
/// variables of the atoms, in order of first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    literals: Vec<Literal>,
    answer_vars: Vec<Name>,
}

impl Query {
    /// Builds a query, checking that it has an atom and that every
    /// comparison variable is bound by an atom. Arities are not checked.
    pub fn new(literals: Vec<Literal>) -> Result<Self, QueryError> {
        let mut answer_vars = Vec::new();
        let mut seen = BTreeSet::new();
        for atom in literals.iter().filter_map(Literal::as_atom) {
            for v in atom.variables() {
                if seen.insert(v.clone()) {
                    answer_vars.push(v.clone());
                }
            }
        }
        if !literals.iter().any(|l| l.as_atom().is_some()) {
            return Err(QueryError::NoAtoms);
        }
        for lit in &literals {
            if let Literal::Comparison(c) = lit {
                if let Some(v) = c.variables().find(|v| !seen.contains(*v)) {
                    return Err(QueryError::Unsafe(v.clone()));
                }
            }
        }
        Ok(Query {
            literals: hoist_comparisons(&literals),
            answer_vars,
        })
    }

    /// Literals in evaluation order (comparisons after their binding atoms).
    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.literals.iter().filter_map(Literal::as_atom)
    }

    pub fn answer_vars(&self) -> &[Name] {
        &self.answer_vars
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Parses a query, resolving predicate arities through `arity_of`.
pub fn parse_query_with(
    src: &str,
    arity_of: impl Fn(&str) -> Option<usize>,
) -> Result<Query, QueryError> {
    let literals = parse_literals(src)?;
    for atom in literals.iter().filter_map(Literal::as_atom) {
        match arity_of(&atom.predicate) {
            None => return Err(QueryError::UnknownPredicate(atom.predicate.clone())),
            Some(expected) if expected != atom.arity() => {
                return Err(QueryError::ArityMismatch {
                    predicate: atom.predicate.clone(),
                    expected,
                    found: atom.arity(),
                })
            }
            Some(_) => {}
        }
    }
    Query::new(literals)
}

/// Parses a query against the predicates of `program`.
pub fn parse_query(src: &str, program: &Program) -> Result<Query, QueryError> {
    parse_query_with(src, |p| program.arity(p))
}

//! Atoms, literals, rules and ground facts.

use std::collections::BTreeSet;
use std::fmt;

use crate::term::{CmpOp, Constant, Name, Term};

/// Predicate name reserved for the unary form of the triple encoding.
pub const ISA: &str = "isa";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: Name,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<Name>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Name> {
        self.args.iter().filter_map(Term::as_variable)
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| t.as_constant().is_some())
    }

    /// The fact this atom denotes, if it is ground.
    pub fn to_fact(&self) -> Option<Fact> {
        let args = self
            .args
            .iter()
            .map(|t| t.as_constant().cloned())
            .collect::<Option<Vec<_>>>()?;
        Some(Fact {
            predicate: self.predicate.clone(),
            args,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Comparison {
    pub left: Term,
    pub op: CmpOp,
    pub right: Term,
}

impl Comparison {
    pub fn variables(&self) -> impl Iterator<Item = &Name> {
        [&self.left, &self.right]
            .into_iter()
            .filter_map(Term::as_variable)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op, self.right)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Literal {
    Atom(Atom),
    Comparison(Comparison),
}

impl Literal {
    pub fn as_atom(&self) -> Option<&Atom> {
        match self {
            Literal::Atom(a) => Some(a),
            Literal::Comparison(_) => None,
        }
    }

    pub fn variables(&self) -> Box<dyn Iterator<Item = &Name> + '_> {
        match self {
            Literal::Atom(a) => Box::new(a.variables()),
            Literal::Comparison(c) => Box::new(c.variables()),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Atom(a) => a.fmt(f),
            Literal::Comparison(c) => c.fmt(f),
        }
    }
}

/// A rule as written in source: possibly several head atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub heads: Vec<Atom>,
    pub body: Vec<Literal>,
    /// 1-based source line where the clause starts (0 when built in code).
    pub line: usize,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_rule(f, &self.heads, &self.body)
    }
}

/// A Horn rule with exactly one head atom. An empty body asserts the head.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Literal>) -> Self {
        Rule { head, body }
    }

    pub fn body_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().filter_map(Literal::as_atom)
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    /// Variables bound by the positive body atoms.
    pub fn bound_variables(&self) -> BTreeSet<&Name> {
        self.body_atoms().flat_map(Atom::variables).collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_rule(f, std::slice::from_ref(&self.head), &self.body)
    }
}

fn write_rule(f: &mut fmt::Formatter<'_>, heads: &[Atom], body: &[Literal]) -> fmt::Result {
    for (i, h) in heads.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{h}")?;
    }
    if !body.is_empty() {
        f.write_str(" :- ")?;
        for (i, l) in body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
    }
    f.write_str(".")
}

/// A ground atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub predicate: Name,
    pub args: Vec<Constant>,
}

impl Fact {
    pub fn new(predicate: impl Into<Name>, args: Vec<Constant>) -> Self {
        Fact {
            predicate: predicate.into(),
            args,
        }
    }

    /// Triple encoding: `C(a)` becomes `(a, isa, C)` and `p(a,b)` becomes `(a, p, b)`.
    pub fn to_triple(&self) -> (Constant, Name, Constant) {
        match self.args.as_slice() {
            [a] => (a.clone(), ISA.into(), Constant::Symbol(self.predicate.clone())),
            [a, b] => (a.clone(), self.predicate.clone(), b.clone()),
            _ => panic!("fact {self} has arity {}", self.args.len()),
        }
    }

    /// Inverse of [`Fact::to_triple`].
    pub fn from_triple(subject: Constant, predicate: &str, object: Constant) -> Option<Fact> {
        if predicate == ISA {
            match object {
                Constant::Symbol(class) => Some(Fact::new(class, vec![subject])),
                _ => None,
            }
        } else {
            Some(Fact::new(predicate, vec![subject, object]))
        }
    }

    pub fn to_atom(&self) -> Atom {
        Atom::new(
            self.predicate.clone(),
            self.args.iter().cloned().map(Term::Constant).collect(),
        )
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_atom().fmt(f)
    }
}

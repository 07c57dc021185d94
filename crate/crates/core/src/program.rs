//! Normalized rule sets: Lloyd–Topor head splitting, safety and arity
//! validation, essential/derived classification and predicate dependencies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::query::Query;
use crate::rule::{Atom, Clause, Literal, Rule, ISA};
use crate::syntax::{parse_clauses, ParseError};
use crate::term::{is_identifier, Name};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// A head variable that no positive body atom binds.
    Head,
    /// A comparison variable that no positive body atom binds.
    Comparison,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyViolation {
    /// Index of the offending rule in the normalized rule list.
    pub rule: usize,
    pub rule_text: String,
    pub variable: Name,
    pub kind: ViolationKind,
}

impl fmt::Display for SafetyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let place = match self.kind {
            ViolationKind::Head => "in the head",
            ViolationKind::Comparison => "in a comparison",
        };
        write!(
            f,
            "rule {} `{}`: variable ?{} occurs {place} but in no body atom",
            self.rule, self.rule_text, self.variable
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("predicate `{predicate}` used with arity {found}, but it has arity {expected}")]
    ArityConflict {
        predicate: Name,
        expected: usize,
        found: usize,
    },
    #[error("predicate name `{0}` is reserved")]
    ReservedName(Name),
    #[error("unsafe rules:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Unsafe(Vec<SafetyViolation>),
}

/// Splits a clause with a conjunctive head into one rule per head atom, each
/// carrying the full body. Head order is preserved.
pub fn lloyd_topor_split(clause: &Clause) -> Vec<Rule> {
    clause
        .heads
        .iter()
        .map(|h| Rule::new(h.clone(), clause.body.clone()))
        .collect()
}

/// Datalog safety: every head variable and comparison variable must occur in
/// a positive body atom. `index` is used only to label violations.
pub fn check_safety(rule: &Rule, index: usize) -> Result<(), Vec<SafetyViolation>> {
    let bound = rule.bound_variables();
    let mut seen = BTreeSet::new();
    let mut violations = Vec::new();
    let mut report = |v: &Name, kind| {
        if !bound.contains(v) && seen.insert(v.clone()) {
            violations.push(SafetyViolation {
                rule: index,
                rule_text: rule.to_string(),
                variable: v.clone(),
                kind,
            });
        }
    };
    for v in rule.head.variables() {
        report(v, ViolationKind::Head);
    }
    for lit in &rule.body {
        if let Literal::Comparison(c) = lit {
            for v in c.variables() {
                report(v, ViolationKind::Comparison);
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Reorders a body so that every comparison sits directly after the atom
/// that binds its last unbound variable. Atoms keep their relative order.
/// Comparisons whose variables are never bound go last.
pub fn hoist_comparisons(body: &[Literal]) -> Vec<Literal> {
    let mut pending: Vec<&Literal> = body
        .iter()
        .filter(|l| matches!(l, Literal::Comparison(_)))
        .collect();
    let mut bound: BTreeSet<&Name> = BTreeSet::new();
    let mut out = Vec::with_capacity(body.len());
    let flush = |bound: &BTreeSet<&Name>, pending: &mut Vec<&Literal>, out: &mut Vec<Literal>| {
        pending.retain(|l| {
            if l.variables().all(|v| bound.contains(v)) {
                out.push((*l).clone());
                false
            } else {
                true
            }
        });
    };
    flush(&bound, &mut pending, &mut out);
    for lit in body {
        if let Literal::Atom(a) = lit {
            out.push(lit.clone());
            bound.extend(a.variables());
            flush(&bound, &mut pending, &mut out);
        }
    }
    out.extend(pending.into_iter().cloned());
    out
}

/// Tracks one arity per predicate name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Arities(BTreeMap<Name, usize>);

impl Arities {
    pub fn register(&mut self, predicate: &Name, arity: usize) -> Result<(), ProgramError> {
        match self.0.get(predicate) {
            Some(&expected) if expected != arity => Err(ProgramError::ArityConflict {
                predicate: predicate.clone(),
                expected,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.0.insert(predicate.clone(), arity);
                Ok(())
            }
        }
    }

    pub fn get(&self, predicate: &str) -> Option<usize> {
        self.0.get(predicate).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }
}

/// A validated, normalized rule set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    rules: Vec<Rule>,
    arities: Arities,
    derived: BTreeSet<Name>,
}

impl Program {
    /// Validates arities and safety and hoists comparisons. Rules are kept
    /// in the given order.
    pub fn new(rules: Vec<Rule>) -> Result<Self, ProgramError> {
        let mut arities = Arities::default();
        let mut violations = Vec::new();
        let mut normalized = Vec::with_capacity(rules.len());
        for (i, rule) in rules.into_iter().enumerate() {
            for atom in std::iter::once(&rule.head).chain(rule.body_atoms()) {
                arities.register(&atom.predicate, atom.arity())?;
            }
            if let Err(v) = check_safety(&rule, i) {
                violations.extend(v);
            }
            normalized.push(Rule::new(rule.head.clone(), hoist_comparisons(&rule.body)));
        }
        if !violations.is_empty() {
            return Err(ProgramError::Unsafe(violations));
        }
        let derived = normalized.iter().map(|r| r.head.predicate.clone()).collect();
        Ok(Program {
            rules: normalized,
            arities,
            derived,
        })
    }

    /// Applies Lloyd–Topor splitting to each clause, then [`Program::new`].
    pub fn from_clauses(clauses: &[Clause]) -> Result<Self, ProgramError> {
        Program::new(clauses.iter().flat_map(lloyd_topor_split).collect())
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn arities(&self) -> &Arities {
        &self.arities
    }

    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.arities.get(predicate)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &Name> {
        self.arities.0.keys()
    }

    /// A predicate is derived iff it heads some rule.
    pub fn is_derived(&self, predicate: &str) -> bool {
        self.derived.contains(predicate)
    }

    /// Essential predicates are those no rule can derive. Predicates the
    /// program has never seen are essential too.
    pub fn is_essential(&self, predicate: &str) -> bool {
        !self.is_derived(predicate)
    }

    pub fn derived_predicates(&self) -> impl Iterator<Item = &Name> {
        self.derived.iter()
    }

    pub fn essential_predicates(&self) -> impl Iterator<Item = &Name> {
        self.predicates().filter(|p| !self.derived.contains(*p))
    }

    pub fn rules_for<'a>(&'a self, predicate: &'a str) -> impl Iterator<Item = (usize, &'a Rule)> {
        self.rules
            .iter()
            .enumerate()
            .filter(move |(_, r)| &*r.head.predicate == predicate)
    }

    pub fn dependency_graph(&self) -> DependencyGraph {
        dependency_graph(self)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

fn check_reserved(clauses: &[Clause]) -> Result<(), ProgramError> {
    for c in clauses {
        let atoms = c.heads.iter().chain(c.body.iter().filter_map(Literal::as_atom));
        for Atom { predicate, .. } in atoms {
            if &**predicate == ISA || !is_identifier(predicate) {
                return Err(ProgramError::ReservedName(predicate.clone()));
            }
        }
    }
    Ok(())
}

/// Parses rule-language source into a normalized [`Program`].
pub fn parse_program(src: &str) -> Result<Program, ProgramError> {
    let clauses = parse_clauses(src)?;
    check_reserved(&clauses)?;
    Program::from_clauses(&clauses)
}

/// Predicate dependencies: an edge `p -> q` means some rule for `p` uses `q`
/// in its body. Node and edge iteration order is lexicographic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    edges: BTreeMap<Name, BTreeSet<Name>>,
}

impl DependencyGraph {
    pub fn nodes(&self) -> impl Iterator<Item = &Name> {
        self.edges.keys()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Name, &Name)> {
        self.edges
            .iter()
            .flat_map(|(from, tos)| tos.iter().map(move |to| (from, to)))
    }

    pub fn successors(&self, predicate: &str) -> impl Iterator<Item = &Name> {
        self.edges.get(predicate).into_iter().flatten()
    }

    /// Every predicate reachable from `roots`, roots included.
    pub fn reachable<'a>(&self, roots: impl IntoIterator<Item = &'a Name>) -> BTreeSet<Name> {
        let mut seen: BTreeSet<Name> = BTreeSet::new();
        let mut stack: Vec<Name> = roots.into_iter().cloned().collect();
        while let Some(p) = stack.pop() {
            if seen.insert(p.clone()) {
                stack.extend(self.successors(&p).cloned());
            }
        }
        seen
    }
}

pub fn dependency_graph(program: &Program) -> DependencyGraph {
    let mut edges: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
    for p in program.predicates() {
        edges.entry(p.clone()).or_default();
    }
    for rule in program.rules() {
        let out = edges.entry(rule.head.predicate.clone()).or_default();
        out.extend(rule.body_atoms().map(|a| a.predicate.clone()));
    }
    DependencyGraph { edges }
}

/// Predicates a query can depend on: reachability from its atoms' predicates.
pub fn relevant_closure(query: &Query, program: &Program) -> BTreeSet<Name> {
    dependency_graph(program).reachable(query.atoms().map(|a| &a.predicate))
}

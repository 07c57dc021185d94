//! Mapping declarations binding essential predicates to relational
//! selections, and fact fetching through them.
//!
//! ```text
//! map Man(?id) <- from persons where age > 21 and gender = 'Male' select id.
//! map hasAge(?id,?a) <- from persons select id, age.
//! ```
//!
//! Several mappings for one predicate contribute the union of their rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::magic::Adornment;
use crate::program::{Arities, Program, ProgramError};
use crate::relstore::{
    evaluate_selection, Catalog, ColumnRef, Condition, Operand, RelError, Selection,
};
use crate::rule::{Atom, Fact};
use crate::syntax::{ParseError, Parser, Tok};
use crate::term::{Constant, Name};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("mapping at line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: RelError,
    },
    #[error("mapping at line {line}: `{atom}` must take distinct variables")]
    BadTarget { line: usize, atom: String },
    #[error("mapping at line {line}: `{predicate}` has arity {arity} but selects {width} columns")]
    WidthMismatch {
        line: usize,
        predicate: Name,
        arity: usize,
        width: usize,
    },
    #[error(transparent)]
    Arity(#[from] ProgramError),
    #[error("predicate `{0}` has no mapping")]
    Unmapped(Name),
    #[error("pattern `{pattern}` does not fit `{predicate}` with {bound} bound value(s)")]
    PatternMismatch {
        predicate: Name,
        pattern: Adornment,
        bound: usize,
    },
    #[error(transparent)]
    Relational(#[from] RelError),
}

/// `selection => predicate`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingRule {
    pub target: Atom,
    pub selection: Selection,
    pub line: usize,
}

impl MappingRule {
    pub fn predicate(&self) -> &Name {
        &self.target.predicate
    }

    pub fn arity(&self) -> usize {
        self.target.arity()
    }
}

impl fmt::Display for MappingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "map {} <- {}.", self.target, self.selection)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MappingSet {
    rules: Vec<MappingRule>,
    by_predicate: BTreeMap<Name, Vec<usize>>,
    arities: Arities,
}

impl MappingSet {
    pub fn new() -> Self {
        MappingSet::default()
    }

    pub fn push(&mut self, rule: MappingRule) -> Result<(), MappingError> {
        self.arities.register(rule.predicate(), rule.arity())?;
        self.by_predicate
            .entry(rule.predicate().clone())
            .or_default()
            .push(self.rules.len());
        self.rules.push(rule);
        Ok(())
    }

    pub fn rules(&self) -> &[MappingRule] {
        &self.rules
    }

    pub fn rules_for(&self, predicate: &str) -> impl Iterator<Item = &MappingRule> {
        self.by_predicate
            .get(predicate)
            .into_iter()
            .flatten()
            .map(|&i| &self.rules[i])
    }

    pub fn is_mapped(&self, predicate: &str) -> bool {
        self.by_predicate.contains_key(predicate)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &Name> {
        self.by_predicate.keys()
    }

    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.arities.get(predicate)
    }

    /// Fails if a mapped predicate is used with another arity in `program`.
    pub fn check_arities(&self, program: &Program) -> Result<(), MappingError> {
        for (p, arity) in self.arities.iter() {
            if let Some(expected) = program.arity(p) {
                if expected != arity {
                    return Err(ProgramError::ArityConflict {
                        predicate: p.clone(),
                        expected,
                        found: arity,
                    }
                    .into());
                }
            }
        }
        Ok(())
    }
}

fn column_ref(p: &mut Parser) -> Result<ColumnRef, ParseError> {
    let first = p.name("a column name")?;
    // `t.c` only when the dot touches both names; `c.` ends the mapping
    if *p.peek() == Tok::Dot
        && p.touches_previous()
        && p.adjacent_to_next()
        && matches!(p.peek_at(1), Tok::Ident(_))
    {
        p.advance();
        let column = p.name("a column name")?;
        return Ok(ColumnRef::new(Some(&first), &column));
    }
    Ok(ColumnRef::new(None, &first))
}

fn mapping(p: &mut Parser, catalog: &Catalog) -> Result<MappingRule, MappingError> {
    let line = p.token().line;
    p.keyword("map")?;
    let target = p.atom()?;
    let mut vars = BTreeSet::new();
    if !target
        .args
        .iter()
        .all(|t| t.as_variable().is_some_and(|v| vars.insert(v.clone())))
    {
        return Err(MappingError::BadTarget {
            line,
            atom: target.to_string(),
        });
    }
    p.expect(Tok::LeftArrow, "`<-`")?;
    p.keyword("from")?;
    let mut tables: Vec<Name> = vec![p.name("a table name")?.into()];
    while p.eat(&Tok::Comma) {
        tables.push(p.name("a table name")?.into());
    }

    let mut raw_conditions = Vec::new();
    if p.at_keyword("where") {
        p.advance();
        loop {
            let left = column_ref(p)?;
            let op = match p.peek() {
                Tok::Cmp(op) => *op,
                _ => return Err(p.unexpected("a comparison operator").into()),
            };
            p.advance();
            let right = match p.peek().clone() {
                Tok::Ident(_) => RawOperand::Name(column_ref(p)?),
                _ => RawOperand::Const(p.constant()?),
            };
            raw_conditions.push((left, op, right));
            if p.at_keyword("and") {
                p.advance();
            } else {
                break;
            }
        }
    }
    p.keyword("select")?;
    let mut result = vec![column_ref(p)?];
    while p.eat(&Tok::Comma) {
        if result.len() == 2 {
            return Err(p.error_here("a mapping selects at most two columns").into());
        }
        result.push(column_ref(p)?);
    }
    p.expect(Tok::Dot, "`.`")?;

    let probe = Selection {
        result: result.clone(),
        tables: tables.clone(),
        conditions: Vec::new(),
    };
    let invalid = |source| MappingError::Invalid { line, source };
    probe.validate(catalog).map_err(invalid)?;

    // A bare name on the right is a column if it resolves to one, else a symbol.
    let conditions = raw_conditions
        .into_iter()
        .map(|(left, op, right)| {
            let right = match right {
                RawOperand::Const(c) => Operand::Const(c),
                RawOperand::Name(r) => {
                    let as_column = Selection {
                        result: vec![r.clone()],
                        ..probe.clone()
                    };
                    match (as_column.validate(catalog), &r.table) {
                        (Ok(()), _) | (Err(_), Some(_)) => Operand::Column(r),
                        (Err(_), None) => Operand::Const(Constant::Symbol(r.column)),
                    }
                }
            };
            Condition { left, op, right }
        })
        .collect();
    let selection = Selection {
        result,
        tables,
        conditions,
    };
    selection.validate(catalog).map_err(invalid)?;
    if selection.result.len() != target.arity() {
        return Err(MappingError::WidthMismatch {
            line,
            predicate: target.predicate.clone(),
            arity: target.arity(),
            width: selection.result.len(),
        });
    }
    Ok(MappingRule {
        target,
        selection,
        line,
    })
}

enum RawOperand {
    Const(Constant),
    Name(ColumnRef),
}

/// Parses and validates mapping declarations against `catalog`.
pub fn parse_mappings(src: &str, catalog: &Catalog) -> Result<MappingSet, MappingError> {
    let mut p = Parser::new(src)?;
    let mut set = MappingSet::new();
    while !p.at_eof() {
        let rule = mapping(&mut p, catalog)?;
        set.push(rule)?;
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CoverageNote {
    /// An essential predicate has no mapping; it will always be empty.
    Unmapped(Name),
    /// A derived predicate also has a mapping; both sources contribute.
    MappedDerived(Name),
}

impl CoverageNote {
    pub fn is_warning(&self) -> bool {
        matches!(self, CoverageNote::Unmapped(_))
    }
}

impl fmt::Display for CoverageNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageNote::Unmapped(p) => write!(f, "warning: essential predicate `{p}` has no mapping"),
            CoverageNote::MappedDerived(p) => write!(
                f,
                "note: derived predicate `{p}` is also mapped; its facts combine both sources"
            ),
        }
    }
}

/// Coverage of the program's essential predicates by mappings.
pub fn validate_coverage(mappings: &MappingSet, program: &Program) -> Vec<CoverageNote> {
    let mut notes: Vec<CoverageNote> = program
        .essential_predicates()
        .filter(|p| !mappings.is_mapped(p))
        .map(|p| CoverageNote::Unmapped(p.clone()))
        .collect();
    notes.extend(
        program
            .derived_predicates()
            .filter(|p| mappings.is_mapped(p))
            .map(|p| CoverageNote::MappedDerived(p.clone())),
    );
    notes
}

/// Fetches the facts of `predicate` whose `b` positions equal `bound`.
pub fn fetch(
    predicate: &str,
    pattern: &Adornment,
    bound: &[Constant],
    mappings: &MappingSet,
    catalog: &Catalog,
) -> Result<BTreeSet<Fact>, MappingError> {
    let arity = mappings
        .arity(predicate)
        .ok_or_else(|| MappingError::Unmapped(predicate.into()))?;
    let positions: Vec<usize> = pattern.bound_positions().collect();
    if pattern.len() != arity || positions.len() != bound.len() {
        return Err(MappingError::PatternMismatch {
            predicate: predicate.into(),
            pattern: pattern.clone(),
            bound: bound.len(),
        });
    }
    let extra: Vec<(usize, Constant)> = positions.into_iter().zip(bound.iter().cloned()).collect();
    let name: Name = predicate.into();
    let mut facts = BTreeSet::new();
    for rule in mappings.rules_for(predicate) {
        for row in evaluate_selection(&rule.selection, catalog, &extra)? {
            facts.insert(Fact {
                predicate: name.clone(),
                args: row,
            });
        }
    }
    Ok(facts)
}

/// Loads the full extension of every mapped predicate in `predicates`.
/// Unmapped predicates are skipped and returned alongside the facts.
pub fn materialize_all<'a>(
    predicates: impl IntoIterator<Item = &'a Name>,
    mappings: &MappingSet,
    catalog: &Catalog,
) -> Result<(BTreeSet<Fact>, Vec<Name>), MappingError> {
    let mut facts = BTreeSet::new();
    let mut skipped = Vec::new();
    for p in predicates {
        match mappings.arity(p) {
            Some(arity) => facts.extend(fetch(p, &Adornment::free(arity), &[], mappings, catalog)?),
            None => skipped.push(p.clone()),
        }
    }
    Ok((facts, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;
    use crate::relstore::{ColumnType, TableSchema};

    pub(crate) fn persons_catalog() -> Catalog {
        let mut cat = Catalog::new();
        let schema = TableSchema::new(
            "persons",
            &[
                ("id", ColumnType::Int),
                ("name", ColumnType::Str),
                ("age", ColumnType::Int),
                ("gender", ColumnType::Str),
            ],
        )
        .unwrap();
        let row = |id, name: &str, age, g: &str| {
            vec![
                Constant::Integer(id),
                Constant::text(name),
                Constant::Integer(age),
                Constant::text(g),
            ]
        };
        cat.add_table(
            schema,
            vec![
                row(1, "Ann", 30, "Female"),
                row(2, "Bob", 45, "Male"),
                row(3, "Cal", 15, "Male"),
            ],
        )
        .unwrap();
        cat
    }

    const PERSONS_MAP: &str = "map Man(?id) <- from persons where age > 21 and gender = 'Male' select id.\n\
                               map hasAge(?id,?a) <- from persons select id, age.";

    fn fact(p: &str, args: &[i64]) -> Fact {
        Fact::new(p, args.iter().map(|&i| Constant::Integer(i)).collect())
    }

    fn ad(s: &str) -> Adornment {
        s.parse().unwrap()
    }

    #[test]
    fn parses_constrained_mappings() {
        let cat = persons_catalog();
        let m = parse_mappings(PERSONS_MAP, &cat).unwrap();
        assert_eq!(m.rules().len(), 2);
        assert_eq!(m.arity("Man"), Some(1));
        assert_eq!(m.arity("hasAge"), Some(2));
        assert_eq!(
            m.rules()[0].to_string(),
            "map Man(?id) <- from persons where age > 21 and gender = 'Male' select id."
        );
    }

    #[test]
    fn arity_errors() {
        let cat = persons_catalog();
        let src = "map Man(?id) <- from persons select id.\nmap Man(?a,?b) <- from persons select id, age.";
        assert!(matches!(
            parse_mappings(src, &cat),
            Err(MappingError::Arity(ProgramError::ArityConflict { .. }))
        ));
        assert!(matches!(
            parse_mappings("map Man(?id) <- from persons select id, age.", &cat),
            Err(MappingError::WidthMismatch { .. })
        ));
        let m = parse_mappings("map Man(?a,?b) <- from persons select id, age.", &cat).unwrap();
        let program = parse_program("Adult(?x) :- Man(?x).").unwrap();
        assert!(m.check_arities(&program).is_err());
    }

    #[test]
    fn rejects_unknown_columns_and_bad_targets() {
        let cat = persons_catalog();
        assert!(matches!(
            parse_mappings("map Man(?id) <- from persons select salary.", &cat),
            Err(MappingError::Invalid { .. })
        ));
        assert!(matches!(
            parse_mappings("map Man(?id) <- from people select id.", &cat),
            Err(MappingError::Invalid { .. })
        ));
        assert!(matches!(
            parse_mappings("map Man(bob) <- from persons select id.", &cat),
            Err(MappingError::BadTarget { .. })
        ));
        assert!(matches!(
            parse_mappings("map Man(?id) <- from persons where age > 'x' select id.", &cat),
            Err(MappingError::Invalid { .. })
        ));
        assert!(matches!(
            parse_mappings("map Man(?id) <- persons select id.", &cat),
            Err(MappingError::Syntax(_))
        ));
    }

    #[test]
    fn qualified_columns_and_symbol_operands() {
        let mut cat = persons_catalog();
        let schema = TableSchema::new("roles", &[("pid", ColumnType::Int), ("role", ColumnType::Sym)]).unwrap();
        cat.add_table(
            schema,
            vec![
                vec![Constant::Integer(2), Constant::symbol("director")],
                vec![Constant::Integer(3), Constant::symbol("clerk")],
            ],
        )
        .unwrap();
        let m = parse_mappings(
            "map Director(?n) <- from persons, roles where persons.id = roles.pid and role = director select persons.name.",
            &cat,
        )
        .unwrap();
        let facts = fetch("Director", &ad("f"), &[], &m, &cat).unwrap();
        assert_eq!(
            facts.into_iter().collect::<Vec<_>>(),
            vec![Fact::new("Director", vec![Constant::text("Bob")])]
        );
    }

    #[test]
    fn fetch_examples() {
        let cat = persons_catalog();
        let m = parse_mappings(PERSONS_MAP, &cat).unwrap();
        let got = fetch("Man", &ad("f"), &[], &m, &cat).unwrap();
        assert_eq!(got, BTreeSet::from([fact("Man", &[2])]));
        let got = fetch("hasAge", &ad("bf"), &[Constant::Integer(2)], &m, &cat).unwrap();
        assert_eq!(got, BTreeSet::from([fact("hasAge", &[2, 45])]));
        let got = fetch("Man", &ad("b"), &[Constant::Integer(1)], &m, &cat).unwrap();
        assert!(got.is_empty());

        assert!(matches!(
            fetch("Woman", &ad("f"), &[], &m, &cat),
            Err(MappingError::Unmapped(_))
        ));
        assert!(matches!(
            fetch("Man", &ad("b"), &[], &m, &cat),
            Err(MappingError::PatternMismatch { .. })
        ));
        assert!(matches!(
            fetch("Man", &ad("bf"), &[Constant::Integer(1)], &m, &cat),
            Err(MappingError::PatternMismatch { .. })
        ));
    }

    #[test]
    fn materialize_examples() {
        let cat = persons_catalog();
        let m = parse_mappings(PERSONS_MAP, &cat).unwrap();
        let preds: Vec<Name> = vec!["Man".into(), "hasAge".into()];
        let (facts, skipped) = materialize_all(&preds, &m, &cat).unwrap();
        assert!(skipped.is_empty());
        assert_eq!(
            facts,
            BTreeSet::from([
                fact("Man", &[2]),
                fact("hasAge", &[1, 30]),
                fact("hasAge", &[2, 45]),
                fact("hasAge", &[3, 15]),
            ])
        );
        let (facts, _) = materialize_all(&[], &m, &cat).unwrap();
        assert!(facts.is_empty());
        let preds: Vec<Name> = vec!["Man".into(), "Adult".into()];
        let (facts, skipped) = materialize_all(&preds, &m, &cat).unwrap();
        assert_eq!(facts.len(), 1);
        assert_eq!(skipped, vec![Name::from("Adult")]);
    }

    #[test]
    fn union_of_mappings() {
        let cat = persons_catalog();
        let both = "map Young(?id) <- from persons where age < 20 select id.\n\
                    map Young(?id) <- from persons where gender = 'Female' select id.";
        let m = parse_mappings(both, &cat).unwrap();
        let got = fetch("Young", &ad("f"), &[], &m, &cat).unwrap();
        assert_eq!(got, BTreeSet::from([fact("Young", &[1]), fact("Young", &[3])]));
    }

    #[test]
    fn coverage() {
        let mut cat = Catalog::new();
        cat.add_table(
            TableSchema::new("mothers", &[("name", ColumnType::Sym)]).unwrap(),
            vec![vec![Constant::symbol("mary")]],
        )
        .unwrap();
        let program = parse_program(
            "Woman(?x) :- Mother(?x).\nPerson(?x) :- Woman(?x).\nParent(?x) :- hasChild(?x,?y).",
        )
        .unwrap();
        let m = parse_mappings("map Mother(?x) <- from mothers select name.", &cat).unwrap();
        assert_eq!(
            validate_coverage(&m, &program),
            vec![CoverageNote::Unmapped("hasChild".into())]
        );

        let program = parse_program("Woman(?x) :- Mother(?x).\nPerson(?x) :- Woman(?x).").unwrap();
        assert!(validate_coverage(&m, &program).is_empty());

        let m = parse_mappings(
            "map Mother(?x) <- from mothers select name.\nmap Person(?x) <- from mothers select name.",
            &cat,
        )
        .unwrap();
        let notes = validate_coverage(&m, &program);
        assert_eq!(notes, vec![CoverageNote::MappedDerived("Person".into())]);
        assert!(!notes[0].is_warning());
    }
}

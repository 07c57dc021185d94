//! End-to-end query answering.
//!
//! * `forward` loads every relevant mapped predicate, then runs semi-naive
//!   evaluation of the relevant rules.
//! * `magic` loads the same facts but evaluates the magic-rewritten program.
//! * `hybrid` evaluates the rewritten program from its seeds alone and
//!   fetches facts only when magic trigger facts ask for them.
//! * `naive` is `forward` with the naive fixpoint, kept as a reference.
//!
//! A derived predicate that is also mapped reads its mapped rows through an
//! essential stand-in `db$p` and the rule `p(..) :- db$p(..)`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use crate::magic::FetchGoal;

use crate::engine::{
    match_literals, naive_evaluate, seminaive_evaluate, EngineError, EvalOptions, EvalStats,
    FactSource,
};
use crate::magic::{goals_by_trigger, magic_transform, Adornment};
use crate::mapping::{fetch, parse_mappings, MappingError, MappingSet};
use crate::program::{parse_program, relevant_closure, Program, ProgramError};
use crate::query::{parse_query_with, Query, QueryError};
use crate::relstore::{Catalog, RelError};
use crate::rule::{Atom, Fact, Literal, Rule};
use crate::term::{Constant, Name, Term};

const DB_PREFIX: &str = "db$";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Naive,
    Forward,
    Magic,
    Hybrid,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Naive, Mode::Forward, Mode::Magic, Mode::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Naive => "naive",
            Mode::Forward => "forward",
            Mode::Magic => "magic",
            Mode::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown mode `{0}` (expected naive, forward, magic or hybrid)")]
pub struct UnknownMode(pub String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, UnknownMode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMode(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnswerError {
    #[error("essential predicate(s) without a mapping: {}", join(.0))]
    Unmapped(Vec<Name>),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

fn join(names: &[Name]) -> String {
    names.iter().map(|n| n.as_ref()).collect::<Vec<_>>().join(", ")
}

/// Sorted, duplicate-free answer tuples with the counters of the run that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerSet {
    pub vars: Vec<Name>,
    pub tuples: Vec<Vec<Constant>>,
    pub stats: EvalStats,
}

impl AnswerSet {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Header of `?var` names, one tab-separated line per tuple, and with
    /// `stats` the deterministic counters after a blank line.
    pub fn to_tsv(&self, stats: bool) -> String {
        let mut out = self
            .vars
            .iter()
            .map(|v| format!("?{v}"))
            .collect::<Vec<_>>()
            .join("\t");
        out.push('\n');
        for t in &self.tuples {
            let row: Vec<String> = t.iter().map(Constant::to_string).collect();
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        if stats {
            out.push('\n');
            out.push_str(&self.stats.counters_tsv());
        }
        out
    }
}

impl fmt::Display for AnswerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_tsv(false))
    }
}

/// Name under which the mapping for `predicate` is registered.
fn mapped_name(predicate: &str) -> &str {
    predicate.strip_prefix(DB_PREFIX).unwrap_or(predicate)
}

/// Adds `p(..) :- db$p(..)` for every derived predicate that is also mapped.
pub fn augment(program: &Program, mappings: &MappingSet) -> Result<Program, ProgramError> {
    let mut rules = program.rules().to_vec();
    for p in program.derived_predicates().filter(|p| mappings.is_mapped(p)) {
        let arity = program.arity(p).expect("derived predicates have an arity");
        let args: Vec<Term> = ["x", "y"][..arity].iter().map(|v| Term::var(v)).collect();
        rules.push(Rule::new(
            Atom::new(p.clone(), args.clone()),
            vec![Literal::Atom(Atom::new(format!("{DB_PREFIX}{p}"), args))],
        ));
    }
    Program::new(rules)
}

fn is_mapped(predicate: &str, mappings: &MappingSet) -> bool {
    mappings.is_mapped(mapped_name(predicate))
}

/// Essential predicates the query depends on, failing on any that lacks a
/// mapping.
fn needed_essentials(query: &Query, program: &Program, mappings: &MappingSet) -> Result<Vec<Name>, AnswerError> {
    let essentials: Vec<Name> = relevant_closure(query, program)
        .into_iter()
        .filter(|p| program.is_essential(p))
        .collect();
    let gaps: Vec<Name> = essentials
        .iter()
        .filter(|p| !is_mapped(p, mappings))
        .cloned()
        .collect();
    if gaps.is_empty() {
        Ok(essentials)
    } else {
        Err(AnswerError::Unmapped(gaps))
    }
}

fn fetch_as(
    predicate: &Name,
    pattern: &Adornment,
    bound: &[Constant],
    mappings: &MappingSet,
    catalog: &Catalog,
) -> Result<BTreeSet<Fact>, MappingError> {
    let source = mapped_name(predicate);
    let facts = fetch(source, pattern, bound, mappings, catalog)?;
    if source.len() == predicate.len() {
        return Ok(facts);
    }
    Ok(facts
        .into_iter()
        .map(|f| Fact::new(predicate.clone(), f.args))
        .collect())
}

fn load_all(predicates: &[Name], mappings: &MappingSet, catalog: &Catalog) -> Result<BTreeSet<Fact>, MappingError> {
    let mut facts = BTreeSet::new();
    for p in predicates {
        let arity = mappings
            .arity(mapped_name(p))
            .ok_or_else(|| MappingError::Unmapped(p.clone()))?;
        facts.extend(fetch_as(p, &Adornment::free(arity), &[], mappings, catalog)?);
    }
    Ok(facts)
}

fn relevant_rules(query: &Query, program: &Program) -> Result<Program, ProgramError> {
    let relevant = relevant_closure(query, program);
    Program::new(
        program
            .rules()
            .iter()
            .filter(|r| relevant.contains(&r.head.predicate))
            .cloned()
            .collect(),
    )
}

/// Fetches on demand: every new trigger fact runs its goal's selection once
/// with the trigger's values bound.
struct HybridSource<'a> {
    goals: BTreeMap<Name, &'a FetchGoal>,
    /// predicates already loaded in full
    full: BTreeSet<Name>,
    seen: HashSet<(Name, Vec<Constant>)>,
    mappings: &'a MappingSet,
    catalog: &'a Catalog,
}

impl FactSource for HybridSource<'_> {
    fn is_trigger(&self, predicate: &str) -> bool {
        self.goals.contains_key(predicate)
    }

    fn on_trigger(&mut self, predicate: &str, args: &[Constant]) -> Result<Vec<Fact>, EngineError> {
        let goal = self.goals[predicate];
        // the trigger name fixes both predicate and adornment
        if self.full.contains(&goal.predicate) || !self.seen.insert((predicate.into(), args.to_vec())) {
            return Ok(Vec::new());
        }
        let facts = fetch_as(&goal.predicate, &goal.adornment, args, self.mappings, self.catalog)?;
        Ok(facts.into_iter().collect())
    }
}

/// The fetch goals a hybrid evaluation of `query` would use, in a fixed
/// order.
pub fn plan_fetch(query: &Query, program: &Program, mappings: &MappingSet) -> Result<Vec<FetchGoal>, AnswerError> {
    let program = augment(program, mappings)?;
    let mp = magic_transform(&program, query)?;
    let gaps: BTreeSet<Name> = mp
        .fetch_goals
        .iter()
        .filter(|g| !is_mapped(&g.predicate, mappings))
        .map(|g| g.predicate.clone())
        .collect();
    if !gaps.is_empty() {
        return Err(AnswerError::Unmapped(gaps.into_iter().collect()));
    }
    Ok(mp.fetch_goals)
}

/// Answers `query` in the given mode. All modes return the same tuples.
pub fn answer_query(
    query: &Query,
    program: &Program,
    mappings: &MappingSet,
    catalog: &Catalog,
    mode: Mode,
) -> Result<AnswerSet, AnswerError> {
    answer_query_with(query, program, mappings, catalog, mode, EvalOptions::default())
}

pub fn answer_query_with(
    query: &Query,
    program: &Program,
    mappings: &MappingSet,
    catalog: &Catalog,
    mode: Mode,
    options: EvalOptions,
) -> Result<AnswerSet, AnswerError> {
    let program = augment(program, mappings)?;
    let essentials = needed_essentials(query, &program, mappings)?;

    let (memory, stats, literals) = match mode {
        Mode::Naive | Mode::Forward => {
            let facts = load_all(&essentials, mappings, catalog)?;
            let loaded = facts.len() as u64;
            let rules = relevant_rules(query, &program)?;
            let ev = if mode == Mode::Naive {
                naive_evaluate(&rules, facts, options)?
            } else {
                seminaive_evaluate(&rules, facts, None, options)?
            };
            let mut stats = ev.stats;
            stats.facts_fetched += loaded;
            (ev.memory, stats, query.literals().to_vec())
        }
        Mode::Magic => {
            let mp = magic_transform(&program, query)?;
            let facts = load_all(&essentials, mappings, catalog)?;
            let loaded = facts.len() as u64;
            let ev = seminaive_evaluate(&mp.program, facts.into_iter().chain(mp.seeds), None, options)?;
            let mut stats = ev.stats;
            stats.facts_fetched += loaded;
            (ev.memory, stats, mp.answer_literals)
        }
        Mode::Hybrid => {
            let mp = magic_transform(&program, query)?;
            let full: BTreeSet<Name> = mp
                .fetch_goals
                .iter()
                .filter(|g| g.trigger.is_none())
                .map(|g| g.predicate.clone())
                .collect();
            let upfront = load_all(&full.iter().cloned().collect::<Vec<_>>(), mappings, catalog)?;
            let loaded = upfront.len() as u64;
            let mut source = HybridSource {
                goals: goals_by_trigger(&mp.fetch_goals),
                full,
                seen: HashSet::new(),
                mappings,
                catalog,
            };
            let ev = seminaive_evaluate(
                &mp.program,
                upfront.into_iter().chain(mp.seeds.iter().cloned()),
                Some(&mut source),
                options,
            )?;
            let mut stats = ev.stats;
            stats.facts_fetched += loaded;
            (ev.memory, stats, mp.answer_literals.clone())
        }
    };

    let tuples = match_literals(&memory, &literals, query.answer_vars())?;
    Ok(AnswerSet {
        vars: query.answer_vars().to_vec(),
        tuples: tuples.into_iter().collect(),
        stats,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Relational(#[from] RelError),
}

/// A rule program with the mappings and tables it is answered over.
#[derive(Debug)]
pub struct KnowledgeBase {
    pub program: Program,
    pub mappings: MappingSet,
    pub catalog: Catalog,
}

impl KnowledgeBase {
    /// Checks that mapped predicates keep their program arity.
    pub fn new(program: Program, mappings: MappingSet, catalog: Catalog) -> Result<Self, MappingError> {
        mappings.check_arities(&program)?;
        Ok(KnowledgeBase {
            program,
            mappings,
            catalog,
        })
    }

    pub fn from_sources(rules: &str, mappings: &str, catalog: Catalog) -> Result<Self, LoadError> {
        let program = parse_program(rules)?;
        let mappings = parse_mappings(mappings, &catalog)?;
        Ok(KnowledgeBase::new(program, mappings, catalog)?)
    }

    /// Parses a query against the program's and the mappings' predicates.
    pub fn parse_query(&self, src: &str) -> Result<Query, QueryError> {
        parse_query_with(src, |p| self.program.arity(p).or_else(|| self.mappings.arity(p)))
    }

    pub fn answer(&self, query: &Query, mode: Mode) -> Result<AnswerSet, AnswerError> {
        answer_query(query, &self.program, &self.mappings, &self.catalog, mode)
    }
}

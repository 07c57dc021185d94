//! Bottom-up evaluation.
//!
//! [`naive_evaluate`] recomputes every rule against the whole working memory
//! until nothing changes; it is kept as the reference. [`seminaive_evaluate`]
//! only considers rule instantiations that use at least one fact from the
//! previous round's delta, and accepts a [`FactSource`] that can inject
//! facts whenever trigger facts appear.
//!
//! Bodies are matched left to right. Each atom is probed through the
//! per-position index when one of its arguments is already bound.

mod memory;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;
use std::time::Instant;

use thiserror::Error;

pub use memory::WorkingMemory;

use crate::mapping::MappingError;
use crate::program::Program;
use crate::rule::{Comparison, Fact, Literal, Rule};
use crate::term::{CmpOp, Constant, Incomparable, Name, Term};

use memory::Tuple;

/// Variable bindings.
pub type Substitution = BTreeMap<Name, Constant>;

pub const DEFAULT_MAX_FIRINGS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("variable ?{0} is unbound when its comparison is evaluated")]
    UnboundVariable(Name),
    #[error("in `{rule}`: {source}")]
    Comparison {
        rule: String,
        #[source]
        source: Incomparable,
    },
    #[error("evaluation exceeded {0} rule firings")]
    FiringCap(u64),
    #[error("fetch failed: {0}")]
    Fetch(#[from] MappingError),
}

/// Evaluation counters. `facts_derived` counts facts first produced by a
/// rule; facts injected by a [`FactSource`] are counted in `facts_fetched`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalStats {
    pub facts_fetched: u64,
    pub facts_derived: u64,
    pub rule_firings: u64,
    pub iterations: u64,
    pub wall_ms: f64,
}

impl EvalStats {
    /// `key<TAB>value` lines for the deterministic counters.
    pub fn counters_tsv(&self) -> String {
        format!(
            "facts_fetched\t{}\nfacts_derived\t{}\nrule_firings\t{}\niterations\t{}\n",
            self.facts_fetched, self.facts_derived, self.rule_firings, self.iterations
        )
    }
}

impl fmt::Display for EvalStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}wall_ms\t{:.3}", self.counters_tsv(), self.wall_ms)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub max_firings: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            max_firings: DEFAULT_MAX_FIRINGS,
        }
    }
}

/// Supplies extra facts when a trigger fact is asserted.
pub trait FactSource {
    fn is_trigger(&self, predicate: &str) -> bool;

    /// Called once for every new fact of a trigger predicate.
    fn on_trigger(&mut self, predicate: &str, args: &[Constant]) -> Result<Vec<Fact>, EngineError>;
}

pub struct Evaluation {
    pub memory: WorkingMemory,
    pub stats: EvalStats,
}

/// Evaluates `left op right` under `s`.
pub fn eval_comparison(cmp: &Comparison, s: &Substitution) -> Result<bool, EngineError> {
    let value = |t: &Term| match t {
        Term::Constant(c) => Ok(c.clone()),
        Term::Variable(v) => s
            .get(v)
            .cloned()
            .ok_or_else(|| EngineError::UnboundVariable(v.clone())),
    };
    let (l, r) = (value(&cmp.left)?, value(&cmp.right)?);
    l.compare(cmp.op, &r).map_err(|source| EngineError::Comparison {
        rule: cmp.to_string(),
        source,
    })
}

#[derive(Debug, Clone)]
enum Slot {
    Var(usize),
    Const(Constant),
}

#[derive(Debug, Clone)]
enum Step {
    Atom { ordinal: usize, rel: usize, args: Vec<Slot> },
    Compare { left: Slot, op: CmpOp, right: Slot },
}

#[derive(Debug, Clone)]
struct CompiledRule {
    label: String,
    head_rel: usize,
    head: Vec<Slot>,
    steps: Vec<Step>,
    /// relation of each body atom, by ordinal
    atom_rels: Vec<usize>,
    vars: Vec<Name>,
}

fn compile(
    label: String,
    head_rel: usize,
    head: &[Term],
    body: &[Literal],
    mut resolve: impl FnMut(&Name) -> Option<usize>,
) -> Option<CompiledRule> {
    let mut vars: Vec<Name> = Vec::new();
    let slot = |t: &Term, vars: &mut Vec<Name>| match t {
        Term::Constant(c) => Slot::Const(c.clone()),
        Term::Variable(v) => Slot::Var(match vars.iter().position(|x| x == v) {
            Some(i) => i,
            None => {
                vars.push(v.clone());
                vars.len() - 1
            }
        }),
    };
    let mut steps = Vec::with_capacity(body.len());
    let mut atom_rels = Vec::new();
    for lit in body {
        match lit {
            Literal::Atom(a) => {
                let rel = resolve(&a.predicate)?;
                steps.push(Step::Atom {
                    ordinal: atom_rels.len(),
                    rel,
                    args: a.args.iter().map(|t| slot(t, &mut vars)).collect(),
                });
                atom_rels.push(rel);
            }
            Literal::Comparison(c) => steps.push(Step::Compare {
                left: slot(&c.left, &mut vars),
                op: c.op,
                right: slot(&c.right, &mut vars),
            }),
        }
    }
    let head = head.iter().map(|t| slot(t, &mut vars)).collect();
    Some(CompiledRule {
        label,
        head_rel,
        head,
        steps,
        atom_rels,
        vars,
    })
}

enum Candidates<'a> {
    One(Option<u32>),
    Ids(std::slice::Iter<'a, u32>),
    Span(Range<u32>),
}

impl Iterator for Candidates<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        match self {
            Candidates::One(o) => o.take(),
            Candidates::Ids(it) => it.next().copied(),
            Candidates::Span(r) => r.next(),
        }
    }
}

type Env = Vec<Option<Constant>>;

struct Matcher<'a> {
    wm: &'a WorkingMemory,
    rule: &'a CompiledRule,
    ranges: &'a [Range<u32>],
}

impl Matcher<'_> {
    fn value<'e>(env: &'e Env, s: &'e Slot) -> Option<&'e Constant> {
        match s {
            Slot::Const(c) => Some(c),
            Slot::Var(v) => env[*v].as_ref(),
        }
    }

    fn run(
        &self,
        step: usize,
        env: &mut Env,
        emit: &mut dyn FnMut(&Env) -> Result<(), EngineError>,
    ) -> Result<(), EngineError> {
        let Some(current) = self.rule.steps.get(step) else {
            return emit(env);
        };
        match current {
            Step::Compare { left, op, right } => {
                let unbound = |s: &Slot| match s {
                    Slot::Var(v) => EngineError::UnboundVariable(self.rule.vars[*v].clone()),
                    Slot::Const(_) => unreachable!(),
                };
                let l = Self::value(env, left).ok_or_else(|| unbound(left))?;
                let r = Self::value(env, right).ok_or_else(|| unbound(right))?;
                let holds = l.compare(*op, r).map_err(|source| EngineError::Comparison {
                    rule: self.rule.label.clone(),
                    source,
                })?;
                if holds {
                    self.run(step + 1, env, emit)?;
                }
                Ok(())
            }
            Step::Atom { ordinal, rel, args } => {
                let relation = self.wm.relation(*rel);
                let range = self.ranges[*ordinal].clone();
                if range.start >= range.end {
                    return Ok(());
                }
                let bound: Vec<Option<&Constant>> =
                    args.iter().map(|s| Self::value(env, s)).collect();
                let candidates = if bound.iter().all(Option::is_some) {
                    let key: Vec<Constant> = bound.iter().map(|c| (*c).unwrap().clone()).collect();
                    Candidates::One(relation.find(&key).filter(|id| range.contains(id)))
                } else if let Some((pos, value)) =
                    bound.iter().enumerate().find_map(|(i, b)| b.map(|v| (i, v)))
                {
                    Candidates::Ids(relation.lookup(pos, value, range).iter())
                } else {
                    Candidates::Span(range)
                };
                let mut newly: Vec<usize> = Vec::with_capacity(2);
                for id in candidates {
                    let tuple: &Tuple = relation.tuple(id);
                    if tuple.len() != args.len() {
                        continue;
                    }
                    let mut ok = true;
                    for (slot, value) in args.iter().zip(tuple.iter()) {
                        match slot {
                            Slot::Const(c) => ok = c == value,
                            Slot::Var(v) => match &env[*v] {
                                Some(b) => ok = b == value,
                                None => {
                                    env[*v] = Some(value.clone());
                                    newly.push(*v);
                                }
                            },
                        }
                        if !ok {
                            break;
                        }
                    }
                    if ok {
                        self.run(step + 1, env, emit)?;
                    }
                    for v in newly.drain(..) {
                        env[v] = None;
                    }
                }
                Ok(())
            }
        }
    }
}

fn head_tuple(rule: &CompiledRule, env: &Env) -> Tuple {
    rule.head
        .iter()
        .map(|s| match s {
            Slot::Const(c) => c.clone(),
            Slot::Var(v) => env[*v].clone().expect("safe rule binds every head variable"),
        })
        .collect()
}

struct Session<'h> {
    memory: WorkingMemory,
    stats: EvalStats,
    hook: Option<&'h mut dyn FactSource>,
    triggers: Vec<bool>,
    options: EvalOptions,
}

impl<'h> Session<'h> {
    fn new(hook: Option<&'h mut dyn FactSource>, options: EvalOptions) -> Self {
        Session {
            memory: WorkingMemory::new(),
            stats: EvalStats::default(),
            hook,
            triggers: Vec::new(),
            options,
        }
    }

    fn relation(&mut self, predicate: &Name) -> usize {
        let id = self.memory.relation_id(predicate);
        while self.triggers.len() <= id {
            let name = &self.memory.relation(self.triggers.len()).name;
            let is_trigger = self.hook.as_ref().is_some_and(|h| h.is_trigger(name));
            self.triggers.push(is_trigger);
        }
        id
    }

    /// Inserts a tuple, then feeds new trigger facts to the hook until no
    /// more facts arrive.
    fn assert(&mut self, rel: usize, tuple: Tuple, derived: bool) -> Result<bool, EngineError> {
        if !self.memory.insert_tuple(rel, tuple.clone()) {
            return Ok(false);
        }
        if derived {
            self.stats.facts_derived += 1;
        }
        let mut pending = vec![(rel, tuple)];
        while let Some((rel, tuple)) = pending.pop() {
            if !self.triggers[rel] {
                continue;
            }
            let name = self.memory.relation(rel).name.clone();
            let hook = self.hook.as_mut().expect("triggers imply a hook");
            for fact in hook.on_trigger(&name, &tuple)? {
                let r = self.relation(&fact.predicate);
                let t: Tuple = fact.args.into_boxed_slice();
                if self.memory.insert_tuple(r, t.clone()) {
                    self.stats.facts_fetched += 1;
                    pending.push((r, t));
                }
            }
        }
        Ok(true)
    }

    fn assert_fact(&mut self, fact: Fact, derived: bool) -> Result<bool, EngineError> {
        let rel = self.relation(&fact.predicate);
        self.assert(rel, fact.args.into_boxed_slice(), derived)
    }

    fn compile_program(&mut self, program: &Program) -> Vec<CompiledRule> {
        program
            .rules()
            .iter()
            .enumerate()
            .map(|(i, r)| self.compile_rule(i, r))
            .collect()
    }

    fn compile_rule(&mut self, index: usize, rule: &Rule) -> CompiledRule {
        let head_rel = self.relation(&rule.head.predicate);
        let mut preds = Vec::new();
        for a in rule.body_atoms() {
            preds.push(self.relation(&a.predicate));
        }
        let mut it = preds.into_iter();
        compile(format!("rule {index}: {rule}"), head_rel, &rule.head.args, &rule.body, |_| it.next())
            .expect("every body relation was created")
    }

    fn lengths(&self) -> Vec<u32> {
        (0..self.memory.relation_count())
            .map(|r| self.memory.relation(r).len())
            .collect()
    }

    /// Matches `rule` with the given per-atom ranges, collecting heads.
    fn fire(&mut self, rule: &CompiledRule, ranges: &[Range<u32>], out: &mut Vec<Tuple>) -> Result<(), EngineError> {
        let cap = self.options.max_firings;
        let firings = &mut self.stats.rule_firings;
        let matcher = Matcher {
            wm: &self.memory,
            rule,
            ranges,
        };
        let mut env: Env = vec![None; rule.vars.len()];
        matcher.run(0, &mut env, &mut |env| {
            *firings += 1;
            if *firings > cap {
                return Err(EngineError::FiringCap(cap));
            }
            out.push(head_tuple(rule, env));
            Ok(())
        })
    }

    fn finish(self, started: Instant) -> Evaluation {
        let mut stats = self.stats;
        stats.wall_ms = started.elapsed().as_secs_f64() * 1000.0;
        Evaluation {
            memory: self.memory,
            stats,
        }
    }
}

/// Reference fixpoint: every round applies every rule to the full working
/// memory as it stood at the start of the round.
pub fn naive_evaluate(
    program: &Program,
    facts: impl IntoIterator<Item = Fact>,
    options: EvalOptions,
) -> Result<Evaluation, EngineError> {
    let started = Instant::now();
    let mut s = Session::new(None, options);
    for f in facts {
        s.assert_fact(f, false)?;
    }
    let rules = s.compile_program(program);
    let mut heads = Vec::new();
    loop {
        s.stats.iterations += 1;
        let ends = s.lengths();
        let mut added = false;
        for rule in &rules {
            let ranges: Vec<Range<u32>> = rule.atom_rels.iter().map(|&r| 0..ends[r]).collect();
            heads.clear();
            s.fire(rule, &ranges, &mut heads)?;
            for t in heads.drain(..) {
                added |= s.assert(rule.head_rel, t, true)?;
            }
        }
        if !added {
            break;
        }
    }
    Ok(s.finish(started))
}

/// Delta-driven fixpoint. Produces the same facts as [`naive_evaluate`];
/// each rule instantiation is matched in exactly one round.
pub fn seminaive_evaluate(
    program: &Program,
    facts: impl IntoIterator<Item = Fact>,
    hook: Option<&mut dyn FactSource>,
    options: EvalOptions,
) -> Result<Evaluation, EngineError> {
    let started = Instant::now();
    let mut s = Session::new(hook, options);
    let rules = s.compile_program(program);
    for f in facts {
        s.assert_fact(f, false)?;
    }

    let mut heads = Vec::new();
    // rules without body atoms fire once, before any delta exists
    for rule in rules.iter().filter(|r| r.atom_rels.is_empty()) {
        heads.clear();
        s.fire(rule, &[], &mut heads)?;
        for t in heads.drain(..) {
            s.assert(rule.head_rel, t, true)?;
        }
    }

    let mut starts: Vec<u32> = Vec::new();
    loop {
        let ends = s.lengths();
        starts.resize(ends.len(), 0);
        if starts.iter().zip(&ends).all(|(a, b)| a == b) {
            break;
        }
        s.stats.iterations += 1;
        for rule in rules.iter().filter(|r| !r.atom_rels.is_empty()) {
            for (delta_at, &delta_rel) in rule.atom_rels.iter().enumerate() {
                if starts[delta_rel] == ends[delta_rel] {
                    continue;
                }
                let ranges: Vec<Range<u32>> = rule
                    .atom_rels
                    .iter()
                    .enumerate()
                    .map(|(k, &r)| match k.cmp(&delta_at) {
                        std::cmp::Ordering::Less => 0..starts[r],
                        std::cmp::Ordering::Equal => starts[r]..ends[r],
                        std::cmp::Ordering::Greater => 0..ends[r],
                    })
                    .collect();
                heads.clear();
                s.fire(rule, &ranges, &mut heads)?;
                for t in heads.drain(..) {
                    s.assert(rule.head_rel, t, true)?;
                }
            }
        }
        starts = ends;
    }
    Ok(s.finish(started))
}

/// Answers a conjunction over `memory`: the distinct bindings of `vars`
/// for which every literal holds, sorted.
pub fn match_literals(
    memory: &WorkingMemory,
    literals: &[Literal],
    vars: &[Name],
) -> Result<BTreeSet<Vec<Constant>>, EngineError> {
    let head: Vec<Term> = vars.iter().map(|v| Term::Variable(v.clone())).collect();
    let Some(rule) = compile("query".into(), 0, &head, literals, |p| memory.find_relation(p)) else {
        // a predicate with no facts at all
        return Ok(BTreeSet::new());
    };
    let ranges: Vec<Range<u32>> = rule
        .atom_rels
        .iter()
        .map(|&r| 0..memory.relation(r).len())
        .collect();
    let matcher = Matcher {
        wm: memory,
        rule: &rule,
        ranges: &ranges,
    };
    let mut out = BTreeSet::new();
    let mut env: Env = vec![None; rule.vars.len()];
    matcher.run(0, &mut env, &mut |env| {
        out.insert(head_tuple(&rule, env).into_vec());
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests;

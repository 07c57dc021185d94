//! Magic-sets rewriting with left-to-right sideways information passing.
//!
//! Adorned copies of derived predicates are named `p$bf`, their guards
//! `m$p$bf`. Essential body atoms with a bound position also get a magic
//! predicate; its facts are the bound values a hybrid evaluation fetches.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::program::{Program, ProgramError};
use crate::query::Query;
use crate::rule::{Atom, Fact, Literal, Rule};
use crate::term::{Name, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid adornment `{0}`: expected 1 or 2 of `b`/`f`")]
pub struct BadAdornment(pub String);

/// Bound/free pattern over a predicate's argument positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Adornment(Vec<bool>);

impl Adornment {
    pub fn new(bound: Vec<bool>) -> Self {
        Adornment(bound)
    }

    pub fn free(arity: usize) -> Self {
        Adornment(vec![false; arity])
    }

    /// `b` for every constant argument, `f` for every variable.
    pub fn of_constants(atom: &Atom) -> Self {
        Adornment(atom.args.iter().map(|t| t.as_constant().is_some()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_bound(&self, pos: usize) -> bool {
        self.0[pos]
    }

    pub fn has_bound(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    pub fn bound_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// The arguments of `args` at bound positions.
    pub fn project<'a, T>(&self, args: &'a [T]) -> Vec<&'a T> {
        self.bound_positions().map(|i| &args[i]).collect()
    }
}

impl fmt::Display for Adornment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "b" } else { "f" })?;
        }
        Ok(())
    }
}

impl FromStr for Adornment {
    type Err = BadAdornment;

    fn from_str(s: &str) -> Result<Self, BadAdornment> {
        if s.is_empty() || s.len() > 2 {
            return Err(BadAdornment(s.into()));
        }
        s.chars()
            .map(|c| match c {
                'b' => Ok(true),
                'f' => Ok(false),
                _ => Err(BadAdornment(s.into())),
            })
            .collect::<Result<_, _>>()
            .map(Adornment)
    }
}

pub fn adorned_name(predicate: &str, ad: &Adornment) -> Name {
    format!("{predicate}${ad}").into()
}

pub fn magic_name(predicate: &str, ad: &Adornment) -> Name {
    format!("m${predicate}${ad}").into()
}

/// One rule of the program under one head adornment, with the adornment of
/// each body literal (`None` for comparisons).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdornedRule {
    pub rule: usize,
    pub head: Adornment,
    pub body: Vec<Option<Adornment>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Adorned {
    pub rules: Vec<AdornedRule>,
    /// Reachable derived (predicate, adornment) pairs.
    pub derived: BTreeSet<(Name, Adornment)>,
    /// Adornments under which essential predicates are needed.
    pub essential: BTreeSet<(Name, Adornment)>,
}

fn adorn_body(rule: &Rule, head: &Adornment) -> Vec<Option<Adornment>> {
    let mut bound: BTreeSet<&Name> = head
        .project(&rule.head.args)
        .into_iter()
        .filter_map(Term::as_variable)
        .collect();
    let mut out = Vec::with_capacity(rule.body.len());
    for lit in &rule.body {
        match lit {
            Literal::Atom(a) => {
                let ad = a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Constant(_) => true,
                        Term::Variable(v) => bound.contains(v),
                    })
                    .collect();
                out.push(Some(Adornment(ad)));
                bound.extend(a.variables());
            }
            Literal::Comparison(_) => out.push(None),
        }
    }
    out
}

/// Propagates the query atoms' adornments through the rules and returns the
/// adorned rules for every reachable derived (predicate, adornment) pair.
pub fn adorn_program(program: &Program, query: &Query) -> Adorned {
    let mut adorned = Adorned::default();
    let mut pending: Vec<(Name, Adornment)> = Vec::new();
    let note = |p: &Name, ad: Adornment, adorned: &mut Adorned, pending: &mut Vec<_>| {
        if program.is_derived(p) {
            if adorned.derived.insert((p.clone(), ad.clone())) {
                pending.push((p.clone(), ad));
            }
        } else {
            adorned.essential.insert((p.clone(), ad));
        }
    };
    for atom in query.atoms() {
        note(&atom.predicate, Adornment::of_constants(atom), &mut adorned, &mut pending);
    }
    // worklist in discovery order keeps the output deterministic
    let mut next = 0;
    while next < pending.len() {
        let (p, ad) = pending[next].clone();
        next += 1;
        for (index, rule) in program.rules_for(&p) {
            let body = adorn_body(rule, &ad);
            for (lit, bad) in rule.body.iter().zip(&body) {
                if let (Literal::Atom(a), Some(bad)) = (lit, bad) {
                    note(&a.predicate, bad.clone(), &mut adorned, &mut pending);
                }
            }
            adorned.rules.push(AdornedRule {
                rule: index,
                head: ad.clone(),
                body,
            });
        }
    }
    adorned
}

/// An essential predicate to be fetched under an adornment. Facts of
/// `trigger` carry the bound values; a goal without a trigger is an
/// unconditional full fetch.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FetchGoal {
    pub predicate: Name,
    pub adornment: Adornment,
    pub trigger: Option<Name>,
}

impl fmt::Display for FetchGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.predicate, self.adornment)?;
        match &self.trigger {
            Some(t) => write!(f, " on {t}"),
            None => f.write_str(" full"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MagicProgram {
    pub program: Program,
    pub seeds: Vec<Fact>,
    pub fetch_goals: Vec<FetchGoal>,
    /// Query predicates and the adornment their answers are read under.
    pub answers: Vec<(Name, Adornment)>,
    /// The query literals with derived predicates renamed to their adorned
    /// versions; matching these against the fixpoint yields the answers.
    pub answer_literals: Vec<Literal>,
}

impl fmt::Display for MagicProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "% seeds")?;
        for s in &self.seeds {
            writeln!(f, "{}.", s.to_atom())?;
        }
        writeln!(f, "% rules")?;
        write!(f, "{}", self.program)?;
        writeln!(f, "% fetch goals")?;
        for g in &self.fetch_goals {
            writeln!(f, "% {g}")?;
        }
        write!(f, "% answer")?;
        for (i, l) in self.answer_literals.iter().enumerate() {
            write!(f, "{}{l}", if i == 0 { " " } else { ", " })?;
        }
        writeln!(f)
    }
}

fn rename(atom: &Atom, program: &Program, ad: &Adornment) -> Atom {
    if program.is_derived(&atom.predicate) {
        Atom::new(adorned_name(&atom.predicate, ad), atom.args.clone())
    } else {
        atom.clone()
    }
}

fn magic_atom(atom: &Atom, ad: &Adornment) -> Atom {
    Atom::new(
        magic_name(&atom.predicate, ad),
        ad.project(&atom.args).into_iter().cloned().collect(),
    )
}

/// Rewrites `program` for `query`. The result's rules pass the usual
/// arity and safety checks.
pub fn magic_transform(program: &Program, query: &Query) -> Result<MagicProgram, ProgramError> {
    let adorned = adorn_program(program, query);
    let mut rules: Vec<Rule> = Vec::new();
    let push = |r: Rule, rules: &mut Vec<Rule>| {
        // a magic rule whose head is in its own body adds nothing
        if r.body_atoms().any(|a| *a == r.head) || rules.contains(&r) {
            return;
        }
        rules.push(r);
    };

    for ar in &adorned.rules {
        let rule = &program.rules()[ar.rule];
        let head = &rule.head;
        let guard = ar.head.has_bound().then(|| magic_atom(head, &ar.head));
        let mut prefix: Vec<Literal> = guard.iter().cloned().map(Literal::Atom).collect();
        for (lit, bad) in rule.body.iter().zip(&ar.body) {
            match (lit, bad) {
                (Literal::Atom(a), Some(bad)) => {
                    if bad.has_bound() {
                        push(Rule::new(magic_atom(a, bad), prefix.clone()), &mut rules);
                    }
                    prefix.push(Literal::Atom(rename(a, program, bad)));
                }
                _ => prefix.push(lit.clone()),
            }
        }
        push(Rule::new(rename(head, program, &ar.head), prefix), &mut rules);
    }

    let mut seeds = Vec::new();
    let mut answers = Vec::new();
    let mut answer_literals = Vec::new();
    for lit in query.literals() {
        let Literal::Atom(a) = lit else {
            answer_literals.push(lit.clone());
            continue;
        };
        let ad = Adornment::of_constants(a);
        if ad.has_bound() {
            let seed = magic_atom(a, &ad).to_fact().expect("bound positions are constants");
            if !seeds.contains(&seed) {
                seeds.push(seed);
            }
        }
        answer_literals.push(Literal::Atom(rename(a, program, &ad)));
        answers.push((a.predicate.clone(), ad));
    }

    let fetch_goals = adorned
        .essential
        .iter()
        .map(|(p, ad)| FetchGoal {
            predicate: p.clone(),
            adornment: ad.clone(),
            trigger: ad.has_bound().then(|| magic_name(p, ad)),
        })
        .collect();

    Ok(MagicProgram {
        program: Program::new(rules)?,
        seeds,
        fetch_goals,
        answers,
        answer_literals,
    })
}

/// Groups fetch goals by trigger predicate.
pub fn goals_by_trigger(goals: &[FetchGoal]) -> BTreeMap<Name, &FetchGoal> {
    goals
        .iter()
        .filter_map(|g| g.trigger.clone().map(|t| (t, g)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{match_literals, naive_evaluate, seminaive_evaluate, EvalOptions};
    use crate::program::{check_safety, parse_program};
    use crate::query::parse_query;
    use crate::term::Constant;

    const HIERARCHY: &str = "Woman(?x) :- Mother(?x).\nPerson(?x) :- Woman(?x).";
    const ANCESTOR: &str = "anc(?x,?y) :- par(?x,?y).\nanc(?x,?z) :- par(?x,?y), anc(?y,?z).";
    const LEFT_ANCESTOR: &str = "anc(?x,?y) :- par(?x,?y).\nanc(?x,?z) :- anc(?x,?y), par(?y,?z).";

    fn ad(s: &str) -> Adornment {
        s.parse().unwrap()
    }

    fn par(a: &str, b: &str) -> Fact {
        Fact::new("par", vec![Constant::symbol(a), Constant::symbol(b)])
    }

    fn chain(n: usize) -> Vec<Fact> {
        (0..n).map(|i| par(&format!("c{i}"), &format!("c{}", i + 1))).collect()
    }

    fn answers(mp: &MagicProgram, q: &Query, facts: Vec<Fact>) -> BTreeSet<Vec<Constant>> {
        let ev = seminaive_evaluate(
            &mp.program,
            facts.into_iter().chain(mp.seeds.iter().cloned()),
            None,
            EvalOptions::default(),
        )
        .unwrap();
        match_literals(&ev.memory, &mp.answer_literals, q.answer_vars()).unwrap()
    }

    #[test]
    fn adornment_parse_and_display() {
        assert_eq!(ad("bf").to_string(), "bf");
        assert_eq!(ad("bf").bound_positions().collect::<Vec<_>>(), vec![0]);
        assert!(!ad("ff").has_bound());
        assert!("".parse::<Adornment>().is_err());
        assert!("bfb".parse::<Adornment>().is_err());
        assert!("bx".parse::<Adornment>().is_err());
        assert_eq!(Adornment::free(2), ad("ff"));
    }

    #[test]
    fn adorn_ancestor_bound_first() {
        let p = parse_program(ANCESTOR).unwrap();
        let q = parse_query("anc(a,?y)", &p).unwrap();
        let a = adorn_program(&p, &q);
        assert_eq!(a.derived, BTreeSet::from([("anc".into(), ad("bf"))]));
        assert_eq!(a.essential, BTreeSet::from([("par".into(), ad("bf"))]));
        assert_eq!(a.rules.len(), 2);
        assert!(a.rules.iter().all(|r| r.head == ad("bf")));
        assert_eq!(a.rules[1].body, vec![Some(ad("bf")), Some(ad("bf"))]);
    }

    #[test]
    fn adorn_all_free() {
        let p = parse_program(ANCESTOR).unwrap();
        let q = parse_query("anc(?x,?y)", &p).unwrap();
        let a = adorn_program(&p, &q);
        assert!(a.derived.contains(&("anc".into(), ad("ff"))));
        let mp = magic_transform(&p, &q).unwrap();
        assert!(mp.seeds.is_empty());
        assert!(mp
            .fetch_goals
            .contains(&FetchGoal { predicate: "par".into(), adornment: ad("ff"), trigger: None }));
    }

    #[test]
    fn adorn_hierarchy() {
        let p = parse_program(HIERARCHY).unwrap();
        let q = parse_query("Person(mary)", &p).unwrap();
        let a = adorn_program(&p, &q);
        let all: BTreeSet<_> = a.derived.iter().chain(&a.essential).cloned().collect();
        assert_eq!(
            all,
            BTreeSet::from([
                ("Mother".into(), ad("b")),
                ("Person".into(), ad("b")),
                ("Woman".into(), ad("b")),
            ])
        );
    }

    #[test]
    fn textbook_ancestor_rewrite() {
        let p = parse_program(ANCESTOR).unwrap();
        let q = parse_query("anc(a,?y)", &p).unwrap();
        let mp = magic_transform(&p, &q).unwrap();
        let text = mp.program.to_string();
        for expected in [
            "anc$bf(?x,?y) :- m$anc$bf(?x), par(?x,?y).",
            "anc$bf(?x,?z) :- m$anc$bf(?x), par(?x,?y), anc$bf(?y,?z).",
            "m$anc$bf(?y) :- m$anc$bf(?x), par(?x,?y).",
            "m$par$bf(?x) :- m$anc$bf(?x).",
        ] {
            assert!(text.lines().any(|l| l == expected), "missing {expected} in\n{text}");
        }
        assert_eq!(text.lines().count(), 4);
        assert_eq!(mp.seeds, vec![Fact::new("m$anc$bf", vec![Constant::symbol("a")])]);
        assert_eq!(
            mp.fetch_goals,
            vec![FetchGoal {
                predicate: "par".into(),
                adornment: ad("bf"),
                trigger: Some("m$par$bf".into()),
            }]
        );
        assert_eq!(mp.answers, vec![("anc".into(), ad("bf"))]);
        for (i, r) in mp.program.rules().iter().enumerate() {
            check_safety(r, i).unwrap();
        }
    }

    #[test]
    fn explain_output_reparses() {
        let p = parse_program(ANCESTOR).unwrap();
        let q = parse_query("anc(a,?y)", &p).unwrap();
        let mp = magic_transform(&p, &q).unwrap();
        let text = mp.to_string();
        let clauses = crate::syntax::parse_clauses(&text).unwrap();
        assert_eq!(clauses.len(), 5);
    }

    #[test]
    fn ancestor_answers_match_naive() {
        let p = parse_program(ANCESTOR).unwrap();
        let q = parse_query("anc(a,?y)", &p).unwrap();
        let mp = magic_transform(&p, &q).unwrap();
        let facts = vec![par("a", "b"), par("b", "c")];
        let got = answers(&mp, &q, facts.clone());
        assert_eq!(
            got,
            BTreeSet::from([vec![Constant::symbol("b")], vec![Constant::symbol("c")]])
        );
        let naive = naive_evaluate(&p, facts, EvalOptions::default()).unwrap();
        assert_eq!(got, match_literals(&naive.memory, q.literals(), q.answer_vars()).unwrap());
    }

    #[test]
    fn hierarchy_touches_only_the_seed() {
        let p = parse_program(HIERARCHY).unwrap();
        let q = parse_query("Person(mary)", &p).unwrap();
        let mp = magic_transform(&p, &q).unwrap();
        let facts = vec![
            Fact::new("Mother", vec![Constant::symbol("mary")]),
            Fact::new("Mother", vec![Constant::symbol("sue")]),
        ];
        let ev = seminaive_evaluate(
            &mp.program,
            facts.into_iter().chain(mp.seeds.iter().cloned()),
            None,
            EvalOptions::default(),
        )
        .unwrap();
        let derived: Vec<Fact> = ev
            .memory
            .facts()
            .into_iter()
            .filter(|f| f.predicate.contains('$'))
            .collect();
        assert!(derived.iter().all(|f| f.args == vec![Constant::symbol("mary")]), "{derived:?}");
        assert!(ev.memory.contains(&Fact::new("Person$b", vec![Constant::symbol("mary")])));
        assert_eq!(
            match_literals(&ev.memory, &mp.answer_literals, q.answer_vars()).unwrap(),
            BTreeSet::from([vec![]])
        );
    }

    #[test]
    fn left_recursive_chain_counts() {
        let n = 50;
        let p = parse_program(LEFT_ANCESTOR).unwrap();
        let q = parse_query("anc(c0,?y)", &p).unwrap();
        let mp = magic_transform(&p, &q).unwrap();
        let ev = seminaive_evaluate(
            &mp.program,
            chain(n).into_iter().chain(mp.seeds.iter().cloned()),
            None,
            EvalOptions::default(),
        )
        .unwrap();
        assert_eq!(ev.memory.count("anc$bf"), n);
        assert_eq!(ev.memory.count("m$par$bf"), n + 1);
        assert_eq!(ev.stats.facts_derived as usize, 2 * n + 1);
    }

    #[test]
    fn right_recursive_chain_counts() {
        let n = 30;
        let p = parse_program(ANCESTOR).unwrap();
        let q = parse_query("anc(c0,?y)", &p).unwrap();
        let mp = magic_transform(&p, &q).unwrap();
        let ev = seminaive_evaluate(
            &mp.program,
            chain(n).into_iter().chain(mp.seeds.iter().cloned()),
            None,
            EvalOptions::default(),
        )
        .unwrap();
        // every node below c0 becomes a goal, and each goal's closure is adorned
        assert_eq!(ev.memory.count("m$anc$bf"), n + 1);
        assert_eq!(ev.memory.count("anc$bf"), n * (n + 1) / 2);
    }

    #[test]
    fn constants_in_heads_and_bodies() {
        let p = parse_program(
            "sanctionedBy(?p, art296) :- Perpetrator(?p).\n\
             Perpetrator(?p) :- role(?p, director), acted(?p).",
        )
        .unwrap();
        let q = parse_query("sanctionedBy(?p, art296)", &p).unwrap();
        let mp = magic_transform(&p, &q).unwrap();
        let facts = vec![
            Fact::new("role", vec![Constant::symbol("p1"), Constant::symbol("director")]),
            Fact::new("role", vec![Constant::symbol("p2"), Constant::symbol("clerk")]),
            Fact::new("acted", vec![Constant::symbol("p1")]),
            Fact::new("acted", vec![Constant::symbol("p2")]),
        ];
        assert_eq!(answers(&mp, &q, facts), BTreeSet::from([vec![Constant::symbol("p1")]]));
        assert!(mp.fetch_goals.iter().any(|g| &*g.predicate == "role" && g.adornment == ad("fb")));
    }

    #[test]
    fn duplicate_adorned_rules_emitted_once() {
        let p = parse_program("r(?x) :- q(?x).\nq(?x) :- e(?x).\nr(?x) :- q(?x), e(?x).").unwrap();
        let q = parse_query("r(?x), q(?x)", &p).unwrap();
        let mp = magic_transform(&p, &q).unwrap();
        let text = mp.program.to_string();
        let mut lines: Vec<&str> = text.lines().collect();
        let before = lines.len();
        lines.sort();
        lines.dedup();
        assert_eq!(lines.len(), before);
    }

    #[test]
    fn rewritten_rules_are_safe_and_small() {
        let p = parse_program(
            "p(?x,?y) :- e(?x,?z), p(?z,?y), ?x != ?y.\np(?x,?y) :- e(?x,?y).\ns(?y) :- p(a,?y), t(?y).",
        )
        .unwrap();
        for src in ["s(?y)", "p(a,b)", "p(?x,b)", "p(?x,?y), s(?y)"] {
            let q = parse_query(src, &p).unwrap();
            let mp = magic_transform(&p, &q).unwrap();
            for (i, r) in mp.program.rules().iter().enumerate() {
                check_safety(r, i).unwrap();
                assert!((1..=2).contains(&r.head.arity()));
            }
            assert!(mp.seeds.iter().all(|s| s.to_atom().is_ground()));
        }
    }

    #[test]
    fn guards_one_per_adorned_rule() {
        let p = parse_program(ANCESTOR).unwrap();
        let q = parse_query("anc(a,?y)", &p).unwrap();
        let mp = magic_transform(&p, &q).unwrap();
        for r in mp.program.rules().iter().filter(|r| r.head.predicate.starts_with("anc$")) {
            let guards = r.body_atoms().filter(|a| a.predicate.starts_with("m$")).count();
            assert_eq!(guards, 1, "{r}");
        }
    }
}

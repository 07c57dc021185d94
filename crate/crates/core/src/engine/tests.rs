use super::*;
use crate::program::parse_program;
use crate::rule::Atom;
use crate::syntax::parse_literals;

const HIERARCHY: &str = "Woman(?x) :- Mother(?x).\nPerson(?x) :- Woman(?x).";
const ANCESTOR: &str = "anc(?x,?y) :- par(?x,?y).\nanc(?x,?z) :- par(?x,?y), anc(?y,?z).";

fn sym(s: &str) -> Constant {
    Constant::symbol(s)
}

fn f1(p: &str, a: &str) -> Fact {
    Fact::new(p, vec![sym(a)])
}

fn f2(p: &str, a: &str, b: &str) -> Fact {
    Fact::new(p, vec![sym(a), sym(b)])
}

fn chain(n: usize) -> Vec<Fact> {
    (0..n)
        .map(|i| f2("par", &format!("c{i}"), &format!("c{}", i + 1)))
        .collect()
}

fn cmp(src: &str) -> Comparison {
    match parse_literals(src).unwrap().remove(0) {
        Literal::Comparison(c) => c,
        _ => unreachable!(),
    }
}

#[test]
fn comparison_examples() {
    let mut s = Substitution::new();
    s.insert("a".into(), Constant::Integer(45));
    assert!(eval_comparison(&cmp("?a > 21"), &s).unwrap());
    s.insert("a".into(), Constant::Integer(15));
    assert!(!eval_comparison(&cmp("?a > 21"), &s).unwrap());
    s.insert("x".into(), Constant::text("anything"));
    assert!(eval_comparison(&cmp("?x = ?x"), &s).unwrap());
    assert!(matches!(
        eval_comparison(&cmp("?y = 1"), &s),
        Err(EngineError::UnboundVariable(_))
    ));
    assert!(matches!(
        eval_comparison(&cmp("?x < 1"), &s),
        Err(EngineError::Comparison { .. })
    ));
}

#[test]
fn naive_hierarchy() {
    let p = parse_program(HIERARCHY).unwrap();
    let ev = naive_evaluate(&p, [f1("Mother", "mary")], EvalOptions::default()).unwrap();
    assert_eq!(
        ev.memory.facts(),
        BTreeSet::from([f1("Mother", "mary"), f1("Woman", "mary"), f1("Person", "mary")])
    );
    assert_eq!(ev.stats.facts_derived, 2);
    assert_eq!(ev.stats.iterations, 3);
}

#[test]
fn naive_ancestor() {
    let p = parse_program(ANCESTOR).unwrap();
    let ev = naive_evaluate(&p, [f2("par", "a", "b"), f2("par", "b", "c")], EvalOptions::default()).unwrap();
    let anc: BTreeSet<Fact> = ev.memory.facts_of("anc").collect();
    assert_eq!(
        anc,
        BTreeSet::from([f2("anc", "a", "b"), f2("anc", "b", "c"), f2("anc", "a", "c")])
    );
}

#[test]
fn empty_program_leaves_facts() {
    let p = Program::default();
    let facts = [f1("q", "a"), f2("r", "a", "b")];
    let ev = naive_evaluate(&p, facts.clone(), EvalOptions::default()).unwrap();
    assert_eq!(ev.memory.facts(), BTreeSet::from(facts.clone()));
    let ev = seminaive_evaluate(&p, facts.clone(), None, EvalOptions::default()).unwrap();
    assert_eq!(ev.memory.facts(), BTreeSet::from(facts));
    assert_eq!(ev.stats.facts_derived, 0);
}

#[test]
fn seminaive_hierarchy_matches_naive() {
    let p = parse_program(HIERARCHY).unwrap();
    let naive = naive_evaluate(&p, [f1("Mother", "mary")], EvalOptions::default()).unwrap();
    let semi = seminaive_evaluate(&p, [f1("Mother", "mary")], None, EvalOptions::default()).unwrap();
    assert_eq!(semi.memory.facts(), naive.memory.facts());
    assert!(semi.stats.iterations <= naive.stats.iterations + 1);
    assert!(semi.stats.rule_firings <= naive.stats.rule_firings);
}

#[test]
fn seminaive_chain_closure_count() {
    let p = parse_program(ANCESTOR).unwrap();
    let ev = seminaive_evaluate(&p, chain(3), None, EvalOptions::default()).unwrap();
    // N(N+1)/2 with N = 3
    assert_eq!(ev.memory.count("anc"), 6);
    assert_eq!(ev.stats.facts_derived, 6);
}

#[test]
fn already_at_fixpoint() {
    let p = parse_program(HIERARCHY).unwrap();
    let facts = [f1("Mother", "mary"), f1("Woman", "mary"), f1("Person", "mary")];
    let ev = seminaive_evaluate(&p, facts, None, EvalOptions::default()).unwrap();
    assert_eq!(ev.stats.iterations, 1);
    assert_eq!(ev.stats.facts_derived, 0);
}

#[test]
fn idempotent_on_output() {
    let p = parse_program(ANCESTOR).unwrap();
    let first = seminaive_evaluate(&p, chain(5), None, EvalOptions::default()).unwrap();
    let again = seminaive_evaluate(&p, first.memory.facts(), None, EvalOptions::default()).unwrap();
    assert_eq!(again.stats.facts_derived, 0);
}

#[test]
fn program_facts_and_constant_comparisons() {
    let p = parse_program("p(a).\nq(b) :- 1 < 2.\nr(c) :- 2 < 1.\ns(?x) :- p(?x).").unwrap();
    for ev in [
        naive_evaluate(&p, [], EvalOptions::default()).unwrap(),
        seminaive_evaluate(&p, [], None, EvalOptions::default()).unwrap(),
    ] {
        assert_eq!(
            ev.memory.facts(),
            BTreeSet::from([f1("p", "a"), f1("q", "b"), f1("s", "a")])
        );
    }
}

#[test]
fn repeated_variables_and_constants_in_body() {
    let p = parse_program("loop(?x) :- e(?x,?x).\nfromA(?y) :- e(a,?y).").unwrap();
    let facts = [f2("e", "a", "a"), f2("e", "a", "b"), f2("e", "c", "c")];
    let ev = seminaive_evaluate(&p, facts, None, EvalOptions::default()).unwrap();
    assert_eq!(
        ev.memory.facts_of("loop").collect::<BTreeSet<_>>(),
        BTreeSet::from([f1("loop", "a"), f1("loop", "c")])
    );
    assert_eq!(
        ev.memory.facts_of("fromA").collect::<BTreeSet<_>>(),
        BTreeSet::from([f1("fromA", "a"), f1("fromA", "b")])
    );
}

#[test]
fn comparison_type_error_names_rule() {
    let p = parse_program("big(?x) :- val(?x), ?x > 10.").unwrap();
    let err = seminaive_evaluate(&p, [f1("val", "oops")], None, EvalOptions::default())
        .err()
        .unwrap();
    match err {
        EngineError::Comparison { rule, .. } => assert!(rule.contains("big(?x)"), "{rule}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn firing_cap() {
    let p = parse_program(ANCESTOR).unwrap();
    let err = seminaive_evaluate(&p, chain(20), None, EvalOptions { max_firings: 50 })
        .err()
        .unwrap();
    assert_eq!(err, EngineError::FiringCap(50));
}

struct EchoSource {
    calls: Vec<Vec<Constant>>,
}

impl FactSource for EchoSource {
    fn is_trigger(&self, predicate: &str) -> bool {
        predicate == "want"
    }

    fn on_trigger(&mut self, _: &str, args: &[Constant]) -> Result<Vec<Fact>, EngineError> {
        self.calls.push(args.to_vec());
        let Constant::Symbol(s) = &args[0] else { unreachable!() };
        // node cN links to c(N+1), up to c3
        let n: usize = s[1..].parse().unwrap();
        Ok(if n < 3 {
            vec![Fact::new("par", vec![args[0].clone(), sym(&format!("c{}", n + 1))])]
        } else {
            vec![]
        })
    }
}

#[test]
fn hook_injects_facts_on_triggers() {
    let p = parse_program("want(?y) :- want(?x), par(?x,?y).\nreach(?y) :- want(?y).").unwrap();
    let mut src = EchoSource { calls: vec![] };
    let ev = seminaive_evaluate(&p, [f1("want", "c0")], Some(&mut src), EvalOptions::default()).unwrap();
    assert_eq!(src.calls.len(), 4);
    assert_eq!(ev.stats.facts_fetched, 3);
    assert_eq!(ev.memory.count("reach"), 4);
}

#[test]
fn match_literals_projects_and_filters() {
    let wm = WorkingMemory::from_facts([
        Fact::new("hasAge", vec![Constant::Integer(1), Constant::Integer(30)]),
        Fact::new("hasAge", vec![Constant::Integer(2), Constant::Integer(45)]),
        Fact::new("Man", vec![Constant::Integer(2)]),
    ]);
    let lits = parse_literals("Man(?x), hasAge(?x,?a), ?a > 21").unwrap();
    let got = match_literals(&wm, &lits, &["x".into(), "a".into()]).unwrap();
    assert_eq!(got, BTreeSet::from([vec![Constant::Integer(2), Constant::Integer(45)]]));

    let missing = [Literal::Atom(Atom::new("nothing", vec![Term::var("x")]))];
    assert!(match_literals(&wm, &missing, &["x".into()]).unwrap().is_empty());
}

//! Seeded random knowledge bases for differential testing.
//!
//! Essential predicates `e0..` are backed by integer tables; derived
//! predicates `d0..` head safe rules whose bodies mix both kinds. Values
//! come from a small integer domain so joins actually match.

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomLimits {
    pub max_rules: usize,
    pub max_derived: usize,
    pub max_facts: usize,
    /// Upper bound on head atoms per rule; above 1 the rule file uses
    /// conjunctive heads.
    pub max_heads: usize,
    pub essentials: usize,
    pub domain: i64,
}

impl Default for RandomLimits {
    fn default() -> Self {
        RandomLimits {
            max_rules: 8,
            max_derived: 5,
            max_facts: 40,
            max_heads: 1,
            essentials: 3,
            domain: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomInstance {
    pub seed: u64,
    pub dataset: Dataset,
    pub query: String,
}

const VARS: [&str; 4] = ["x", "y", "z", "w"];
const OPS: [&str; 6] = ["=", "!=", "<", "<=", ">", ">="];

struct Gen {
    rng: ChaCha8Rng,
    limits: RandomLimits,
    /// (name, arity) of every predicate
    preds: Vec<(String, usize)>,
    /// `preds[..essentials]` are the stored predicates
    essentials: usize,
}

impl Gen {
    fn constant(&mut self) -> String {
        self.rng.random_range(0..self.limits.domain).to_string()
    }

    /// A body atom; its variables are added to `bound`.
    fn atom(&mut self, bound: &mut BTreeSet<&'static str>, pool: &[(String, usize)]) -> String {
        let (name, arity) = pool.choose(&mut self.rng).expect("nonempty pool").clone();
        let mut args = Vec::with_capacity(arity);
        for _ in 0..arity {
            if self.rng.random_bool(0.15) {
                args.push(self.constant());
            } else {
                let v = *VARS.choose(&mut self.rng).expect("vars");
                bound.insert(v);
                args.push(format!("?{v}"));
            }
        }
        format!("{name}({})", args.join(","))
    }

    fn comparison(&mut self, bound: &BTreeSet<&'static str>) -> Option<String> {
        let vars: Vec<&str> = bound.iter().copied().collect();
        let left = *vars.choose(&mut self.rng)?;
        let op = *OPS.choose(&mut self.rng).expect("ops");
        let right = if vars.len() > 1 && self.rng.random_bool(0.5) {
            format!("?{}", vars.choose(&mut self.rng).expect("vars"))
        } else {
            self.constant()
        };
        Some(format!("?{left} {op} {right}"))
    }

    fn head(&mut self, name: &str, arity: usize, bound: &BTreeSet<&'static str>) -> String {
        let vars: Vec<&str> = bound.iter().copied().collect();
        let args: Vec<String> = (0..arity)
            .map(|_| match vars.choose(&mut self.rng) {
                Some(v) if self.rng.random_bool(0.9) => format!("?{v}"),
                _ => self.constant(),
            })
            .collect();
        format!("{name}({})", args.join(","))
    }

    fn rules(&mut self, derived: &[(String, usize)]) -> String {
        let mut out = String::new();
        let n = self.rng.random_range(1..=self.limits.max_rules);
        for i in 0..n {
            // every derived predicate heads at least one rule when possible
            let first = derived[i % derived.len()].clone();
            let mut heads = vec![first];
            let extra = self.rng.random_range(1..=self.limits.max_heads) - 1;
            for _ in 0..extra {
                heads.push(derived.choose(&mut self.rng).expect("derived").clone());
            }
            let mut bound = BTreeSet::new();
            let mut body = Vec::new();
            let atoms = self.rng.random_range(1..=3);
            for k in 0..atoms {
                // leading with a stored predicate makes rules fire more often
                let pool = if k == 0 && self.rng.random_bool(0.6) {
                    self.preds[..self.essentials].to_vec()
                } else {
                    self.preds.clone()
                };
                body.push(self.atom(&mut bound, &pool));
            }
            if self.rng.random_bool(0.3) {
                if let Some(c) = self.comparison(&bound) {
                    let at = self.rng.random_range(0..=body.len());
                    body.insert(at, c);
                }
            }
            let heads: Vec<String> = heads.iter().map(|(p, a)| self.head(p, *a, &bound)).collect();
            writeln!(out, "{} :- {}.", heads.join(", "), body.join(", ")).expect("string write");
        }
        out
    }

    fn query(&mut self) -> String {
        let mut bound = BTreeSet::new();
        let mut lits = Vec::new();
        let atoms = self.rng.random_range(1..=2);
        for k in 0..atoms {
            let pool = if k == 0 && self.rng.random_bool(0.7) {
                self.preds[self.essentials..].to_vec()
            } else {
                self.preds.clone()
            };
            lits.push(self.atom(&mut bound, &pool));
        }
        if self.rng.random_bool(0.25) {
            if let Some(c) = self.comparison(&bound) {
                lits.push(c);
            }
        }
        lits.join(", ")
    }

    fn table(&mut self, arity: usize, rows: usize) -> String {
        let mut csv = if arity == 1 { "c0\n".to_string() } else { "c0,c1\n".to_string() };
        for _ in 0..rows {
            let row: Vec<String> = (0..arity).map(|_| self.constant()).collect();
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        csv
    }
}

/// A random knowledge base and conjunctive query; a pure function of
/// `seed` and `limits`.
pub fn random_instance(seed: u64, limits: RandomLimits) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let essentials: Vec<(String, usize)> = (0..limits.essentials)
        .map(|i| (format!("e{i}"), rng.random_range(1..=2)))
        .collect();
    let derived_count = rng.random_range(1..=limits.max_derived);
    let derived: Vec<(String, usize)> = (0..derived_count)
        .map(|i| (format!("d{i}"), rng.random_range(1..=2)))
        .collect();
    let mut g = Gen {
        rng,
        limits,
        preds: essentials.iter().chain(&derived).cloned().collect(),
        essentials: essentials.len(),
    };
    let rules = g.rules(&derived);

    // only predicates that ended up heading a rule are derived
    let heads: BTreeSet<String> = rules
        .lines()
        .flat_map(|l| l.split(" :- ").next())
        .flat_map(|h| h.split("), "))
        .map(|h| h.split('(').next().unwrap_or("").to_string())
        .collect();

    let mut mapped: Vec<(String, usize)> = essentials.clone();
    // occasionally a derived predicate also has stored rows
    if g.rng.random_bool(0.2) {
        mapped.push(derived.choose(&mut g.rng).expect("derived").clone());
    }
    // derived predicates that head no rule are essential and need a table
    for d in &derived {
        if !heads.contains(&d.0) && !mapped.contains(d) {
            mapped.push(d.clone());
        }
    }

    let total = g.rng.random_range(0..=limits.max_facts);
    let mut catalog = String::new();
    let mut mappings = String::new();
    let mut tables = Vec::new();
    for (i, (name, arity)) in mapped.iter().enumerate() {
        // spread the fact budget over the tables
        let rows = total / mapped.len() + usize::from(i < total % mapped.len());
        let (cols, select) = if *arity == 1 {
            ("c0:int", "c0")
        } else {
            ("c0:int,c1:int", "c0, c1")
        };
        let vars = if *arity == 1 { "?a" } else { "?a,?b" };
        writeln!(catalog, "table t_{name} file t_{name}.csv columns {cols}").expect("string write");
        writeln!(mappings, "map {name}({vars}) <- from t_{name} select {select}.").expect("string write");
        let csv = g.table(*arity, rows);
        tables.push((format!("t_{name}.csv"), csv));
    }
    let query = g.query();
    RandomInstance {
        seed,
        dataset: Dataset {
            rules,
            mappings,
            catalog,
            tables,
        },
        query,
    }
}

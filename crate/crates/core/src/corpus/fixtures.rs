use super::Dataset;

/// A query shipped with a fixture and its expected serialized answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenQuery {
    pub name: &'static str,
    pub query: &'static str,
    pub expected: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub dataset: Dataset,
    pub queries: Vec<GoldenQuery>,
}

macro_rules! corpus_file {
    ($dir:literal, $file:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/", $dir, "/", $file))
    };
}

fn queries(index: &'static str, golden: &[(&'static str, &'static str)]) -> Vec<GoldenQuery> {
    index
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let (name, query) = line.split_once('\t').expect("queries.tsv lines are name<TAB>query");
            let expected = golden
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, g)| *g)
                .unwrap_or_else(|| panic!("no golden file for query {name}"));
            GoldenQuery { name, query, expected }
        })
        .collect()
}

fn dataset(rules: &str, mappings: &str, catalog: &str, tables: &[(&str, &str)]) -> Dataset {
    Dataset {
        rules: rules.into(),
        mappings: mappings.into(),
        catalog: catalog.into(),
        tables: tables.iter().map(|(n, t)| (n.to_string(), t.to_string())).collect(),
    }
}

/// The economic-crimes micro-case: a director pays a shell company on a
/// fictitious invoice.
pub fn crimes_fixture() -> Fixture {
    Fixture {
        dataset: dataset(
            corpus_file!("crimes", "rules.dl"),
            corpus_file!("crimes", "mappings.map"),
            corpus_file!("crimes", "catalog.txt"),
            &[
                ("companies.csv", corpus_file!("crimes", "companies.csv")),
                ("persons.csv", corpus_file!("crimes", "persons.csv")),
                ("roles.csv", corpus_file!("crimes", "roles.csv")),
                ("invoices.csv", corpus_file!("crimes", "invoices.csv")),
                ("transfers.csv", corpus_file!("crimes", "transfers.csv")),
                ("confirmations.csv", corpus_file!("crimes", "confirmations.csv")),
            ],
        ),
        queries: queries(
            corpus_file!("crimes", "queries.tsv"),
            &[
                ("perpetrator", corpus_file!("crimes", "golden/perpetrator.tsv")),
                ("sanctioned", corpus_file!("crimes", "golden/sanctioned.tsv")),
                ("launders", corpus_file!("crimes", "golden/launders.tsv")),
                ("accomplice", corpus_file!("crimes", "golden/accomplice.tsv")),
                ("victim", corpus_file!("crimes", "golden/victim.tsv")),
                ("significant", corpus_file!("crimes", "golden/significant.tsv")),
                ("confirmed", corpus_file!("crimes", "golden/confirmed.tsv")),
                ("aggravated", corpus_file!("crimes", "golden/aggravated.tsv")),
                ("sanctioned_p1", corpus_file!("crimes", "golden/sanctioned_p1.tsv")),
            ],
        ),
    }
}

/// Three people; the adult men mapping selects one of them.
pub fn persons_fixture() -> Fixture {
    Fixture {
        dataset: dataset(
            corpus_file!("persons", "rules.dl"),
            corpus_file!("persons", "mappings.map"),
            corpus_file!("persons", "catalog.txt"),
            &[("persons.csv", corpus_file!("persons", "persons.csv"))],
        ),
        queries: queries(
            corpus_file!("persons", "queries.tsv"),
            &[
                ("men", corpus_file!("persons", "golden/men.tsv")),
                ("adult_men", corpus_file!("persons", "golden/adult_men.tsv")),
                ("adults", corpus_file!("persons", "golden/adults.tsv")),
            ],
        ),
    }
}

/// Mother is-a Woman is-a Person, with one mother.
pub fn hierarchy_fixture() -> Fixture {
    Fixture {
        dataset: dataset(
            corpus_file!("hierarchy", "rules.dl"),
            corpus_file!("hierarchy", "mappings.map"),
            corpus_file!("hierarchy", "catalog.txt"),
            &[("mothers.csv", corpus_file!("hierarchy", "mothers.csv"))],
        ),
        queries: queries(
            corpus_file!("hierarchy", "queries.tsv"),
            &[
                ("person", corpus_file!("hierarchy", "golden/person.tsv")),
                ("woman_mary", corpus_file!("hierarchy", "golden/woman_mary.tsv")),
            ],
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::Mode;
    use crate::mapping::validate_coverage;

    fn check_golden(fixture: &Fixture) {
        let kb = fixture.dataset.load().unwrap();
        for g in &fixture.queries {
            let q = kb.parse_query(g.query).unwrap();
            for mode in Mode::ALL {
                let got = kb.answer(&q, mode).unwrap();
                assert_eq!(got.to_tsv(false), g.expected, "{} in {mode}", g.name);
            }
        }
    }

    #[test]
    fn crimes_golden() {
        check_golden(&crimes_fixture());
    }

    #[test]
    fn persons_golden() {
        check_golden(&persons_fixture());
    }

    #[test]
    fn hierarchy_golden() {
        check_golden(&hierarchy_fixture());
    }

    #[test]
    fn crimes_rules_are_safe_and_covered() {
        let kb = crimes_fixture().dataset.load().unwrap();
        assert!(kb.program.rules().len() >= 12);
        let notes = validate_coverage(&kb.mappings, &kb.program);
        assert!(notes.iter().all(|n| !n.is_warning()), "{notes:?}");
    }

    #[test]
    fn no_fictitious_invoices_no_laundering() {
        let mut d = crimes_fixture().dataset;
        for (name, text) in &mut d.tables {
            if name == "invoices.csv" {
                *text = text.replace(",1\n", ",0\n");
            }
        }
        let kb = d.load().unwrap();
        let q = kb.parse_query("LaundersProceeds(?t)").unwrap();
        for mode in Mode::ALL {
            assert!(kb.answer(&q, mode).unwrap().is_empty());
        }
    }
}

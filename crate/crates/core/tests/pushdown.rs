//! A fetch with bound values returns exactly the matching part of the full
//! extension.

use proptest::prelude::*;
use rqa_core::mapping::{fetch, parse_mappings};
use rqa_core::relstore::{ColumnType, TableSchema};
use rqa_core::{Adornment, Catalog, Constant};

fn catalog(rows: &[(i64, i64, i64)]) -> Catalog {
    let mut cat = Catalog::new();
    let schema = TableSchema::new("t", &[("a", ColumnType::Int), ("b", ColumnType::Int), ("c", ColumnType::Int)]).unwrap();
    cat.add_table(
        schema,
        rows.iter().map(|&(a, b, c)| vec![Constant::Integer(a), Constant::Integer(b), Constant::Integer(c)]).collect(),
    )
    .unwrap();
    cat
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bound_fetch_is_filtered_full_fetch(
        rows in proptest::collection::vec((0i64..4, 0i64..4, 0i64..4), 0..30),
        x in 0i64..4,
        y in 0i64..4,
        threshold in 0i64..4,
    ) {
        let cat = catalog(&rows);
        let maps = parse_mappings(
            &format!("map p(?x,?y) <- from t where c >= {threshold} select a, b.\nmap p(?x,?y) <- from t where a = c select b, a."),
            &cat,
        ).unwrap();
        let full = fetch("p", &Adornment::free(2), &[], &maps, &cat).unwrap();
        for (pattern, bound) in [("bf", vec![x]), ("fb", vec![y]), ("bb", vec![x, y])] {
            let ad: Adornment = pattern.parse().unwrap();
            let bound: Vec<Constant> = bound.into_iter().map(Constant::Integer).collect();
            let got = fetch("p", &ad, &bound, &maps, &cat).unwrap();
            let expected: std::collections::BTreeSet<_> = full
                .iter()
                .filter(|f| ad.bound_positions().zip(&bound).all(|(i, v)| &f.args[i] == v))
                .cloned()
                .collect();
            prop_assert_eq!(got, expected);
        }
    }
}

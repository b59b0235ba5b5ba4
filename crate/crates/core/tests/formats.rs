//! Property tests for the two text interchange formats: parse(write(x)) is
//! the identity and writing is byte-stable.

use proptest::prelude::*;

use tfg_core::graphcore::{read_edge_list, write_edge_list, PlantedGraph};
use tfg_core::twosat::{read_formula, write_formula, BipartiteFormula, Clause};

fn arb_planted_graph() -> impl Strategy<Value = PlantedGraph> {
    (2u32..24, any::<u64>()).prop_map(|(n, seed)| {
        use rand::Rng;
        let mut rng = tfg_core::stream_rng(seed, 0);
        let ka = 1 + rng.random_range(0..n - 1);
        let part_a: Vec<u32> = (0..ka).collect();
        let mut s = Vec::new();
        let mut t = Vec::new();
        let mut cr = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < 0.2 {
                    match (u < ka, v < ka) {
                        (true, true) => s.push((u, v)),
                        (false, false) => t.push((u, v)),
                        _ => cr.push((u, v)),
                    }
                }
            }
        }
        PlantedGraph::new(n, part_a, s, t, cr).unwrap()
    })
}

fn arb_formula() -> impl Strategy<Value = BipartiteFormula> {
    (1u32..20, 1u32..20, any::<u64>()).prop_map(|(n, m, seed)| {
        use rand::Rng;
        let mut rng = tfg_core::stream_rng(seed, 1);
        let mut clauses = std::collections::HashSet::new();
        let count = rng.random_range(0..40);
        for _ in 0..count {
            clauses.insert(Clause {
                x_index: rng.random_range(0..n),
                y_index: rng.random_range(0..m),
                x_positive: rng.random(),
                y_positive: rng.random(),
            });
        }
        BipartiteFormula::new(n, m, clauses.into_iter().collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_roundtrip(g in arb_planted_graph()) {
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let g2 = read_edge_list(&buf[..]).unwrap();
        prop_assert_eq!(&g, &g2);
        let mut buf2 = Vec::new();
        write_edge_list(&g2, &mut buf2).unwrap();
        prop_assert_eq!(buf, buf2);
    }

    #[test]
    fn formula_roundtrip(f in arb_formula()) {
        let mut buf = Vec::new();
        write_formula(&f, &mut buf).unwrap();
        let f2 = read_formula(&buf[..]).unwrap();
        prop_assert_eq!(&f, &f2);
        let mut buf2 = Vec::new();
        write_formula(&f2, &mut buf2).unwrap();
        prop_assert_eq!(buf, buf2);
    }

    #[test]
    fn connectivity_tables_cache_roundtrip(k in 1u32..5, l in 1u32..5) {
        let mut tables = tfg_core::enumeration::ConnTables::new();
        let before = tables.get(k, l).clone();
        let mut buf = Vec::new();
        tables.save(&mut buf).unwrap();
        let mut loaded = tfg_core::enumeration::ConnTables::load(&buf[..]).unwrap();
        prop_assert_eq!(loaded.get(k, l), &before);
    }
}

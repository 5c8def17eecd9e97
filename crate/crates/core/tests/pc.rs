mod common;

use std::collections::{BTreeMap, BTreeSet};

use catci::citest::TestSpec;
use catci::data::VariableKind;
use catci::graph::{cpdag_of, pair, random_dag, EdgeSet};
use catci::pc::{learn_skeleton_with, pc, pc_with, write_test_log, OracleTester, PcConfig};
use catci::sim::simulate_binary_dag;
use common::*;
use proptest::prelude::*;

fn choose(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn oracle_recovers_the_equivalence_class() {
    let mut r = rng(40);
    for case in 0..300 {
        let n = 3 + case % 8;
        let g = random_graph(&mut r, n, 0.3);
        let res = pc_with(&OracleTester { dag: &g }, 0.05, None);
        assert_eq!(res.skeleton.edges, g.skeleton());
        assert_eq!(res.cpdag, cpdag_of(&g), "{:?}", g.edges());
    }
}

#[test]
fn sepsets_separate_and_come_from_neighbourhoods() {
    for seed in 0..50 {
        let g = random_dag(8, 0.3, seed).unwrap();
        let sk = learn_skeleton_with(&OracleTester { dag: &g }, 0.05, None);
        for (&(x, y), z) in &sk.sepsets {
            assert!(dsep_by_paths(&g, x, y, z));
            assert!(!sk.edges.contains(&(x, y)));
        }
        assert_eq!(sk.sepsets.len() + sk.edges.len(), 28);
    }
}

#[test]
fn test_budget_per_level_is_bounded() {
    for seed in 0..30 {
        let n = 9;
        let g = random_dag(n, 0.3, seed).unwrap();
        let sk = learn_skeleton_with(&OracleTester { dag: &g }, 0.05, None);
        let mut per: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for e in &sk.test_log {
            assert!(e.x < e.y && e.z.len() == e.level);
            assert!(seen.insert((e.x, e.y, e.z.clone())), "duplicate test");
            *per.entry((e.level, e.x, e.y)).or_default() += 1;
        }
        for (&(level, _, _), &count) in &per {
            assert!(count <= 2 * choose(n - 2, level));
        }
        let max_degree = (0..n).map(|v| g.parents(v).len() + g.children(v).len()).max().unwrap();
        assert!(sk.test_log.iter().all(|e| e.level <= max_degree));
    }
}

#[test]
fn max_condition_size_caps_the_levels() {
    let g = random_dag(8, 0.5, 3).unwrap();
    let sk = learn_skeleton_with(&OracleTester { dag: &g }, 0.05, Some(1));
    assert!(sk.test_log.iter().all(|e| e.level <= 1));
    assert!(g.skeleton().is_subset(&sk.edges));
}

#[test]
fn independent_pair_is_usually_disconnected() {
    let mut r = rng(41);
    let reps = 400;
    let empty = (0..reps)
        .filter(|_| {
            let ds = dataset(vec![
                ("a", VariableKind::Binary, 2, uniform_codes(&mut r, 300, 2)),
                ("b", VariableKind::Binary, 2, uniform_codes(&mut r, 300, 2)),
            ]);
            pc(&ds, &PcConfig::default()).unwrap().skeleton.edges.is_empty()
        })
        .count();
    let rate = empty as f64 / reps as f64;
    assert!((0.91..=0.98).contains(&rate), "empty-skeleton rate {rate}");
}

#[test]
fn independent_columns_usually_give_an_empty_graph() {
    let mut r = rng(42);
    let reps = 300;
    let empty = (0..reps)
        .filter(|_| {
            let ds = dataset(
                ["a", "b", "c", "d"]
                    .into_iter()
                    .map(|nm| (nm, VariableKind::Binary, 2, uniform_codes(&mut r, 500, 2)))
                    .collect(),
            );
            let res = pc(&ds, &PcConfig::default()).unwrap();
            res.cpdag.n_edges() == 0
        })
        .count();
    let rate = empty as f64 / reps as f64;
    let floor = 0.95f64.powi(6);
    let se = (floor * (1.0 - floor) / reps as f64).sqrt();
    assert!(rate > floor - 3.0 * se, "empty-graph rate {rate}, at least {floor} expected");
}

#[test]
fn qtest_pc_usually_recovers_a_strong_chain() {
    let g = catci::graph::Dag::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let cfg = PcConfig {
        test: "qtest:glm".parse().unwrap(),
        ..Default::default()
    };
    let reps = 40;
    let exact = (0..reps)
        .filter(|&s| {
            let ds = simulate_binary_dag(&g, 2.0, 3000, s).unwrap();
            let res = pc(&ds, &cfg).unwrap();
            assert!(g.skeleton().is_subset(&res.skeleton.edges));
            res.skeleton.edges == g.skeleton()
        })
        .count();
    assert!(exact >= 30, "exact skeleton in {exact} of {reps} runs");
}

#[test]
fn test_log_is_written_as_csv() {
    let g = random_dag(5, 0.5, 1).unwrap();
    let ds = simulate_binary_dag(&g, 1.0, 500, 2).unwrap();
    let res = pc(&ds, &PcConfig::default()).unwrap();
    let names: Vec<String> = ds.names().map(String::from).collect();
    let mut buf = Vec::new();
    write_test_log(&res.skeleton.test_log, &names, &mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rd.headers().unwrap(), vec!["x", "y", "z", "family", "stat", "df", "p"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), res.skeleton.test_log.len());
    for (row, e) in rows.iter().zip(&res.skeleton.test_log) {
        assert_eq!(row[2].split(';').filter(|s| !s.is_empty()).count(), e.z.len());
        assert_eq!(row[6].parse::<f64>().unwrap(), e.result.p_value);
    }
}

#[test]
fn invalid_alpha_is_rejected() {
    let g = random_dag(3, 0.5, 1).unwrap();
    let ds = simulate_binary_dag(&g, 1.0, 50, 2).unwrap();
    for alpha in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(pc(&ds, &PcConfig { alpha, ..Default::default() }).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn skeleton_does_not_depend_on_column_order(seed in any::<u64>(), shuffle in any::<u64>()) {
        let n = 6;
        let g = random_dag(n, 0.35, seed).unwrap();
        let ds = simulate_binary_dag(&g, 1.0, 400, seed).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut r = rng(shuffle);
        for i in (1..n).rev() {
            perm.swap(i, rand::Rng::random_range(&mut r, 0..=i));
        }
        let shuffled = ds.select_columns(&perm);
        for spec in [TestSpec::G2, "qtest:glm".parse().unwrap()] {
            let cfg = PcConfig { test: spec, ..Default::default() };
            let a = pc(&ds, &cfg).unwrap().skeleton.edges;
            let b: EdgeSet = pc(&shuffled, &cfg)
                .unwrap()
                .skeleton
                .edges
                .iter()
                .map(|&(u, v)| pair(perm[u], perm[v]))
                .collect();
            prop_assert_eq!(a, b);
        }
    }
}

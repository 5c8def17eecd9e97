use std::path::{Path, PathBuf};

use catci::bench::{self, adult_truth, prepare_adult, Experiment, ExperimentConfig, MetricRow};
use catci::data::load_csv;
use catci::graph::{d_connected_pairs, precision_recall, Cpdag, EdgeSet};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn adult_schema() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/adult_schema.json")
}

fn small(experiment: Experiment) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.tests = vec!["qtest:glm".parse().unwrap(), "g2".parse().unwrap()];
    cfg.replicates = 4;
    match experiment {
        Experiment::Calibration => {
            cfg.n = vec![60];
            cfg.k = vec![1, 2];
            cfg.alpha = vec![0.05, 0.1];
        }
        Experiment::Discrimination => {
            cfg.n = vec![200];
            cfg.k = vec![1];
            cfg.beta = vec![0.0, 1.0];
        }
        Experiment::Modeltest | Experiment::Structure => {
            cfg.n = vec![300];
            cfg.k = vec![6];
            cfg.p_edge = vec![0.3];
        }
        Experiment::Adult => {
            cfg.n = vec![200, 400];
            cfg.data = Some(fixture("adult_synthetic.csv"));
            cfg.schema = Some(adult_schema());
        }
        Experiment::Runtime => {
            cfg.n = vec![100];
            cfg.k = vec![1, 2, 3];
        }
    }
    cfg
}

fn value(rows: &[MetricRow], test: &str, metric: &str) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.test == test && r.metric == metric)
        .map(|r| r.value)
        .collect()
}

fn csv(rows: &[MetricRow]) -> String {
    let mut buf = Vec::new();
    bench::write_rows(rows, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn every_experiment_is_reproducible() {
    for e in Experiment::ALL {
        let cfg = small(e);
        let a = bench::run(&cfg).unwrap();
        let b = bench::run(&cfg).unwrap();
        assert!(!a.is_empty(), "{e}");
        if e == Experiment::Runtime {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert_eq!((&x.test, x.n, x.k, &x.metric), (&y.test, y.n, y.k, &y.metric));
                assert!(x.value > 0.0);
            }
        } else {
            assert_eq!(csv(&a), csv(&b), "{e}");
        }
    }
}

#[test]
fn csv_output_has_the_fixed_header() {
    let rows = bench::run(&small(Experiment::Calibration)).unwrap();
    let text = csv(&rows);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), bench::HEADER.join(","));
    assert_eq!(lines.count(), rows.len());
    let per_cell = 2 + 2;
    assert_eq!(rows.len(), 2 * 2 * per_cell);
}

#[test]
fn seed_changes_the_data() {
    let cfg = small(Experiment::Discrimination);
    let other = ExperimentConfig { seed: 2, ..cfg.clone() };
    let a = bench::run(&cfg).unwrap();
    let b = bench::run(&other).unwrap();
    assert_ne!(csv(&a), csv(&b));
}

#[test]
fn oracle_is_perfect_on_random_graphs() {
    for e in [Experiment::Modeltest, Experiment::Structure] {
        let mut cfg = small(e);
        cfg.tests = vec!["oracle".parse().unwrap()];
        cfg.k = vec![8];
        cfg.p_edge = vec![0.2, 0.5];
        let rows = bench::run(&cfg).unwrap();
        for metric in ["precision", "recall", "f1"] {
            let v = value(&rows, "oracle", metric);
            assert_eq!(v.len(), 2);
            assert!(v.iter().all(|&x| x == 1.0), "{e} {metric}: {v:?}");
        }
    }
}

#[test]
fn extreme_edge_densities_follow_the_score_conventions() {
    let mut cfg = small(Experiment::Structure);
    cfg.tests = vec!["oracle".parse().unwrap()];
    cfg.p_edge = vec![0.0, 1.0];
    let rows = bench::run(&cfg).unwrap();
    assert_eq!(value(&rows, "oracle", "skeleton_edges"), vec![0.0, 15.0]);
    assert_eq!(value(&rows, "oracle", "f1"), vec![1.0, 1.0]);
}

#[test]
fn oracle_is_refused_where_there_is_no_graph() {
    let mut cfg = small(Experiment::Calibration);
    cfg.tests = vec!["oracle".parse().unwrap()];
    assert!(bench::run(&cfg).is_err());
    let mut cfg = small(Experiment::Calibration);
    cfg.replicates = 0;
    assert!(bench::run(&cfg).is_err());
    let mut cfg = small(Experiment::Calibration);
    cfg.alpha = vec![1.5];
    assert!(bench::run(&cfg).is_err());
}

#[test]
fn structure_from_files_scores_against_the_given_truth() {
    let mut cfg = ExperimentConfig::new(Experiment::Structure);
    cfg.tests = vec!["qtest:glm".parse().unwrap()];
    cfg.n = vec![597, 5000];
    cfg.replicates = 1;
    cfg.data = Some(fixture("lung.csv"));
    cfg.schema = Some(fixture("lung_schema.json"));
    cfg.truth = Some(fixture("lung_truth.txt"));
    let rows = bench::run(&cfg).unwrap();
    assert!(rows.iter().all(|r| r.n == Some(597)));
    assert_eq!(value(&rows, "qtest", "recall"), vec![1.0]);
}

#[test]
fn runtime_covers_the_conditioner_grid() {
    let rows = bench::run(&small(Experiment::Runtime)).unwrap();
    let ks: Vec<Option<usize>> = rows.iter().filter(|r| r.test == "g2").map(|r| r.k).collect();
    assert_eq!(ks, vec![Some(1), Some(2), Some(3)]);
    assert!(rows.iter().all(|r| r.metric == "seconds" && r.alpha.is_none()));
}

#[test]
fn adult_preparation_and_truth() {
    let (raw, _) = load_csv(&fixture("adult_synthetic.csv"), &adult_schema()).unwrap();
    let ds = prepare_adult(&raw).unwrap();
    let age = ds.index_of("Age").unwrap();
    assert_eq!(ds.meta(age).levels, ["<21", "21-30", "31-40", "41-50", "51-60", "61-70", ">70"]);
    let hours = ds.index_of("HoursPerWeek").unwrap();
    assert_eq!(ds.meta(hours).n_levels(), 4);
    let truth = adult_truth(&ds).unwrap();
    let n = ds.n_vars();
    assert_eq!(truth.rmsea.len(), n * (n - 1) / 2);
    for &((a, b), r) in &truth.rmsea {
        assert!(a < b && r >= 0.0);
        assert_eq!(truth.dependent.contains(&(a, b)), r > 0.05);
    }
}

#[test]
fn complete_graph_against_all_dependent_truth_scores_one() {
    let n = 5;
    let all: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let (connected, fallback) = d_connected_pairs(&Cpdag::new(n, &[], &all).unwrap());
    assert!(!fallback);
    let truth: EdgeSet = all.iter().copied().collect();
    assert_eq!(precision_recall(&connected, &truth).f1, 1.0);
}

#[test]
fn adult_skips_sizes_beyond_the_data() {
    let mut cfg = small(Experiment::Adult);
    cfg.n = vec![300, 100_000];
    let rows = bench::run(&cfg).unwrap();
    assert!(rows.iter().all(|r| r.n == Some(300)));
    for metric in ["precision", "recall", "f1", "dconnected_pairs", "extension_fallback"] {
        assert_eq!(value(&rows, "qtest", metric).len(), 1, "{metric}");
    }
}

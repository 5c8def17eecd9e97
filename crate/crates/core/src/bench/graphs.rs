//! Experiments on random DAGs and on user-supplied datasets.

use std::path::Path;

use super::{replicates, run_spec, BenchTest, Coords, ExperimentConfig, MetricRow, Outcome};
use crate::citest::CiQuery;
use crate::data::{chi_square_independence, contingency, discretize, load_csv, rmsea, subsample, Dataset};
use crate::error::{Error, Result};
use crate::graph::{
    d_connected_pairs, d_separated, implied_cis, pair, parse_edge_list, precision_recall, random_ci_queries,
    random_dag, skeleton_f1, CiClaim, Dag, EdgeSet, F1Score,
};
use crate::pc::{pc_with, CiTester, DataTester, OracleTester, PcResult};
use crate::rng::derive_seed;
use crate::sim::simulate_binary_dag;
use crate::stats::mean_se;

/// RMSEA above which a pair counts as dependent.
pub const RMSEA_THRESHOLD: f64 = 0.05;

const AGE_CUTPOINTS: [f64; 6] = [20.0, 30.0, 40.0, 50.0, 60.0, 70.0];
const AGE_LABELS: [&str; 7] = ["<21", "21-30", "31-40", "41-50", "51-60", "61-70", ">70"];
const HOURS_CUTPOINTS: [f64; 3] = [20.0, 30.0, 40.0];
const HOURS_LABELS: [&str; 4] = ["<=20", "21-30", "31-40", ">40"];

/// Cell coordinates folded into a seed.
fn cell_key(n: usize, k: usize, beta: Option<f64>, p_edge: Option<f64>) -> [u64; 4] {
    let bits = |v: Option<f64>| v.map_or(u64::MAX, f64::to_bits);
    [n as u64, k as u64, bits(beta), bits(p_edge)]
}

fn seed_for(cfg: &ExperimentConfig, key: [u64; 4], r: usize, part: u64) -> u64 {
    derive_seed(cfg.seed, &[cfg.experiment.code(), key[0], key[1], key[2], key[3], r as u64, part])
}

/// Per-replicate values of one metric, summarized as mean and standard error.
fn push_mean(rows: &mut Vec<MetricRow>, coords: &Coords, cfg: &ExperimentConfig, metric: &str, values: &[f64]) {
    let (m, se) = mean_se(values);
    rows.push(coords.row(cfg.experiment, Some(cfg.decision_alpha()), metric, m, Some(se), values.len()));
}

fn push_scores(rows: &mut Vec<MetricRow>, coords: &Coords, cfg: &ExperimentConfig, scores: &[F1Score]) {
    push_mean(rows, coords, cfg, "precision", &scores.iter().map(|s| s.precision).collect::<Vec<_>>());
    push_mean(rows, coords, cfg, "recall", &scores.iter().map(|s| s.recall).collect::<Vec<_>>());
    push_mean(rows, coords, cfg, "f1", &scores.iter().map(|s| s.f1).collect::<Vec<_>>());
}

/// Precision and recall with "independent" as the positive class.
fn independence_scores(claims: &[CiClaim], predicted_independent: &[bool]) -> F1Score {
    let as_set = |flags: &mut dyn Iterator<Item = bool>| -> EdgeSet {
        flags.enumerate().filter(|(_, f)| *f).map(|(i, _)| (i, i)).collect()
    };
    let truth = as_set(&mut claims.iter().map(|c| c.holds));
    let predicted = as_set(&mut predicted_independent.iter().copied());
    precision_recall(&predicted, &truth)
}

fn claim_query(ds: &Dataset, c: &CiClaim) -> CiQuery {
    let name = |v: usize| ds.meta(v).name.as_str();
    CiQuery::new(name(c.x), name(c.y), &c.z.iter().map(|&v| name(v)).collect::<Vec<_>>())
}

/// Random DAGs with their implied CIs and as many random claims; a claim is
/// predicted to hold when p > alpha.
pub fn run_modeltest(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    let alpha = cfg.decision_alpha();
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &k in &cfg.k {
            for &beta in &cfg.beta {
                for &p_edge in &cfg.p_edge {
                    log::info!("modeltest n={n} k={k} beta={beta} p_edge={p_edge}");
                    let key = cell_key(n, k, Some(beta), Some(p_edge));
                    let per_rep = replicates(cfg.replicates, |r| -> Result<(Vec<(F1Score, f64)>, usize)> {
                        let dag = random_dag(k, p_edge, seed_for(cfg, key, r, 0))?;
                        let ds = simulate_binary_dag(&dag, beta, n, seed_for(cfg, key, r, 1))?;
                        let mut claims = implied_cis(&dag);
                        let max_z = k.saturating_sub(2);
                        claims.extend(random_ci_queries(&dag, claims.len(), max_z, seed_for(cfg, key, r, 2))?);
                        let scores = cfg
                            .tests
                            .iter()
                            .map(|test| {
                                let outcomes: Vec<Outcome> = claims
                                    .iter()
                                    .enumerate()
                                    .map(|(i, c)| match test {
                                        BenchTest::Oracle => {
                                            let sep = d_separated(&dag, c.x, c.y, &c.z)
                                                .expect("claims use indices of the graph");
                                            Outcome {
                                                p: if sep { 1.0 } else { 0.0 },
                                                degenerate: false,
                                            }
                                        }
                                        BenchTest::Data(spec) => {
                                            let seed = seed_for(cfg, key, r, 3 + i as u64);
                                            run_spec(spec, &ds, &claim_query(&ds, c), seed, &cfg.fit)
                                        }
                                    })
                                    .collect();
                                let predicted: Vec<bool> = outcomes.iter().map(|o| o.p > alpha).collect();
                                let degenerate = outcomes.iter().filter(|o| o.degenerate).count();
                                let rate = if claims.is_empty() {
                                    0.0
                                } else {
                                    degenerate as f64 / claims.len() as f64
                                };
                                (independence_scores(&claims, &predicted), rate)
                            })
                            .collect();
                        Ok((scores, claims.len()))
                    })
                    .into_iter()
                    .collect::<Result<Vec<_>>>()?;
                    let claim_counts: Vec<f64> = per_rep.iter().map(|(_, c)| *c as f64).collect();
                    for (t, test) in cfg.tests.iter().enumerate() {
                        let coords = Coords {
                            n: Some(n),
                            k: Some(k),
                            beta: Some(beta),
                            p_edge: Some(p_edge),
                            ..Coords::for_test(test)
                        };
                        let scores: Vec<F1Score> = per_rep.iter().map(|(s, _)| s[t].0).collect();
                        push_scores(&mut rows, &coords, cfg, &scores);
                        let degenerate: Vec<f64> = per_rep.iter().map(|(s, _)| s[t].1).collect();
                        push_mean(&mut rows, &coords, cfg, "degenerate_rate", &degenerate);
                        push_mean(&mut rows, &coords, cfg, "claims", &claim_counts);
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// PC on `ds` with one benchmark test. The oracle needs `dag`.
fn learn(cfg: &ExperimentConfig, test: &BenchTest, ds: &Dataset, dag: Option<&Dag>, seed: u64) -> Result<PcResult> {
    let alpha = cfg.decision_alpha();
    match test {
        BenchTest::Oracle => {
            let dag = dag.ok_or_else(|| {
                Error::InvalidArgument("the oracle test needs a directed ground-truth graph".into())
            })?;
            Ok(pc_with(&OracleTester { dag }, alpha, cfg.max_cond_size))
        }
        BenchTest::Data(spec) => {
            let tester = DataTester::new(ds, *spec, seed, cfg.fit.clone());
            Ok(pc_with(&tester as &dyn CiTester, alpha, cfg.max_cond_size))
        }
    }
}

fn degenerate_rate(res: &PcResult) -> f64 {
    let log = &res.skeleton.test_log;
    if log.is_empty() {
        return 0.0;
    }
    log.iter().filter(|e| e.result.diagnostics.degenerate).count() as f64 / log.len() as f64
}

#[derive(Debug, Clone, Copy)]
struct StructureScore {
    score: F1Score,
    edges: f64,
    degenerate: f64,
}

fn structure_rows(rows: &mut Vec<MetricRow>, coords: &Coords, cfg: &ExperimentConfig, scores: &[StructureScore]) {
    push_scores(rows, coords, cfg, &scores.iter().map(|s| s.score).collect::<Vec<_>>());
    push_mean(rows, coords, cfg, "skeleton_edges", &scores.iter().map(|s| s.edges).collect::<Vec<_>>());
    push_mean(rows, coords, cfg, "degenerate_rate", &scores.iter().map(|s| s.degenerate).collect::<Vec<_>>());
}

/// PC skeleton F1 against the truth. Uses random DAGs unless `cfg.data`
/// names a dataset, in which case `cfg.truth` holds its graph and `cfg.n`
/// is the subsample grid.
pub fn run_structure(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    if cfg.data.is_some() {
        return run_structure_file(cfg);
    }
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &k in &cfg.k {
            for &beta in &cfg.beta {
                for &p_edge in &cfg.p_edge {
                    log::info!("structure n={n} k={k} beta={beta} p_edge={p_edge}");
                    let key = cell_key(n, k, Some(beta), Some(p_edge));
                    let per_rep = replicates(cfg.replicates, |r| -> Result<Vec<StructureScore>> {
                        let dag = random_dag(k, p_edge, seed_for(cfg, key, r, 0))?;
                        let ds = simulate_binary_dag(&dag, beta, n, seed_for(cfg, key, r, 1))?;
                        let truth = dag.skeleton();
                        cfg.tests
                            .iter()
                            .map(|test| {
                                let res = learn(cfg, test, &ds, Some(&dag), seed_for(cfg, key, r, 2))?;
                                Ok(StructureScore {
                                    score: skeleton_f1(&res.skeleton.edges, &truth),
                                    edges: res.skeleton.edges.len() as f64,
                                    degenerate: degenerate_rate(&res),
                                })
                            })
                            .collect()
                    })
                    .into_iter()
                    .collect::<Result<Vec<_>>>()?;
                    for (t, test) in cfg.tests.iter().enumerate() {
                        let coords = Coords {
                            n: Some(n),
                            k: Some(k),
                            beta: Some(beta),
                            p_edge: Some(p_edge),
                            ..Coords::for_test(test)
                        };
                        let scores: Vec<StructureScore> = per_rep.iter().map(|s| s[t]).collect();
                        structure_rows(&mut rows, &coords, cfg, &scores);
                    }
                }
            }
        }
    }
    Ok(rows)
}

fn require<'a>(path: &'a Option<std::path::PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("this experiment needs a {what} path")))
}

fn run_structure_file(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    let (ds, _) = load_csv(require(&cfg.data, "data")?, require(&cfg.schema, "schema")?)?;
    let truth_path = require(&cfg.truth, "truth graph")?;
    let text = std::fs::read_to_string(truth_path).map_err(|e| Error::io(truth_path, e))?;
    let names: Vec<String> = ds.names().map(str::to_string).collect();
    let truth = parse_edge_list(&text, Some(&names))?;
    let truth_dag = truth.to_dag().ok();
    let truth_skeleton = truth.skeleton();
    let k = ds.n_vars();
    let mut rows = Vec::new();
    for &n in &cfg.n {
        if n > ds.n() {
            log::warn!("skipping sample size {n}: the dataset has {} rows", ds.n());
            continue;
        }
        log::info!("structure file n={n}");
        let key = cell_key(n, k, None, None);
        let per_rep = replicates(cfg.replicates, |r| -> Result<Vec<StructureScore>> {
            let sub = subsample(&ds, n, seed_for(cfg, key, r, 0))?;
            cfg.tests
                .iter()
                .map(|test| {
                    let res = learn(cfg, test, &sub, truth_dag.as_ref(), seed_for(cfg, key, r, 2))?;
                    Ok(StructureScore {
                        score: skeleton_f1(&res.skeleton.edges, &truth_skeleton),
                        edges: res.skeleton.edges.len() as f64,
                        degenerate: degenerate_rate(&res),
                    })
                })
                .collect()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        for (t, test) in cfg.tests.iter().enumerate() {
            let coords = Coords {
                n: Some(n),
                k: Some(k),
                ..Coords::for_test(test)
            };
            let scores: Vec<StructureScore> = per_rep.iter().map(|s| s[t]).collect();
            structure_rows(&mut rows, &coords, cfg, &scores);
        }
    }
    Ok(rows)
}

/// Bins `Age` and `HoursPerWeek` when they are present and numeric.
pub fn prepare_adult(ds: &Dataset) -> Result<Dataset> {
    let labels = |l: &[&str]| l.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut out = ds.clone();
    for (column, cuts, names) in [
        ("Age", &AGE_CUTPOINTS[..], labels(&AGE_LABELS)),
        ("HoursPerWeek", &HOURS_CUTPOINTS[..], labels(&HOURS_LABELS)),
    ] {
        if out.index_of(column).is_err() {
            log::warn!("adult data has no `{column}` column; left as is");
            continue;
        }
        out = discretize(&out, column, cuts, &names)?;
    }
    Ok(out)
}

/// Pairwise dependence on the full data: a pair is dependent when the RMSEA
/// of its chi-square statistic exceeds [`RMSEA_THRESHOLD`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdultTruth {
    pub dependent: EdgeSet,
    pub rmsea: Vec<((usize, usize), f64)>,
}

pub fn adult_truth(ds: &Dataset) -> Result<AdultTruth> {
    let names: Vec<&str> = ds.names().collect();
    let mut dependent = EdgeSet::new();
    let mut values = Vec::new();
    for a in 0..ds.n_vars() {
        for b in a + 1..ds.n_vars() {
            let chi = chi_square_independence(&contingency(ds, names[a], names[b])?);
            let r = if chi.df == 0 { 0.0 } else { rmsea(chi.statistic, chi.df, ds.n())? };
            if r > RMSEA_THRESHOLD {
                dependent.insert(pair(a, b));
            }
            values.push((pair(a, b), r));
        }
    }
    Ok(AdultTruth {
        dependent,
        rmsea: values,
    })
}

#[derive(Debug, Clone, Copy)]
struct AdultScore {
    score: F1Score,
    edges: f64,
    connected: f64,
    degenerate: f64,
    fallback: f64,
}

/// PC on subsamples of the adult data; the learned CPDAG's marginally
/// d-connected pairs are scored against RMSEA dependence on the full data.
pub fn run_adult(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    let (raw, _) = load_csv(require(&cfg.data, "data")?, require(&cfg.schema, "schema")?)?;
    let ds = prepare_adult(&raw)?;
    let truth = adult_truth(&ds)?;
    let k = ds.n_vars();
    let mut rows = Vec::new();
    for &n in &cfg.n {
        if n > ds.n() {
            log::warn!("skipping sample size {n}: the dataset has {} rows", ds.n());
            continue;
        }
        log::info!("adult n={n}");
        let key = cell_key(n, k, None, None);
        let per_rep = replicates(cfg.replicates, |r| -> Result<Vec<AdultScore>> {
            let sub = subsample(&ds, n, seed_for(cfg, key, r, 0))?;
            cfg.tests
                .iter()
                .map(|test| {
                    let res = learn(cfg, test, &sub, None, seed_for(cfg, key, r, 2))?;
                    let (connected, fallback) = d_connected_pairs(&res.cpdag);
                    Ok(AdultScore {
                        score: precision_recall(&connected, &truth.dependent),
                        edges: res.skeleton.edges.len() as f64,
                        connected: connected.len() as f64,
                        degenerate: degenerate_rate(&res),
                        fallback: if fallback { 1.0 } else { 0.0 },
                    })
                })
                .collect()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        for (t, test) in cfg.tests.iter().enumerate() {
            let coords = Coords {
                n: Some(n),
                k: Some(k),
                ..Coords::for_test(test)
            };
            let scores: Vec<AdultScore> = per_rep.iter().map(|s| s[t]).collect();
            let col = |f: fn(&AdultScore) -> f64| scores.iter().map(f).collect::<Vec<_>>();
            let f1: Vec<F1Score> = scores.iter().map(|s| s.score).collect();
            push_scores(&mut rows, &coords, cfg, &f1);
            push_mean(&mut rows, &coords, cfg, "skeleton_edges", &col(|s| s.edges));
            push_mean(&mut rows, &coords, cfg, "dconnected_pairs", &col(|s| s.connected));
            push_mean(&mut rows, &coords, cfg, "degenerate_rate", &col(|s| s.degenerate));
            push_mean(&mut rows, &coords, cfg, "extension_fallback", &col(|s| s.fallback));
        }
    }
    Ok(rows)
}

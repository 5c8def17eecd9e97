//! PC-stable: level-wise skeleton search with adjacency sets frozen per
//! level, collider orientation and rule-based closure to a CPDAG.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::citest::{ci_test_cached, CiQuery, Diagnostics, ResidualCache, TestFamily, TestResult, TestSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::FitOptions;
use crate::graph::{d_separated, meek_closure, pair, Cpdag, Dag, EdgeSet, Pdag};

/// Conditional independence test on variable indices. Implementations must
/// not fail: errors are reported as degenerate results.
pub trait CiTester: Sync {
    fn n_vars(&self) -> usize;
    fn test(&self, x: usize, y: usize, z: &[usize]) -> TestResult;
}

/// A data-driven test on the columns of a dataset.
pub struct DataTester<'a> {
    ds: &'a Dataset,
    spec: TestSpec,
    seed: u64,
    opts: FitOptions,
    cache: ResidualCache,
}

impl<'a> DataTester<'a> {
    pub fn new(ds: &'a Dataset, spec: TestSpec, seed: u64, opts: FitOptions) -> Self {
        DataTester {
            ds,
            spec,
            seed,
            opts,
            cache: ResidualCache::default(),
        }
    }

    pub fn query(&self, x: usize, y: usize, z: &[usize]) -> CiQuery {
        let name = |v: usize| self.ds.meta(v).name.as_str();
        CiQuery::new(name(x), name(y), &z.iter().map(|&v| name(v)).collect::<Vec<_>>())
    }

    fn family(&self, x: usize, y: usize) -> TestFamily {
        match self.spec {
            TestSpec::QTest(_) => crate::citest::family_for(
                self.ds.meta(x).kind.is_ordered(),
                self.ds.meta(y).kind.is_ordered(),
            ),
            TestSpec::G2 => TestFamily::G2,
            TestSpec::G2MonteCarlo { .. } => TestFamily::G2MonteCarlo,
        }
    }
}

impl CiTester for DataTester<'_> {
    fn n_vars(&self) -> usize {
        self.ds.n_vars()
    }

    fn test(&self, x: usize, y: usize, z: &[usize]) -> TestResult {
        let q = self.query(x, y, z);
        let result = match self.spec {
            TestSpec::QTest(kind) => {
                let mut o = self.opts.clone();
                o.forest.seed = self.seed;
                ci_test_cached(self.ds, &q, kind, &o, &self.cache)
            }
            other => other.run(self.ds, &q, self.seed, &self.opts),
        };
        result.unwrap_or_else(|e| {
            log::warn!("test {q} failed, treating it as degenerate: {e}");
            TestResult::degenerate(
                self.family(x, y),
                Diagnostics {
                    sigma_rank: 0,
                    estimator: None,
                    n_used: self.ds.n(),
                    degenerate: true,
                    converged: false,
                },
            )
        })
    }
}

/// Perfect test from a known DAG: p = 1 when d-separated, 0 otherwise.
pub struct OracleTester<'a> {
    pub dag: &'a Dag,
}

impl CiTester for OracleTester<'_> {
    fn n_vars(&self) -> usize {
        self.dag.n_vars()
    }

    fn test(&self, x: usize, y: usize, z: &[usize]) -> TestResult {
        let sep = d_separated(self.dag, x, y, z).expect("oracle queries use valid indices");
        TestResult {
            statistic: if sep { 0.0 } else { f64::INFINITY },
            df: 0,
            p_value: if sep { 1.0 } else { 0.0 },
            family: TestFamily::G2,
            diagnostics: Diagnostics {
                sigma_rank: 0,
                estimator: None,
                n_used: 0,
                degenerate: false,
                converged: true,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcConfig {
    pub alpha: f64,
    /// Largest conditioning set tried; unlimited when `None`.
    pub max_cond_size: Option<usize>,
    pub test: TestSpec,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for PcConfig {
    fn default() -> Self {
        PcConfig {
            alpha: 0.05,
            max_cond_size: None,
            test: TestSpec::G2,
            seed: 0,
            fit: FitOptions::default(),
        }
    }
}

impl PcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} is outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

/// Separating set of each removed pair.
pub type SepsetTable = BTreeMap<(usize, usize), Vec<usize>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestLogEntry {
    pub level: usize,
    pub x: usize,
    pub y: usize,
    pub z: Vec<usize>,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub n_vars: usize,
    pub edges: EdgeSet,
    pub sepsets: SepsetTable,
    pub test_log: Vec<TestLogEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcResult {
    pub cpdag: Cpdag,
    pub skeleton: Skeleton,
}

/// Lexicographic `k`-subsets of `items`.
fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > items.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < items.len() - k + p) else {
            return out;
        };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

/// Skeleton search. At level `l`, every adjacent pair `x < y` is tested
/// against the size-`l` subsets of the level-start neighbours of `x`, then
/// of `y` (skipping subsets already tried), and removed at the end of the
/// level if some test has p > `alpha`.
pub fn learn_skeleton_with(tester: &dyn CiTester, alpha: f64, max_cond_size: Option<usize>) -> Skeleton {
    let n = tester.n_vars();
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| (0..n).filter(|&w| w != v).collect()).collect();
    let mut sepsets = SepsetTable::new();
    let mut test_log = Vec::new();
    let mut level = 0;
    loop {
        if max_cond_size.is_some_and(|m| level > m) {
            break;
        }
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| adj[x].iter().filter(move |&&y| y > x).map(move |&y| (x, y)))
            .filter(|&(x, y)| adj[x].len() > level || adj[y].len() > level)
            .collect();
        if pairs.is_empty() {
            break;
        }
        let frozen = &adj;
        let outcomes: Vec<(Option<Vec<usize>>, Vec<TestLogEntry>)> = pairs
            .par_iter()
            .map(|&(x, y)| {
                let mut log = Vec::new();
                let mut tried = BTreeSet::new();
                for (a, b) in [(x, y), (y, x)] {
                    let cand: Vec<usize> = frozen[a].iter().copied().filter(|&v| v != b).collect();
                    for z in subsets(&cand, level) {
                        if !tried.insert(z.clone()) {
                            continue;
                        }
                        let result = tester.test(x, y, &z);
                        let independent = result.p_value > alpha;
                        log.push(TestLogEntry {
                            level,
                            x,
                            y,
                            z: z.clone(),
                            result,
                        });
                        if independent {
                            return (Some(z), log);
                        }
                    }
                }
                (None, log)
            })
            .collect();
        for (&(x, y), (sepset, log)) in pairs.iter().zip(outcomes) {
            test_log.extend(log);
            if let Some(z) = sepset {
                adj[x].remove(&y);
                adj[y].remove(&x);
                sepsets.insert((x, y), z);
            }
        }
        level += 1;
    }
    let edges = (0..n)
        .flat_map(|x| adj[x].iter().filter(move |&&y| y > x).map(move |&y| (x, y)))
        .collect();
    Skeleton {
        n_vars: n,
        edges,
        sepsets,
        test_log,
    }
}

pub fn learn_skeleton(ds: &Dataset, cfg: &PcConfig) -> Result<Skeleton> {
    cfg.validate()?;
    if ds.n_vars() < 2 {
        return Err(Error::InvalidArgument("structure learning needs at least 2 variables".into()));
    }
    let tester = DataTester::new(ds, cfg.test, cfg.seed, cfg.fit.clone());
    Ok(learn_skeleton_with(&tester, cfg.alpha, cfg.max_cond_size))
}

/// Orients colliders `a -> c <- b` for non-adjacent `a, b` whose separating
/// set lacks `c`, in ascending `(a, b, c)` order with earlier orientations
/// kept on conflict, then closes under the orientation rules.
pub fn orient(skeleton: &Skeleton) -> Cpdag {
    let n = skeleton.n_vars;
    let mut p = Pdag::from_skeleton(n, &skeleton.edges);
    for a in 0..n {
        for b in a + 1..n {
            if p.adjacent(a, b) {
                continue;
            }
            let Some(sep) = skeleton.sepsets.get(&pair(a, b)) else {
                continue;
            };
            for c in 0..n {
                let both = skeleton.edges.contains(&pair(a, c)) && skeleton.edges.contains(&pair(b, c));
                if both && !sep.contains(&c) {
                    p.orient(a, c);
                    p.orient(b, c);
                }
            }
        }
    }
    meek_closure(&mut p);
    p.to_cpdag()
}

pub fn pc_with(tester: &dyn CiTester, alpha: f64, max_cond_size: Option<usize>) -> PcResult {
    let skeleton = learn_skeleton_with(tester, alpha, max_cond_size);
    PcResult {
        cpdag: orient(&skeleton),
        skeleton,
    }
}

pub fn pc(ds: &Dataset, cfg: &PcConfig) -> Result<PcResult> {
    let skeleton = learn_skeleton(ds, cfg)?;
    Ok(PcResult {
        cpdag: orient(&skeleton),
        skeleton,
    })
}

/// Writes the test log as CSV with columns `x,y,z,family,stat,df,p`; the
/// conditioning set is `;`-separated.
pub fn write_test_log(log: &[TestLogEntry], names: &[String], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "z", "family", "stat", "df", "p"])?;
    for e in log {
        let z: Vec<&str> = e.z.iter().map(|&v| names[v].as_str()).collect();
        w.write_record([
            names[e.x].clone(),
            names[e.y].clone(),
            z.join(";"),
            e.result.family.to_string(),
            e.result.statistic.to_string(),
            e.result.df.to_string(),
            e.result.p_value.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("test log", e))?;
    Ok(())
}

pub fn write_test_log_file(log: &[TestLogEntry], names: &[String], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_test_log(log, names, file)
}

/// CPDAG edge list using variable names.
pub fn cpdag_edge_list(cpdag: &Cpdag, names: &[String]) -> String {
    let mut s = format!("{}\n", cpdag.n_vars());
    for &(a, b) in cpdag.directed() {
        s.push_str(&format!("{} -> {}\n", names[a], names[b]));
    }
    for &(a, b) in cpdag.undirected() {
        s.push_str(&format!("{} -- {}\n", names[a], names[b]));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::cpdag_of;

    #[test]
    fn subsets_in_lexicographic_order() {
        assert_eq!(subsets(&[1, 4, 7], 2), vec![vec![1, 4], vec![1, 7], vec![4, 7]]);
        assert_eq!(subsets(&[1, 4], 0), vec![Vec::<usize>::new()]);
        assert!(subsets(&[1], 2).is_empty());
    }

    #[test]
    fn chain_skeleton_keeps_middle_undirected() {
        let g = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        let r = pc_with(&OracleTester { dag: &g }, 0.05, None);
        assert_eq!(r.skeleton.sepsets.get(&(0, 2)), Some(&vec![1]));
        assert!(r.cpdag.directed().is_empty());
        assert_eq!(r.cpdag.undirected().len(), 2);
    }

    #[test]
    fn collider_is_oriented() {
        let g = Dag::new(3, &[(0, 2), (1, 2)]).unwrap();
        let r = pc_with(&OracleTester { dag: &g }, 0.05, None);
        assert_eq!(r.cpdag, cpdag_of(&g));
        assert_eq!(r.cpdag.directed().iter().copied().collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn tiny_alpha_keeps_complete_graph_under_zero_p() {
        struct AlwaysDependent;
        impl CiTester for AlwaysDependent {
            fn n_vars(&self) -> usize {
                4
            }
            fn test(&self, _: usize, _: usize, _: &[usize]) -> TestResult {
                TestResult {
                    statistic: 50.0,
                    df: 1,
                    p_value: 1e-12,
                    family: TestFamily::Q1,
                    diagnostics: Diagnostics {
                        sigma_rank: 1,
                        estimator: None,
                        n_used: 100,
                        degenerate: false,
                        converged: true,
                    },
                }
            }
        }
        let s = learn_skeleton_with(&AlwaysDependent, 1e-9, None);
        assert_eq!(s.edges.len(), 6);
        assert!(s.sepsets.is_empty());
    }
}

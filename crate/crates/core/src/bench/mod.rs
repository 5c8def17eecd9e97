//! Experiment harness: each experiment turns an [`ExperimentConfig`] into
//! [`MetricRow`]s written as one CSV schema.
//!
//! Replicates run on the rayon pool and are collected in index order, so the
//! output does not depend on scheduling. Timings are the exception.

mod graphs;
mod protocols;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use graphs::{adult_truth, prepare_adult, run_adult, run_modeltest, run_structure, AdultTruth};
pub use protocols::{calibration_rows, run_calibration, run_discrimination, run_runtime};

use crate::citest::{CiQuery, TestResult, TestSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, FitOptions};
use crate::sim::NullVariant;

pub const HEADER: [&str; 12] = [
    "experiment",
    "test",
    "estimator",
    "n",
    "k",
    "beta",
    "p_edge",
    "alpha",
    "metric",
    "value",
    "se",
    "replicates",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Calibration,
    Discrimination,
    Modeltest,
    Structure,
    Adult,
    Runtime,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Calibration,
        Experiment::Discrimination,
        Experiment::Modeltest,
        Experiment::Structure,
        Experiment::Adult,
        Experiment::Runtime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Calibration => "calibration",
            Experiment::Discrimination => "discrimination",
            Experiment::Modeltest => "modeltest",
            Experiment::Structure => "structure",
            Experiment::Adult => "adult",
            Experiment::Runtime => "runtime",
        }
    }

    fn code(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment `{s}`")))
    }
}

/// A CI test as used by the harness: a data test, or the d-separation
/// oracle where the generating graph is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchTest {
    Oracle,
    Data(TestSpec),
}

impl BenchTest {
    pub fn test_name(&self) -> &'static str {
        match self {
            BenchTest::Oracle => "oracle",
            BenchTest::Data(t) => t.test_name(),
        }
    }

    pub fn estimator_name(&self) -> &'static str {
        match self {
            BenchTest::Oracle => "",
            BenchTest::Data(t) => t.estimator_name(),
        }
    }

    fn data_spec(&self, experiment: Experiment) -> Result<TestSpec> {
        match self {
            BenchTest::Data(t) => Ok(*t),
            BenchTest::Oracle => Err(Error::InvalidArgument(format!(
                "the oracle test needs a known graph and is not available for {experiment}"
            ))),
        }
    }
}

impl fmt::Display for BenchTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchTest::Oracle => f.write_str("oracle"),
            BenchTest::Data(t) => t.fmt(f),
        }
    }
}

impl FromStr for BenchTest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "oracle" {
            Ok(BenchTest::Oracle)
        } else {
            s.parse().map(BenchTest::Data)
        }
    }
}

/// Significance levels 0.001, 0.002, 0.005, ..., 0.5, 1.
pub fn alpha_grid() -> Vec<f64> {
    let mut out = Vec::new();
    for decade in [0.001, 0.01, 0.1] {
        for m in [1.0, 2.0, 5.0] {
            out.push(((m * decade) * 1e6f64).round() / 1e6);
        }
    }
    out.push(1.0);
    out
}

pub const BETA_GRID: [f64; 9] = [0.0, 0.05, 0.1, 0.15, 0.25, 0.5, 1.0, 2.0, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub tests: Vec<BenchTest>,
    pub n: Vec<usize>,
    /// conditioner counts, or the number of DAG variables for graph
    /// experiments
    pub k: Vec<usize>,
    pub beta: Vec<f64>,
    pub p_edge: Vec<f64>,
    pub alpha: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// distribution of x and y in the calibration protocol
    pub null_variant: NullVariant,
    /// discrimination on nine-level ordinal data instead of binary data
    pub ordinal: bool,
    pub max_cond_size: Option<usize>,
    pub fit: FitOptions,
    /// dataset for file-based structure runs and the adult experiment
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    /// true graph for file-based structure runs
    pub truth: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults mirroring the published protocols.
    pub fn new(experiment: Experiment) -> Self {
        let t = |s: &str| s.parse::<BenchTest>().expect("built-in test names parse");
        let standard = vec![t("qtest:glm"), t("qtest:rft"), t("g2"), t("g2mc")];
        let mut cfg = ExperimentConfig {
            experiment,
            tests: standard,
            n: vec![1000],
            k: vec![1, 3, 5],
            beta: vec![0.15],
            p_edge: vec![0.1, 0.2, 0.3, 0.5, 0.7],
            alpha: vec![0.05],
            replicates: 100,
            seed: 1,
            null_variant: NullVariant::AsWritten,
            ordinal: false,
            max_cond_size: None,
            fit: FitOptions::default(),
            data: None,
            schema: None,
            truth: None,
        };
        match experiment {
            Experiment::Calibration => {
                cfg.n = vec![20, 40, 80];
                cfg.alpha = alpha_grid();
                cfg.replicates = 500;
            }
            Experiment::Discrimination => {
                cfg.beta = BETA_GRID.to_vec();
            }
            Experiment::Modeltest | Experiment::Structure => {
                cfg.k = vec![20];
                cfg.replicates = 10;
            }
            Experiment::Adult => {
                cfg.tests = vec![t("qtest:glm"), t("qtest:rft"), t("g2")];
                cfg.n = vec![100, 200, 500, 1000, 2000];
                cfg.replicates = 10;
            }
            Experiment::Runtime => {
                cfg.k = (1..=10).collect();
                cfg.beta = vec![0.5];
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidArgument("no tests selected".into()));
        }
        let empty = [
            ("n", self.n.is_empty()),
            ("k", self.k.is_empty()),
            ("beta", self.beta.is_empty()),
            ("p_edge", self.p_edge.is_empty()),
            ("alpha", self.alpha.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidArgument(format!("the {name} grid is empty")));
        }
        if self.alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidArgument("significance levels must lie in [0, 1]".into()));
        }
        if self.p_edge.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("edge probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// First significance level, used for accept/reject decisions.
    pub fn decision_alpha(&self) -> f64 {
        self.alpha[0]
    }
}

/// One output line. Inapplicable coordinates are `None` and written empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub experiment: Experiment,
    pub test: String,
    pub estimator: String,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub beta: Option<f64>,
    pub p_edge: Option<f64>,
    pub alpha: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub se: Option<f64>,
    pub replicates: usize,
}

/// Coordinates shared by the rows of one cell.
#[derive(Debug, Clone, Default)]
pub(crate) struct Coords {
    pub test: String,
    pub estimator: String,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub beta: Option<f64>,
    pub p_edge: Option<f64>,
}

impl Coords {
    pub(crate) fn for_test(test: &BenchTest) -> Self {
        Coords {
            test: test.test_name().to_string(),
            estimator: test.estimator_name().to_string(),
            ..Default::default()
        }
    }

    pub(crate) fn row(
        &self,
        experiment: Experiment,
        alpha: Option<f64>,
        metric: &str,
        value: f64,
        se: Option<f64>,
        replicates: usize,
    ) -> MetricRow {
        MetricRow {
            experiment,
            test: self.test.clone(),
            estimator: self.estimator.clone(),
            n: self.n,
            k: self.k,
            beta: self.beta,
            p_edge: self.p_edge,
            alpha,
            metric: metric.to_string(),
            value,
            se,
            replicates,
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_rows(rows: &[MetricRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.name().to_string(),
            r.test.clone(),
            r.estimator.clone(),
            opt(r.n),
            opt(r.k),
            opt(r.beta),
            opt(r.p_edge),
            opt(r.alpha),
            r.metric.clone(),
            r.value.to_string(),
            opt(r.se),
            r.replicates.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("metric output", e))?;
    Ok(())
}

pub fn write_rows_file(rows: &[MetricRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(rows, std::io::BufWriter::new(file))
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Calibration => run_calibration(cfg),
        Experiment::Discrimination => run_discrimination(cfg),
        Experiment::Modeltest => run_modeltest(cfg),
        Experiment::Structure => run_structure(cfg),
        Experiment::Adult => run_adult(cfg),
        Experiment::Runtime => run_runtime(cfg),
    }
}

/// p-value of one test run; failures count as degenerate with p = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Outcome {
    pub p: f64,
    pub degenerate: bool,
}

impl From<Result<TestResult>> for Outcome {
    fn from(r: Result<TestResult>) -> Self {
        match r {
            Ok(t) => Outcome {
                p: t.p_value,
                degenerate: t.diagnostics.degenerate,
            },
            Err(e) => {
                log::warn!("test failed, counted as degenerate: {e}");
                Outcome { p: 1.0, degenerate: true }
            }
        }
    }
}

pub(crate) fn run_spec(spec: &TestSpec, ds: &Dataset, q: &CiQuery, seed: u64, fit: &FitOptions) -> Outcome {
    spec.run(ds, q, seed, fit).into()
}

pub(crate) fn replicates<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..count).into_par_iter().map(f).collect()
}

/// Query `x ⟂ y | z1..zk` of the test protocols.
pub(crate) fn protocol_query(k: usize) -> CiQuery {
    let z: Vec<String> = (1..=k).map(|i| format!("z{i}")).collect();
    CiQuery {
        x: "x".into(),
        y: "y".into(),
        z,
    }
}

pub(crate) fn fraction(flags: impl Iterator<Item = bool>) -> Vec<f64> {
    flags.map(|b| if b { 1.0 } else { 0.0 }).collect()
}

/// Estimator family named by a test, if it is a residual test.
pub fn estimator_of(test: &BenchTest) -> Option<EstimatorKind> {
    match test {
        BenchTest::Data(TestSpec::QTest(k)) => Some(*k),
        _ => None,
    }
}

//! Conditional independence tests.
//!
//! The residual tests fit `p(x | Z)` and `p(y | Z)`, turn both into residuals
//! and test whether the residual products have mean zero:
//!
//! | x \ y       | ordered | categorical |
//! |-------------|---------|-------------|
//! | ordered     | Q1      | Q2          |
//! | categorical | Q2      | Q3          |
//!
//! Stratified G² and its permutation variant are provided as baselines.

mod g2;
mod qstat;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use g2::{g2_montecarlo_test, g2_test};
pub use qstat::{q1, q2, q3, quadratic_form, standardized_covariance, QStatistic};
pub use crate::stats::chi_square_sf;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorKind, FitOptions};
use crate::residuals::{indicator_residuals, ls_residuals, ResidualBlock};
use crate::rng::SeedHasher;

/// Smallest sample on which a residual test is computed.
pub const MIN_SAMPLE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestFamily {
    Q1,
    Q2,
    Q3,
    G2,
    G2MonteCarlo,
}

impl fmt::Display for TestFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestFamily::Q1 => "Q1",
            TestFamily::Q2 => "Q2",
            TestFamily::Q3 => "Q3",
            TestFamily::G2 => "G2",
            TestFamily::G2MonteCarlo => "G2_montecarlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub sigma_rank: usize,
    /// requested estimator for residual tests
    pub estimator: Option<EstimatorKind>,
    pub n_used: usize,
    pub degenerate: bool,
    /// false when an iterative fit stopped at its iteration cap
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub family: TestFamily,
    pub diagnostics: Diagnostics,
}

impl TestResult {
    pub fn degenerate(family: TestFamily, mut diagnostics: Diagnostics) -> Self {
        diagnostics.degenerate = true;
        TestResult {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
            family,
            diagnostics,
        }
    }
}

/// `x ⟂ y | z`, by column name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CiQuery {
    pub x: String,
    pub y: String,
    pub z: Vec<String>,
}

impl CiQuery {
    pub fn new(x: &str, y: &str, z: &[&str]) -> Self {
        CiQuery {
            x: x.to_string(),
            y: y.to_string(),
            z: z.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x == self.y {
            return Err(Error::InvalidArgument(format!("x and y are both `{}`", self.x)));
        }
        let mut seen = HashSet::new();
        for v in &self.z {
            if *v == self.x || *v == self.y {
                return Err(Error::InvalidArgument(format!("`{v}` is both tested and conditioned on")));
            }
            if !seen.insert(v) {
                return Err(Error::InvalidArgument(format!("`{v}` appears twice in the conditioning set")));
            }
        }
        Ok(())
    }

    /// Same query with `x < y` and `z` sorted, all by name.
    pub fn canonical(&self) -> CiQuery {
        let (x, y) = if self.x <= self.y {
            (self.x.clone(), self.y.clone())
        } else {
            (self.y.clone(), self.x.clone())
        };
        let mut z = self.z.clone();
        z.sort();
        CiQuery { x, y, z }
    }

    /// Seed that depends on the unordered pair, the conditioning set and
    /// `seed`, but not on argument order.
    pub fn seed_key(&self, seed: u64) -> u64 {
        let c = self.canonical();
        let mut h = SeedHasher::new().str(&c.x).str(&c.y).u64(c.z.len() as u64);
        for v in &c.z {
            h = h.str(v);
        }
        h.u64(seed).finish()
    }
}

impl fmt::Display for CiQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} _||_ {} | {{{}}}", self.x, self.y, self.z.join(", "))
    }
}

/// Family used for a pair of variable kinds.
pub fn family_for(x_ordered: bool, y_ordered: bool) -> TestFamily {
    match (x_ordered, y_ordered) {
        (true, true) => TestFamily::Q1,
        (false, false) => TestFamily::Q3,
        _ => TestFamily::Q2,
    }
}

/// Residuals of `target` given `z` under the estimator family `estimator`.
/// GLM kinds pick binomial, proportional-odds or multinomial by target.
/// Returns `None` when the target is constant in the sample.
pub fn target_residuals(
    ds: &Dataset,
    target: usize,
    z: &[usize],
    estimator: EstimatorKind,
    opts: &FitOptions,
) -> Result<Option<(ResidualBlock, bool)>> {
    let meta = ds.meta(target);
    let observed = ds.level_counts(target).iter().filter(|&&c| c > 0).count();
    if observed < 2 {
        return Ok(None);
    }
    let kind = if estimator.is_glm() {
        EstimatorKind::glm_for(meta.kind, observed)
    } else {
        estimator
    };
    let model = estimators::fit_indices(kind, ds, target, z, opts)?;
    let converged = model.diagnostics().converged;
    let probas = model.into_fitted_proba();
    let block = if meta.kind.is_ordered() {
        ls_residuals(&probas, ds.column(target))?
    } else {
        indicator_residuals(&probas, ds.column(target), meta.n_levels() - 1)?
    };
    Ok(Some((block, converged)))
}

/// Forest seed for one side of a query.
fn side_options(opts: &FitOptions, query_key: u64, target: &str) -> FitOptions {
    let mut o = opts.clone();
    o.forest.seed = SeedHasher::new().u64(query_key).str(target).finish();
    o
}

/// Residual-based test of `q` with `estimator`. `opts.forest.seed` is the
/// user seed; the seed of each forest is derived from it and the query so
/// that swapping `x` and `y` gives the identical result.
pub fn ci_test(ds: &Dataset, q: &CiQuery, estimator: EstimatorKind, opts: &FitOptions) -> Result<TestResult> {
    run_qtest(ds, q, estimator, opts, None)
}

/// [`ci_test`] reusing residuals of earlier calls with the same target and
/// conditioning set. Forest residuals depend on the tested pair and are
/// never cached.
pub fn ci_test_cached(
    ds: &Dataset,
    q: &CiQuery,
    estimator: EstimatorKind,
    opts: &FitOptions,
    cache: &ResidualCache,
) -> Result<TestResult> {
    run_qtest(ds, q, estimator, opts, Some(cache))
}

type CachedResiduals = Option<(ResidualBlock, bool)>;

/// Residuals keyed by target and conditioning set, for one dataset,
/// estimator and option set. Cleared when it grows past its capacity.
pub struct ResidualCache {
    map: Mutex<HashMap<(usize, Vec<usize>), CachedResiduals>>,
    capacity: usize,
}

impl ResidualCache {
    pub fn new(capacity: usize) -> Self {
        ResidualCache {
            map: Mutex::new(HashMap::new()),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_compute(
        &self,
        target: usize,
        z: &[usize],
        compute: impl FnOnce() -> Result<CachedResiduals>,
    ) -> Result<CachedResiduals> {
        let key = (target, z.to_vec());
        if let Some(hit) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let value = compute()?;
        let mut map = self.map.lock().expect("cache lock");
        if map.len() >= self.capacity {
            map.clear();
        }
        map.insert(key, value.clone());
        Ok(value)
    }
}

impl Default for ResidualCache {
    fn default() -> Self {
        ResidualCache::new(20_000)
    }
}

fn run_qtest(
    ds: &Dataset,
    q: &CiQuery,
    estimator: EstimatorKind,
    opts: &FitOptions,
    cache: Option<&ResidualCache>,
) -> Result<TestResult> {
    q.validate()?;
    let q = q.canonical();
    let x = ds.index_of(&q.x)?;
    let y = ds.index_of(&q.y)?;
    let z = q.z.iter().map(|v| ds.index_of(v)).collect::<Result<Vec<_>>>()?;
    let x_ordered = ds.meta(x).kind.is_ordered();
    let y_ordered = ds.meta(y).kind.is_ordered();
    let family = family_for(x_ordered, y_ordered);
    let mut diagnostics = Diagnostics {
        sigma_rank: 0,
        estimator: Some(estimator),
        n_used: ds.n(),
        degenerate: false,
        converged: true,
    };
    if ds.n() < MIN_SAMPLE {
        return Ok(TestResult::degenerate(family, diagnostics));
    }
    let key = q.seed_key(opts.forest.seed);
    let side = |target: usize, name: &str| {
        let o = side_options(opts, key, name);
        match cache {
            Some(c) if estimator != EstimatorKind::ProbabilityForest => {
                c.get_or_compute(target, &z, || target_residuals(ds, target, &z, estimator, &o))
            }
            _ => target_residuals(ds, target, &z, estimator, &o),
        }
    };
    let rx = side(x, &q.x)?;
    let ry = side(y, &q.y)?;
    let (Some((rx, cx)), Some((ry, cy))) = (rx, ry) else {
        return Ok(TestResult::degenerate(family, diagnostics));
    };
    diagnostics.converged = cx && cy;
    combine(family, &rx, &ry, diagnostics)
}

/// Statistic of `family` on residual blocks, with the categorical side first
/// for Q2.
pub fn combine(family: TestFamily, rx: &ResidualBlock, ry: &ResidualBlock, mut diagnostics: Diagnostics) -> Result<TestResult> {
    let stat = match family {
        TestFamily::Q1 => q1(rx, ry)?,
        TestFamily::Q2 if rx.is_ordinal() => q2(ry, rx)?,
        TestFamily::Q2 => q2(rx, ry)?,
        TestFamily::Q3 => q3(rx, ry)?,
        other => return Err(Error::InvalidArgument(format!("{other} is not a residual statistic"))),
    };
    if stat.degenerate {
        return Ok(TestResult::degenerate(family, diagnostics));
    }
    diagnostics.sigma_rank = stat.rank;
    Ok(TestResult {
        statistic: stat.statistic,
        df: stat.df,
        p_value: stat.p_value(),
        family,
        diagnostics,
    })
}

/// A test kind with its configuration, as named on the command line:
/// `qtest:glm`, `qtest:rft`, `qtest:saturated`, `g2`, `g2mc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestSpec {
    QTest(EstimatorKind),
    G2,
    G2MonteCarlo { permutations: usize },
}

impl TestSpec {
    pub const DEFAULT_PERMUTATIONS: usize = 999;

    /// Runs the test. `seed` seeds forests and permutations.
    pub fn run(&self, ds: &Dataset, q: &CiQuery, seed: u64, opts: &FitOptions) -> Result<TestResult> {
        match *self {
            TestSpec::QTest(kind) => {
                let mut o = opts.clone();
                o.forest.seed = seed;
                ci_test(ds, q, kind, &o)
            }
            TestSpec::G2 => g2_test(ds, q),
            TestSpec::G2MonteCarlo { permutations } => g2_montecarlo_test(ds, q, permutations, seed),
        }
    }

    /// Short test name (`qtest`, `g2`, `g2mc`).
    pub fn test_name(&self) -> &'static str {
        match self {
            TestSpec::QTest(_) => "qtest",
            TestSpec::G2 => "g2",
            TestSpec::G2MonteCarlo { .. } => "g2mc",
        }
    }

    /// Estimator label (`glm`, `rft`, `saturated`), empty for baselines.
    pub fn estimator_name(&self) -> &'static str {
        match self {
            TestSpec::QTest(k) if k.is_glm() => "glm",
            TestSpec::QTest(EstimatorKind::ProbabilityForest) => "rft",
            TestSpec::QTest(_) => "saturated",
            _ => "",
        }
    }
}

impl fmt::Display for TestSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestSpec::QTest(_) => write!(f, "qtest:{}", self.estimator_name()),
            TestSpec::G2 => f.write_str("g2"),
            TestSpec::G2MonteCarlo { permutations } if *permutations == Self::DEFAULT_PERMUTATIONS => {
                f.write_str("g2mc")
            }
            TestSpec::G2MonteCarlo { permutations } => write!(f, "g2mc:{permutations}"),
        }
    }
}

impl FromStr for TestSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("qtest", Some(est)) => {
                let kind = match est {
                    "glm" => EstimatorKind::MultinomialLogistic,
                    "rft" | "forest" => EstimatorKind::ProbabilityForest,
                    other => other.parse()?,
                };
                Ok(TestSpec::QTest(kind))
            }
            ("qtest", None) => Ok(TestSpec::QTest(EstimatorKind::MultinomialLogistic)),
            ("g2", None) => Ok(TestSpec::G2),
            ("g2mc", None) => Ok(TestSpec::G2MonteCarlo {
                permutations: Self::DEFAULT_PERMUTATIONS,
            }),
            ("g2mc", Some(b)) => b
                .parse()
                .map(|permutations| TestSpec::G2MonteCarlo { permutations })
                .map_err(|_| Error::InvalidArgument(format!("bad permutation count `{b}`"))),
            _ => Err(Error::InvalidArgument(format!(
                "unknown test `{s}` (expected qtest:glm, qtest:rft, qtest:saturated, g2 or g2mc)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_validation() {
        assert!(CiQuery::new("a", "a", &[]).validate().is_err());
        assert!(CiQuery::new("a", "b", &["a"]).validate().is_err());
        assert!(CiQuery::new("a", "b", &["c", "c"]).validate().is_err());
        assert!(CiQuery::new("a", "b", &["c", "d"]).validate().is_ok());
    }

    #[test]
    fn seed_key_ignores_argument_order() {
        let a = CiQuery::new("x", "y", &["b", "a"]);
        let b = CiQuery::new("y", "x", &["a", "b"]);
        assert_eq!(a.seed_key(7), b.seed_key(7));
        assert_ne!(a.seed_key(7), a.seed_key(8));
        assert_ne!(a.seed_key(7), CiQuery::new("x", "y", &["a"]).seed_key(7));
    }

    #[test]
    fn dispatch_by_kind() {
        assert_eq!(family_for(true, true), TestFamily::Q1);
        assert_eq!(family_for(false, true), TestFamily::Q2);
        assert_eq!(family_for(true, false), TestFamily::Q2);
        assert_eq!(family_for(false, false), TestFamily::Q3);
    }

    #[test]
    fn test_spec_round_trip() {
        for s in ["qtest:glm", "qtest:rft", "qtest:saturated", "g2", "g2mc", "g2mc:199"] {
            assert_eq!(s.parse::<TestSpec>().unwrap().to_string(), s);
        }
        assert!("chisq".parse::<TestSpec>().is_err());
    }
}

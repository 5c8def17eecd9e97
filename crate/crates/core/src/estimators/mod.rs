//! Conditional probability estimators `p̂(target | Z)`.
//!
//! Every estimator returns, for each row, a full probability vector over the
//! target's declared levels. Levels that never occur in the training sample
//! are dropped from the fit and receive probability exactly 0.

mod design;
mod forest;
mod logistic;
mod newton;
mod ordinal;
mod saturated;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use design::ConditionerSig;

use crate::data::{Dataset, VariableKind};
use crate::error::{Error, Result};
use design::{signatures, tree_feature_count, tree_features, LinearDesign};
use forest::ForestModel;
use logistic::{BinomialFit, MultinomialFit};
use ordinal::ProportionalOddsFit;
use saturated::SaturatedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Saturated,
    BinomialLogistic,
    MultinomialLogistic,
    ProportionalOdds,
    ProbabilityForest,
}

impl EstimatorKind {
    pub fn is_glm(self) -> bool {
        matches!(
            self,
            EstimatorKind::BinomialLogistic | EstimatorKind::MultinomialLogistic | EstimatorKind::ProportionalOdds
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Saturated => "saturated",
            EstimatorKind::BinomialLogistic => "binomial_logistic",
            EstimatorKind::MultinomialLogistic => "multinomial_logistic",
            EstimatorKind::ProportionalOdds => "proportional_odds",
            EstimatorKind::ProbabilityForest => "probability_forest",
        }
    }

    /// The GLM appropriate for a target: binomial for two observed levels,
    /// proportional odds for ordered targets with more, multinomial for
    /// categorical targets.
    pub fn glm_for(kind: VariableKind, observed_levels: usize) -> EstimatorKind {
        if observed_levels <= 2 {
            EstimatorKind::BinomialLogistic
        } else if kind.is_ordered() {
            EstimatorKind::ProportionalOdds
        } else {
            EstimatorKind::MultinomialLogistic
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "saturated" => EstimatorKind::Saturated,
            "binomial_logistic" | "binomial" => EstimatorKind::BinomialLogistic,
            "multinomial_logistic" | "multinomial" | "glm" => EstimatorKind::MultinomialLogistic,
            "proportional_odds" | "polr" => EstimatorKind::ProportionalOdds,
            "probability_forest" | "forest" | "rft" => EstimatorKind::ProbabilityForest,
            other => return Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// Training rows are predicted by the trees whose bootstrap sample
    /// does not contain them.
    OutOfBag,
    AllTrees,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(#features))`.
    pub mtry: Option<usize>,
    /// Nodes with at most this many samples become leaves.
    pub min_node_size: usize,
    pub prediction_mode: PredictionMode,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 50,
            mtry: None,
            min_node_size: 10,
            prediction_mode: PredictionMode::OutOfBag,
            seed: 0,
        }
    }
}

/// Tuning shared by all estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Additive smoothing of the saturated estimator.
    pub smoothing: f64,
    /// Ridge penalty on non-intercept GLM coefficients.
    pub ridge: f64,
    pub forest: ForestParams,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            smoothing: 0.5,
            ridge: 1e-4,
            forest: ForestParams::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitDiagnostics {
    pub converged: bool,
    pub iterations: usize,
    /// Penalized log-likelihood at the optimum of a GLM fit.
    pub objective: Option<f64>,
    /// Target levels absent from the training sample.
    pub dropped_levels: Vec<usize>,
    /// Estimator actually used when the requested one was replaced.
    pub fallback: Option<EstimatorKind>,
    /// Training rows that were in every bootstrap sample and were
    /// predicted with all trees instead.
    pub oob_fallback_rows: usize,
}

#[derive(Debug, Clone)]
enum Fitted {
    Marginal(Vec<f64>),
    Saturated(SaturatedModel),
    Binomial(LinearDesign, BinomialFit),
    Multinomial(LinearDesign, MultinomialFit),
    ProportionalOdds(LinearDesign, ProportionalOddsFit),
    Forest(ForestModel),
}

/// A fitted conditional probability model.
#[derive(Debug, Clone)]
pub struct ProbModel {
    kind: EstimatorKind,
    target: String,
    target_levels: usize,
    /// codes of the levels seen in training, ascending
    classes: Vec<usize>,
    conditioners: Vec<ConditionerSig>,
    fitted: Fitted,
    fitted_proba: DMatrix<f64>,
    diagnostics: FitDiagnostics,
}

/// Fit `kind` for `target` given `conditioners` (column names).
pub fn fit(kind: EstimatorKind, ds: &Dataset, target: &str, conditioners: &[&str], opts: &FitOptions) -> Result<ProbModel> {
    let t = ds.index_of(target)?;
    let vars = conditioners.iter().map(|c| ds.index_of(c)).collect::<Result<Vec<_>>>()?;
    fit_indices(kind, ds, t, &vars, opts)
}

/// Expand class-space probabilities (n x m) to level space (n x L).
fn expand(p: &DMatrix<f64>, classes: &[usize], levels: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(p.nrows(), levels);
    for (c, &l) in classes.iter().enumerate() {
        out.set_column(l, &p.column(c));
    }
    out
}

fn binary_response(y: &[usize]) -> Vec<f64> {
    y.iter().map(|&c| c as f64).collect()
}

fn binomial_matrix(p1: &DVector<f64>) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(p1.len(), 2);
    for (i, &v) in p1.iter().enumerate() {
        p[(i, 0)] = 1.0 - v;
        p[(i, 1)] = v;
    }
    p
}

pub(crate) fn fit_indices(
    kind: EstimatorKind,
    ds: &Dataset,
    target: usize,
    vars: &[usize],
    opts: &FitOptions,
) -> Result<ProbModel> {
    let meta = ds.meta(target);
    if vars.contains(&target) {
        return Err(Error::InvalidArgument(format!(
            "target `{}` is also a conditioner",
            meta.name
        )));
    }
    let levels = meta.n_levels();
    let counts = ds.level_counts(target);
    let classes: Vec<usize> = (0..levels).filter(|&l| counts[l] > 0).collect();
    if classes.len() < 2 {
        return Err(Error::Data(format!("target `{}` is constant in the sample", meta.name)));
    }
    let mut class_of = vec![usize::MAX; levels];
    for (c, &l) in classes.iter().enumerate() {
        class_of[l] = c;
    }
    let y: Vec<usize> = ds.column(target).iter().map(|&l| class_of[l]).collect();
    let m = classes.len();
    let mut diagnostics = FitDiagnostics {
        converged: true,
        dropped_levels: (0..levels).filter(|&l| counts[l] == 0).collect(),
        ..Default::default()
    };

    let (fitted, proba) = match kind {
        EstimatorKind::Saturated => {
            let observed: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
            let model = SaturatedModel::fit(ds, target, vars, &observed, opts.smoothing);
            let p = model.predict(ds, vars);
            (Fitted::Saturated(model), p)
        }
        EstimatorKind::ProbabilityForest if tree_feature_count(ds, vars) == 0 => {
            let marginal: Vec<f64> = counts.iter().map(|&c| c as f64 / ds.n() as f64).collect();
            let p = DMatrix::from_fn(ds.n(), levels, |_, j| marginal[j]);
            (Fitted::Marginal(marginal), p)
        }
        EstimatorKind::ProbabilityForest => {
            let features = tree_features(ds, vars);
            let fit = forest::fit_forest(&features, &y, m, &opts.forest);
            diagnostics.oob_fallback_rows = fit.oob_fallback_rows;
            let p = expand(&fit.fitted, &classes, levels);
            (Fitted::Forest(fit.model), p)
        }
        EstimatorKind::BinomialLogistic => {
            if m != 2 {
                return Err(Error::InvalidArgument(format!(
                    "binomial_logistic needs a binary target, `{}` has {m} observed levels",
                    meta.name
                )));
            }
            fit_binomial(ds, vars, &y, &classes, levels, opts, &mut diagnostics)?
        }
        EstimatorKind::MultinomialLogistic => {
            fit_multinomial(ds, vars, &y, &classes, levels, opts, &mut diagnostics)?
        }
        EstimatorKind::ProportionalOdds => {
            if !meta.kind.is_ordered() {
                return Err(Error::InvalidArgument(format!(
                    "proportional_odds needs an ordinal target, `{}` is categorical",
                    meta.name
                )));
            }
            if m < 3 {
                diagnostics.fallback = Some(EstimatorKind::BinomialLogistic);
                fit_binomial(ds, vars, &y, &classes, levels, opts, &mut diagnostics)?
            } else {
                let design = LinearDesign::new(ds, vars, false);
                let x = design.matrix(ds, vars);
                match ordinal::fit_proportional_odds(&x, &y, m, opts.ridge) {
                    Ok(fit) if fit.outcome.converged && fit.intercepts_increasing() => {
                        diagnostics.iterations = fit.outcome.iterations;
                        diagnostics.objective = Some(fit.outcome.value);
                        let p = expand(&ordinal::proportional_odds_proba(&x, &fit), &classes, levels);
                        (Fitted::ProportionalOdds(design, fit), p)
                    }
                    other => {
                        log::debug!(
                            "proportional odds fit for `{}` failed ({}), falling back to multinomial",
                            meta.name,
                            match &other {
                                Ok(_) => "not converged".to_string(),
                                Err(e) => e.to_string(),
                            }
                        );
                        diagnostics.fallback = Some(EstimatorKind::MultinomialLogistic);
                        fit_multinomial(ds, vars, &y, &classes, levels, opts, &mut diagnostics)?
                    }
                }
            }
        }
    };

    Ok(ProbModel {
        kind,
        target: meta.name.clone(),
        target_levels: levels,
        classes,
        conditioners: signatures(ds, vars),
        fitted,
        fitted_proba: proba,
        diagnostics,
    })
}

fn fit_binomial(
    ds: &Dataset,
    vars: &[usize],
    y: &[usize],
    classes: &[usize],
    levels: usize,
    opts: &FitOptions,
    diagnostics: &mut FitDiagnostics,
) -> Result<(Fitted, DMatrix<f64>)> {
    let design = LinearDesign::new(ds, vars, true);
    let x = design.matrix(ds, vars);
    let fit = logistic::fit_binomial(&x, &binary_response(y), opts.ridge)?;
    diagnostics.converged = fit.outcome.converged;
    diagnostics.iterations = fit.outcome.iterations;
    diagnostics.objective = Some(fit.outcome.value);
    let p = expand(&binomial_matrix(&logistic::binomial_proba(&x, &fit.coef)), classes, levels);
    Ok((Fitted::Binomial(design, fit), p))
}

fn fit_multinomial(
    ds: &Dataset,
    vars: &[usize],
    y: &[usize],
    classes: &[usize],
    levels: usize,
    opts: &FitOptions,
    diagnostics: &mut FitDiagnostics,
) -> Result<(Fitted, DMatrix<f64>)> {
    let design = LinearDesign::new(ds, vars, true);
    let x = design.matrix(ds, vars);
    let fit = logistic::fit_multinomial(&x, y, classes.len(), opts.ridge)?;
    diagnostics.converged = fit.outcome.converged;
    diagnostics.iterations = fit.outcome.iterations;
    diagnostics.objective = Some(fit.outcome.value);
    let p = expand(&logistic::multinomial_proba(&x, &fit.coef), classes, levels);
    Ok((Fitted::Multinomial(design, fit), p))
}

impl ProbModel {
    /// The requested estimator.
    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    /// The estimator that produced the probabilities after any fallback.
    pub fn effective_kind(&self) -> EstimatorKind {
        self.diagnostics.fallback.unwrap_or(self.kind)
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn target_levels(&self) -> usize {
        self.target_levels
    }

    pub fn conditioners(&self) -> &[ConditionerSig] {
        &self.conditioners
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    /// Probabilities for the training rows (n x L). Forests in out-of-bag
    /// mode use only trees that did not see the row.
    pub fn fitted_proba(&self) -> &DMatrix<f64> {
        &self.fitted_proba
    }

    pub fn into_fitted_proba(self) -> DMatrix<f64> {
        self.fitted_proba
    }

    /// Probabilities for arbitrary rows of `ds` (n x L). The conditioners
    /// must carry the same names and level lists as at fit time. Forests
    /// average over all trees here.
    pub fn predict_proba(&self, ds: &Dataset, conditioners: &[&str]) -> Result<DMatrix<f64>> {
        let vars = design::resolve(ds, conditioners, &self.conditioners)?;
        let p = match &self.fitted {
            Fitted::Marginal(m) => return Ok(DMatrix::from_fn(ds.n(), m.len(), |_, j| m[j])),
            Fitted::Saturated(model) => return Ok(model.predict(ds, &vars)),
            Fitted::Forest(model) => model.predict(&tree_features(ds, &vars), ds.n()),
            Fitted::Binomial(design, fit) => {
                binomial_matrix(&logistic::binomial_proba(&design.matrix(ds, &vars), &fit.coef))
            }
            Fitted::Multinomial(design, fit) => logistic::multinomial_proba(&design.matrix(ds, &vars), &fit.coef),
            Fitted::ProportionalOdds(design, fit) => ordinal::proportional_odds_proba(&design.matrix(ds, &vars), fit),
        };
        Ok(expand(&p, &self.classes, self.target_levels))
    }

    /// Coefficients of a GLM fit, intercept(s) first. For the multinomial
    /// model, one row per non-reference class. `None` for other estimators.
    pub fn coefficients(&self) -> Option<DMatrix<f64>> {
        match &self.fitted {
            Fitted::Binomial(_, fit) => Some(DMatrix::from_row_slice(1, fit.coef.len(), fit.coef.as_slice())),
            Fitted::Multinomial(_, fit) => Some(fit.coef.clone()),
            Fitted::ProportionalOdds(_, fit) => {
                let all: Vec<f64> = fit.intercepts.iter().chain(&fit.coef).copied().collect();
                Some(DMatrix::from_row_slice(1, all.len(), &all))
            }
            _ => None,
        }
    }

    /// Intercepts of a proportional-odds fit.
    pub fn ordinal_intercepts(&self) -> Option<&[f64]> {
        match &self.fitted {
            Fitted::ProportionalOdds(_, fit) => Some(&fit.intercepts),
            _ => None,
        }
    }

    /// Number of distinct conditioner patterns of a saturated fit.
    pub fn n_strata(&self) -> Option<usize> {
        match &self.fitted {
            Fitted::Saturated(m) => Some(m.n_strata()),
            _ => None,
        }
    }
}

//! Per-stratum smoothed frequencies.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::data::Dataset;

#[derive(Debug, Clone)]
pub(crate) struct SaturatedModel {
    strata: HashMap<Vec<usize>, Vec<f64>>,
    marginal: Vec<f64>,
}

fn smoothed(counts: &[f64], observed: &[bool], alpha: f64) -> Vec<f64> {
    let m = observed.iter().filter(|&&o| o).count() as f64;
    let total: f64 = counts.iter().sum::<f64>() + alpha * m;
    counts
        .iter()
        .zip(observed)
        .map(|(&c, &o)| if o { (c + alpha) / total } else { 0.0 })
        .collect()
}

fn pattern(ds: &Dataset, vars: &[usize], row: usize) -> Vec<usize> {
    vars.iter().map(|&v| ds.column(v)[row]).collect()
}

impl SaturatedModel {
    /// `observed[l]` marks target levels present in the training sample;
    /// the others get probability 0 everywhere.
    pub(crate) fn fit(ds: &Dataset, target: usize, vars: &[usize], observed: &[bool], alpha: f64) -> Self {
        let levels = observed.len();
        let y = ds.column(target);
        let mut counts: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
        let mut marginal = vec![0.0; levels];
        for (i, &yi) in y.iter().enumerate() {
            counts.entry(pattern(ds, vars, i)).or_insert_with(|| vec![0.0; levels])[yi] += 1.0;
            marginal[yi] += 1.0;
        }
        let strata = counts
            .into_iter()
            .map(|(k, c)| (k, smoothed(&c, observed, alpha)))
            .collect();
        SaturatedModel {
            strata,
            marginal: smoothed(&marginal, observed, alpha),
        }
    }

    /// Unseen strata fall back to the smoothed marginal distribution.
    pub(crate) fn predict(&self, ds: &Dataset, vars: &[usize]) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(ds.n(), self.marginal.len());
        for i in 0..ds.n() {
            let probs = self.strata.get(&pattern(ds, vars, i)).unwrap_or(&self.marginal);
            for (j, &v) in probs.iter().enumerate() {
                p[(i, j)] = v;
            }
        }
        p
    }

    pub(crate) fn n_strata(&self) -> usize {
        self.strata.len()
    }
}

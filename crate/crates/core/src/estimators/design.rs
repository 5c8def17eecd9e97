//! Encoding of conditioner columns into numeric predictors.

use nalgebra::DMatrix;

use crate::data::{Dataset, VariableKind};
use crate::error::{Error, Result};

/// Fit-time description of a conditioner, checked again at predict time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionerSig {
    pub name: String,
    pub kind: VariableKind,
    pub levels: Vec<String>,
}

pub(crate) fn signatures(ds: &Dataset, vars: &[usize]) -> Vec<ConditionerSig> {
    vars.iter()
        .map(|&v| {
            let m = ds.meta(v);
            ConditionerSig {
                name: m.name.clone(),
                kind: m.kind,
                levels: m.levels.clone(),
            }
        })
        .collect()
}

/// Resolve conditioner names against `ds` and check they match the fit-time
/// signatures.
pub(crate) fn resolve(ds: &Dataset, names: &[&str], expected: &[ConditionerSig]) -> Result<Vec<usize>> {
    if names.len() != expected.len() {
        return Err(Error::InvalidArgument(format!(
            "model was fitted on {} conditioners, got {}",
            expected.len(),
            names.len()
        )));
    }
    names
        .iter()
        .zip(expected)
        .map(|(name, sig)| {
            let v = ds.index_of(name)?;
            let m = ds.meta(v);
            if m.name != sig.name || m.kind != sig.kind || m.levels != sig.levels {
                return Err(Error::InvalidArgument(format!(
                    "conditioner `{name}` does not match the fit-time schema"
                )));
            }
            Ok(v)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    /// Ordinal/binary: integer score.
    Score,
    /// Categorical: indicator of one level.
    Dummy(usize),
}

/// Linear-model encoding: ordered conditioners as integer scores,
/// categorical conditioners one-hot with the first observed level as
/// reference. Levels not seen in training get no column.
#[derive(Debug, Clone)]
pub(crate) struct LinearDesign {
    columns: Vec<(usize, Encoding)>,
    intercept: bool,
}

impl LinearDesign {
    pub(crate) fn new(ds: &Dataset, vars: &[usize], intercept: bool) -> Self {
        let mut columns = Vec::new();
        for (slot, &v) in vars.iter().enumerate() {
            match ds.meta(v).kind {
                VariableKind::Binary | VariableKind::Ordinal => columns.push((slot, Encoding::Score)),
                VariableKind::Categorical => {
                    let observed: Vec<usize> = ds
                        .level_counts(v)
                        .iter()
                        .enumerate()
                        .filter(|(_, &c)| c > 0)
                        .map(|(l, _)| l)
                        .collect();
                    columns.extend(observed.iter().skip(1).map(|&l| (slot, Encoding::Dummy(l))));
                }
            }
        }
        LinearDesign { columns, intercept }
    }

    pub(crate) fn width(&self) -> usize {
        self.columns.len() + usize::from(self.intercept)
    }

    /// n x width matrix for the rows of `ds`, conditioners resolved to `vars`.
    pub(crate) fn matrix(&self, ds: &Dataset, vars: &[usize]) -> DMatrix<f64> {
        let offset = usize::from(self.intercept);
        let mut x = DMatrix::zeros(ds.n(), self.width());
        if self.intercept {
            x.column_mut(0).fill(1.0);
        }
        for (j, &(slot, enc)) in self.columns.iter().enumerate() {
            let col = ds.column(vars[slot]);
            let mut out = x.column_mut(j + offset);
            for (i, &c) in col.iter().enumerate() {
                out[i] = match enc {
                    Encoding::Score => c as f64,
                    Encoding::Dummy(l) => f64::from(u8::from(c == l)),
                };
            }
        }
        x
    }
}

/// Tree-model encoding: ordered conditioners as scores, categorical
/// conditioners fully one-hot (one feature per level). Column-major.
pub(crate) fn tree_features(ds: &Dataset, vars: &[usize]) -> Vec<Vec<u32>> {
    let mut features = Vec::new();
    for &v in vars {
        let col = ds.column(v);
        match ds.meta(v).kind {
            VariableKind::Binary | VariableKind::Ordinal => {
                features.push(col.iter().map(|&c| c as u32).collect());
            }
            VariableKind::Categorical => {
                for l in 0..ds.meta(v).n_levels() {
                    features.push(col.iter().map(|&c| u32::from(c == l)).collect());
                }
            }
        }
    }
    features
}

/// Number of tree features [`tree_features`] produces.
pub(crate) fn tree_feature_count(ds: &Dataset, vars: &[usize]) -> usize {
    vars.iter()
        .map(|&v| match ds.meta(v).kind {
            VariableKind::Categorical => ds.meta(v).n_levels(),
            _ => 1,
        })
        .sum()
}

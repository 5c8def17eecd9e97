//! Residuals of a target given predicted level probabilities.
//!
//! Ordered targets get one Li-Shepherd residual per row,
//! `P(Y < y_i) - P(Y > y_i)`. Categorical targets get one indicator
//! residual `1{x_i = j} - P(X = j)` per retained level.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ResidualBlock {
    OrdinalVector(DVector<f64>),
    IndicatorMatrix {
        values: DMatrix<f64>,
        /// level without a column
        dropped: usize,
    },
}

impl ResidualBlock {
    pub fn n(&self) -> usize {
        match self {
            ResidualBlock::OrdinalVector(v) => v.len(),
            ResidualBlock::IndicatorMatrix { values, .. } => values.nrows(),
        }
    }

    /// Number of residual columns (1 for the ordinal vector).
    pub fn width(&self) -> usize {
        match self {
            ResidualBlock::OrdinalVector(_) => 1,
            ResidualBlock::IndicatorMatrix { values, .. } => values.ncols(),
        }
    }

    pub fn is_ordinal(&self) -> bool {
        matches!(self, ResidualBlock::OrdinalVector(_))
    }

    /// Residuals as an `n x width` matrix.
    pub fn as_matrix(&self) -> DMatrix<f64> {
        match self {
            ResidualBlock::OrdinalVector(v) => DMatrix::from_column_slice(v.len(), 1, v.as_slice()),
            ResidualBlock::IndicatorMatrix { values, .. } => values.clone(),
        }
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        match self {
            ResidualBlock::OrdinalVector(v) => {
                assert_eq!(j, 0, "ordinal residuals have a single column");
                v.clone()
            }
            ResidualBlock::IndicatorMatrix { values, .. } => values.column(j).into_owned(),
        }
    }
}

fn check_shape(probas: &DMatrix<f64>, codes: &[usize]) -> Result<()> {
    if probas.nrows() != codes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} probability rows for {} observations",
            probas.nrows(),
            codes.len()
        )));
    }
    if let Some(&bad) = codes.iter().find(|&&c| c >= probas.ncols()) {
        return Err(Error::InvalidArgument(format!(
            "level code {bad} out of range for {} levels",
            probas.ncols()
        )));
    }
    Ok(())
}

/// Li-Shepherd residuals of an ordered target.
pub fn ls_residuals(probas: &DMatrix<f64>, y: &[usize]) -> Result<ResidualBlock> {
    if probas.ncols() < 2 {
        return Err(Error::InvalidArgument("residuals need at least 2 levels".into()));
    }
    check_shape(probas, y)?;
    let r = DVector::from_iterator(
        y.len(),
        y.iter().enumerate().map(|(i, &yi)| {
            let row = probas.row(i);
            let below: f64 = row.iter().take(yi).sum();
            let above: f64 = row.iter().skip(yi + 1).sum();
            below - above
        }),
    );
    Ok(ResidualBlock::OrdinalVector(r))
}

/// Indicator residuals of a categorical target for every level except `drop`.
pub fn indicator_residuals(probas: &DMatrix<f64>, x: &[usize], drop: usize) -> Result<ResidualBlock> {
    let k = probas.ncols();
    if k < 2 {
        return Err(Error::InvalidArgument("residuals need at least 2 levels".into()));
    }
    if drop >= k {
        return Err(Error::InvalidArgument(format!("drop index {drop} out of range for {k} levels")));
    }
    check_shape(probas, x)?;
    let kept: Vec<usize> = (0..k).filter(|&j| j != drop).collect();
    let values = DMatrix::from_fn(x.len(), k - 1, |i, c| {
        let j = kept[c];
        f64::from(u8::from(x[i] == j)) - probas[(i, j)]
    });
    Ok(ResidualBlock::IndicatorMatrix { values, dropped: drop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn middle_level_residual() {
        let p = DMatrix::from_row_slice(1, 3, &[0.2, 0.5, 0.3]);
        let r = ls_residuals(&p, &[1]).unwrap();
        assert!((r.column(0)[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn binary_residual_is_observed_minus_expected() {
        let p = DMatrix::from_row_slice(1, 2, &[0.7, 0.3]);
        let r = ls_residuals(&p, &[1]).unwrap();
        assert!((r.column(0)[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn binary_ls_equals_indicator_column() {
        let p = DMatrix::from_row_slice(4, 2, &[0.7, 0.3, 0.1, 0.9, 0.5, 0.5, 0.25, 0.75]);
        let y = [1, 0, 1, 0];
        let ls = ls_residuals(&p, &y).unwrap().column(0);
        // dropping level 0 leaves the indicator of level 1
        let ind = indicator_residuals(&p, &y, 0).unwrap().column(0);
        assert_eq!(ls, ind);
    }

    #[test]
    fn row_at_dropped_level_is_negative_probabilities() {
        let p = DMatrix::from_row_slice(1, 3, &[0.2, 0.5, 0.3]);
        let r = indicator_residuals(&p, &[2], 2).unwrap().as_matrix();
        assert_eq!(r.row(0).iter().copied().collect::<Vec<_>>(), vec![-0.2, -0.5]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = DMatrix::from_row_slice(1, 3, &[0.2, 0.5, 0.3]);
        assert!(indicator_residuals(&p, &[0], 3).is_err());
        assert!(ls_residuals(&p, &[3]).is_err());
        assert!(ls_residuals(&DMatrix::from_row_slice(1, 1, &[1.0]), &[0]).is_err());
    }

    fn simplex_row(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.001f64..1.0, len).prop_map(|w| {
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        })
    }

    proptest! {
        #[test]
        fn expected_residual_under_own_distribution_is_zero(row in (2usize..7).prop_flat_map(simplex_row)) {
            let l = row.len();
            let p = DMatrix::from_fn(l, l, |_, j| row[j]);
            let y: Vec<usize> = (0..l).collect();
            let r = ls_residuals(&p, &y).unwrap().column(0);
            let e: f64 = (0..l).map(|j| row[j] * r[j]).sum();
            prop_assert!(e.abs() < 1e-12);
        }

        #[test]
        fn residuals_lie_in_unit_interval(row in (2usize..7).prop_flat_map(simplex_row), pick in 0usize..7) {
            let l = row.len();
            let y = pick % l;
            let p = DMatrix::from_row_slice(1, l, &row);
            let r = ls_residuals(&p, &[y]).unwrap().column(0)[0];
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        }

        #[test]
        fn reversing_level_order_negates(row in (2usize..7).prop_flat_map(simplex_row), pick in 0usize..7) {
            let l = row.len();
            let y = pick % l;
            let rev: Vec<f64> = row.iter().rev().copied().collect();
            let a = ls_residuals(&DMatrix::from_row_slice(1, l, &row), &[y]).unwrap().column(0)[0];
            let b = ls_residuals(&DMatrix::from_row_slice(1, l, &rev), &[l - 1 - y]).unwrap().column(0)[0];
            prop_assert!((a + b).abs() < 1e-12);
        }
    }
}

//! Quadratic-form statistics on products of residuals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::residuals::ResidualBlock;

/// Below this variance (or largest covariance eigenvalue) the products carry
/// no information.
pub const DEGENERATE_VARIANCE: f64 = 1e-14;
/// Covariance eigenvalues below this fraction of the largest are dropped.
pub const RELATIVE_EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QStatistic {
    pub statistic: f64,
    pub df: usize,
    /// numerical rank of the product covariance
    pub rank: usize,
    pub degenerate: bool,
}

impl QStatistic {
    fn degenerate() -> Self {
        QStatistic {
            statistic: 0.0,
            df: 0,
            rank: 0,
            degenerate: true,
        }
    }

    pub fn p_value(&self) -> f64 {
        if self.degenerate {
            1.0
        } else {
            crate::stats::chi_square_sf(self.statistic, self.df)
        }
    }
}

fn check_lengths(a: &ResidualBlock, b: &ResidualBlock) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::InvalidArgument(format!("residual lengths differ: {} vs {}", a.n(), b.n())));
    }
    if a.n() < 2 {
        return Err(Error::InvalidArgument("at least 2 rows are needed".into()));
    }
    Ok(a.n())
}

fn ordinal(block: &ResidualBlock) -> Result<&DVector<f64>> {
    match block {
        ResidualBlock::OrdinalVector(v) => Ok(v),
        ResidualBlock::IndicatorMatrix { .. } => Err(Error::InvalidArgument("expected ordinal residuals".into())),
    }
}

fn indicator(block: &ResidualBlock) -> Result<&DMatrix<f64>> {
    match block {
        ResidualBlock::IndicatorMatrix { values, .. } => Ok(values),
        ResidualBlock::OrdinalVector(_) => Err(Error::InvalidArgument("expected indicator residuals".into())),
    }
}

/// `sqrt(n) * mean(w) / sd(w)` for `w = rx * ry`, the signed root of Q1.
/// `None` when the products have (numerically) zero variance.
pub fn standardized_covariance(rx: &ResidualBlock, ry: &ResidualBlock) -> Result<Option<f64>> {
    let n = check_lengths(rx, ry)?;
    let (x, y) = (ordinal(rx)?, ordinal(ry)?);
    let w = x.component_mul(y);
    let mean = w.mean();
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var < DEGENERATE_VARIANCE {
        return Ok(None);
    }
    Ok(Some((n as f64).sqrt() * mean / var.sqrt()))
}

/// Squared generalized covariance of two ordinal residual vectors, df 1.
pub fn q1(rx: &ResidualBlock, ry: &ResidualBlock) -> Result<QStatistic> {
    let n = check_lengths(rx, ry)?;
    let (x, y) = (ordinal(rx)?, ordinal(ry)?);
    let w = x.component_mul(y);
    let mean = w.mean();
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var < DEGENERATE_VARIANCE {
        return Ok(QStatistic::degenerate());
    }
    Ok(QStatistic {
        statistic: n as f64 * mean * mean / var,
        df: 1,
        rank: 1,
        degenerate: false,
    })
}

/// Indicator residuals of `rx` against an ordinal residual vector.
pub fn q2(rx: &ResidualBlock, ry: &ResidualBlock) -> Result<QStatistic> {
    check_lengths(rx, ry)?;
    let x = indicator(rx)?;
    let y = ordinal(ry)?;
    let products = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * y[i]);
    Ok(quadratic_form(&products))
}

/// Indicator residuals against indicator residuals. Product columns are
/// ordered with the `rx` index varying fastest.
pub fn q3(rx: &ResidualBlock, ry: &ResidualBlock) -> Result<QStatistic> {
    check_lengths(rx, ry)?;
    let x = indicator(rx)?;
    let y = indicator(ry)?;
    let kx = x.ncols();
    let products = DMatrix::from_fn(x.nrows(), kx * y.ncols(), |i, c| x[(i, c % kx)] * y[(i, c / kx)]);
    Ok(quadratic_form(&products))
}

/// `n * mean^T S^+ mean` for the rows of `v` with `S` their covariance
/// (divisor n), using the spectral pseudo-inverse; df is the rank of `S`.
pub fn quadratic_form(v: &DMatrix<f64>) -> QStatistic {
    let n = v.nrows() as f64;
    let mean = v.row_mean().transpose();
    let centered = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / n;
    let eig = SymmetricEigen::new(cov);
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if max < DEGENERATE_VARIANCE {
        return QStatistic::degenerate();
    }
    let tol = RELATIVE_EIGEN_TOL * max;
    let mut stat = 0.0;
    let mut rank = 0;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > tol {
            let proj = eig.eigenvectors.column(j).dot(&mean);
            stat += proj * proj / lambda;
            rank += 1;
        }
    }
    QStatistic {
        statistic: n * stat,
        df: rank,
        rank,
        degenerate: false,
    }
}

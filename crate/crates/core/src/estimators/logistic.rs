//! Ridge-penalized binomial and multinomial logistic regression.

use nalgebra::{DMatrix, DVector};

use super::newton::{maximize, ConcaveObjective, NewtonOutcome};
use crate::error::Result;

/// Above this many parameters the multinomial Hessian is replaced by its
/// per-class block diagonal.
const FULL_HESSIAN_MAX_DIM: usize = 400;

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `X^T diag(w) X`.
pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut xw = x.clone();
    for mut col in xw.column_iter_mut() {
        col.component_mul_assign(w);
    }
    x.transpose() * xw
}

fn ridge_penalty(theta: &[f64], width: usize, lambda: f64) -> f64 {
    // coefficient 0 of each block is the intercept and is not penalized
    theta
        .iter()
        .enumerate()
        .filter(|(i, _)| i % width != 0)
        .map(|(_, b)| b * b)
        .sum::<f64>()
        * lambda
        / 2.0
}

struct Binomial<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    lambda: f64,
}

impl ConcaveObjective for Binomial<'_> {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        let eta = self.x * theta;
        let ll: f64 = eta.iter().zip(self.y).map(|(&e, &y)| y * e - softplus(e)).sum();
        ll - ridge_penalty(theta.as_slice(), theta.len(), self.lambda)
    }

    fn gradient_hessian(&self, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let eta = self.x * theta;
        let p = eta.map(sigmoid);
        let resid = DVector::from_iterator(self.y.len(), self.y.iter().zip(p.iter()).map(|(y, p)| y - p));
        let mut g = self.x.transpose() * resid;
        let w = p.map(|p| p * (1.0 - p));
        let mut h = -weighted_gram(self.x, &w);
        for j in 1..theta.len() {
            g[j] -= self.lambda * theta[j];
            h[(j, j)] -= self.lambda;
        }
        (g, h)
    }
}

/// Fitted binomial model for `P(y = 1 | x)`; `x` includes the intercept column.
#[derive(Debug, Clone)]
pub(crate) struct BinomialFit {
    pub coef: DVector<f64>,
    pub outcome: NewtonOutcome,
}

pub(crate) fn fit_binomial(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<BinomialFit> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut theta0 = DVector::zeros(x.ncols());
    theta0[0] = (mean / (1.0 - mean)).ln();
    let obj = Binomial { x, y, lambda };
    let outcome = maximize(&obj, theta0)?;
    Ok(BinomialFit {
        coef: outcome.theta.clone(),
        outcome,
    })
}

pub(crate) fn binomial_proba(x: &DMatrix<f64>, coef: &DVector<f64>) -> DVector<f64> {
    (x * coef).map(sigmoid)
}

struct Multinomial<'a> {
    x: &'a DMatrix<f64>,
    /// class index in `0..m`, 0 is the reference
    y: &'a [usize],
    m: usize,
    lambda: f64,
}

impl Multinomial<'_> {
    fn coef(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.m - 1, self.x.ncols(), theta.as_slice())
    }
}

/// Row-wise class probabilities (n x m) from linear predictors of the
/// non-reference classes (n x (m-1)).
fn softmax_with_reference(eta: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = eta.shape();
    let mut p = DMatrix::zeros(n, k + 1);
    for i in 0..n {
        let max = eta.row(i).iter().fold(0.0f64, |a, &b| a.max(b));
        let mut total = (-max).exp();
        p[(i, 0)] = total;
        for j in 0..k {
            let e = (eta[(i, j)] - max).exp();
            p[(i, j + 1)] = e;
            total += e;
        }
        for j in 0..=k {
            p[(i, j)] /= total;
        }
    }
    p
}

impl ConcaveObjective for Multinomial<'_> {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        let eta = self.x * self.coef(theta).transpose();
        let mut ll = 0.0;
        for (i, &yi) in self.y.iter().enumerate() {
            let row = eta.row(i);
            let max = row.iter().fold(0.0f64, |a, &b| a.max(b));
            let lse = max + ((-max).exp() + row.iter().map(|&e| (e - max).exp()).sum::<f64>()).ln();
            let own = if yi == 0 { 0.0 } else { eta[(i, yi - 1)] };
            ll += own - lse;
        }
        ll - ridge_penalty(theta.as_slice(), self.x.ncols(), self.lambda)
    }

    fn gradient_hessian(&self, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let width = self.x.ncols();
        let k = self.m - 1;
        let dim = k * width;
        let eta = self.x * self.coef(theta).transpose();
        let p = softmax_with_reference(&eta);
        let mut resid = DMatrix::zeros(self.y.len(), k);
        for (i, &yi) in self.y.iter().enumerate() {
            for c in 0..k {
                resid[(i, c)] = f64::from(u8::from(yi == c + 1)) - p[(i, c + 1)];
            }
        }
        // (k x width), row-major flattening matches theta's layout
        let grad_mat = resid.transpose() * self.x;
        let mut g = DVector::zeros(dim);
        for c in 0..k {
            for j in 0..width {
                g[c * width + j] = grad_mat[(c, j)];
            }
        }
        let full = dim <= FULL_HESSIAN_MAX_DIM;
        let mut h = DMatrix::zeros(dim, dim);
        for a in 0..k {
            let lo = if full { 0 } else { a };
            for b in lo..=a {
                let w = DVector::from_iterator(
                    self.y.len(),
                    (0..self.y.len()).map(|i| {
                        let pa = p[(i, a + 1)];
                        if a == b {
                            pa * (1.0 - pa)
                        } else {
                            -pa * p[(i, b + 1)]
                        }
                    }),
                );
                let block = weighted_gram(self.x, &w);
                h.view_mut((a * width, b * width), (width, width)).copy_from(&(-&block));
                if a != b {
                    h.view_mut((b * width, a * width), (width, width)).copy_from(&(-block.transpose()));
                }
            }
        }
        for c in 0..k {
            for j in 1..width {
                let idx = c * width + j;
                g[idx] -= self.lambda * theta[idx];
                h[(idx, idx)] -= self.lambda;
            }
        }
        (g, h)
    }
}

/// Fitted multinomial model; coefficients are `(m-1) x width`, class 0 is
/// the reference.
#[derive(Debug, Clone)]
pub(crate) struct MultinomialFit {
    pub coef: DMatrix<f64>,
    pub outcome: NewtonOutcome,
}

pub(crate) fn fit_multinomial(x: &DMatrix<f64>, y: &[usize], m: usize, lambda: f64) -> Result<MultinomialFit> {
    let width = x.ncols();
    let mut counts = vec![0.0f64; m];
    for &c in y {
        counts[c] += 1.0;
    }
    let mut theta0 = DVector::zeros((m - 1) * width);
    for c in 1..m {
        theta0[(c - 1) * width] = (counts[c] / counts[0]).ln();
    }
    let obj = Multinomial { x, y, m, lambda };
    let outcome = maximize(&obj, theta0)?;
    Ok(MultinomialFit {
        coef: obj.coef(&outcome.theta),
        outcome,
    })
}

pub(crate) fn multinomial_proba(x: &DMatrix<f64>, coef: &DMatrix<f64>) -> DMatrix<f64> {
    softmax_with_reference(&(x * coef.transpose()))
}

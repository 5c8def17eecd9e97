//! Proportional-odds (cumulative logit) model
//! `logit P(Y <= j | x) = alpha_j - beta^T x` with increasing intercepts.

use nalgebra::{DMatrix, DVector};

use super::logistic::{sigmoid, weighted_gram};
use super::newton::{maximize, ConcaveObjective, NewtonOutcome};
use crate::error::Result;

fn density(t: f64) -> f64 {
    let s = sigmoid(t);
    s * (1.0 - s)
}

fn density_slope(t: f64) -> f64 {
    let s = sigmoid(t);
    s * (1.0 - s) * (1.0 - 2.0 * s)
}

/// `F(a) - F(b)` for `a > b`, evaluated on the side that avoids cancellation.
fn interval_mass(a: f64, b: f64) -> f64 {
    if a + b > 0.0 {
        sigmoid(-b) - sigmoid(-a)
    } else {
        sigmoid(a) - sigmoid(b)
    }
}

struct CumulativeLogit<'a> {
    /// predictors without intercept column, n x q
    x: &'a DMatrix<f64>,
    /// class index in `0..m`
    y: &'a [usize],
    m: usize,
    lambda: f64,
}

impl CumulativeLogit<'_> {
    fn split<'t>(&self, theta: &'t DVector<f64>) -> (&'t [f64], &'t [f64]) {
        theta.as_slice().split_at(self.m - 1)
    }

    fn eta(&self, beta: &[f64]) -> DVector<f64> {
        if beta.is_empty() {
            DVector::zeros(self.x.nrows())
        } else {
            self.x * DVector::from_column_slice(beta)
        }
    }

    /// Bounds `(a, b)` of the latent interval of class `y`, infinite at the ends.
    fn bounds(&self, alpha: &[f64], y: usize, eta: f64) -> (f64, f64) {
        let a = if y + 1 < self.m { alpha[y] - eta } else { f64::INFINITY };
        let b = if y > 0 { alpha[y - 1] - eta } else { f64::NEG_INFINITY };
        (a, b)
    }
}

impl ConcaveObjective for CumulativeLogit<'_> {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        let (alpha, beta) = self.split(theta);
        if alpha.windows(2).any(|w| w[0] >= w[1]) {
            return f64::NEG_INFINITY;
        }
        let eta = self.eta(beta);
        let mut ll = 0.0;
        for (i, &yi) in self.y.iter().enumerate() {
            let (a, b) = self.bounds(alpha, yi, eta[i]);
            ll += interval_mass(a, b).ln();
        }
        ll - self.lambda / 2.0 * beta.iter().map(|b| b * b).sum::<f64>()
    }

    fn gradient_hessian(&self, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (alpha, beta) = self.split(theta);
        let k = self.m - 1;
        let q = beta.len();
        let dim = k + q;
        let eta = self.eta(beta);
        let mut g = DVector::zeros(dim);
        let mut h = DMatrix::zeros(dim, dim);
        let mut w_bb = DVector::zeros(self.y.len());
        // per-row scalars multiplying x_i in the alpha-beta cross blocks
        let mut cross = vec![(0.0, 0.0); self.y.len()];
        for (i, &yi) in self.y.iter().enumerate() {
            let (a, b) = self.bounds(alpha, yi, eta[i]);
            let p = interval_mass(a, b);
            let (fa, fpa) = if a.is_finite() { (density(a), density_slope(a)) } else { (0.0, 0.0) };
            let (fb, fpb) = if b.is_finite() { (density(b), density_slope(b)) } else { (0.0, 0.0) };
            let la = fa / p;
            let lb = -fb / p;
            let laa = fpa / p - la * la;
            let lbb = -fpb / p - lb * lb;
            let lab = -la * lb;
            if yi < k {
                g[yi] += la;
                h[(yi, yi)] += laa;
            }
            if yi > 0 {
                g[yi - 1] += lb;
                h[(yi - 1, yi - 1)] += lbb;
            }
            if yi > 0 && yi < k {
                h[(yi, yi - 1)] += lab;
                h[(yi - 1, yi)] += lab;
            }
            w_bb[i] = laa + lbb + 2.0 * lab;
            cross[i] = (laa + lab, lbb + lab);
            for j in 0..q {
                g[k + j] -= (la + lb) * self.x[(i, j)];
            }
        }
        if q > 0 {
            let bb = weighted_gram(self.x, &w_bb);
            h.view_mut((k, k), (q, q)).copy_from(&bb);
            for (i, &yi) in self.y.iter().enumerate() {
                let (ca, cb) = cross[i];
                for j in 0..q {
                    let xij = self.x[(i, j)];
                    if yi < k {
                        h[(yi, k + j)] -= ca * xij;
                    }
                    if yi > 0 {
                        h[(yi - 1, k + j)] -= cb * xij;
                    }
                }
            }
            for r in 0..k {
                for j in 0..q {
                    h[(k + j, r)] = h[(r, k + j)];
                }
            }
            for j in 0..q {
                g[k + j] -= self.lambda * beta[j];
                h[(k + j, k + j)] -= self.lambda;
            }
        }
        (g, h)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ProportionalOddsFit {
    pub intercepts: Vec<f64>,
    pub coef: Vec<f64>,
    pub outcome: NewtonOutcome,
}

impl ProportionalOddsFit {
    pub(crate) fn intercepts_increasing(&self) -> bool {
        self.intercepts.windows(2).all(|w| w[0] < w[1])
    }
}

/// Fit on classes `0..m` (all observed, `m >= 3`).
pub(crate) fn fit_proportional_odds(x: &DMatrix<f64>, y: &[usize], m: usize, lambda: f64) -> Result<ProportionalOddsFit> {
    let n = y.len() as f64;
    let mut counts = vec![0.0f64; m];
    for &c in y {
        counts[c] += 1.0;
    }
    let mut theta0 = DVector::zeros(m - 1 + x.ncols());
    let mut cum = 0.0;
    for j in 0..m - 1 {
        cum += counts[j];
        let f = cum / n;
        theta0[j] = (f / (1.0 - f)).ln();
    }
    let obj = CumulativeLogit { x, y, m, lambda };
    let outcome = maximize(&obj, theta0)?;
    let (alpha, beta) = obj.split(&outcome.theta);
    Ok(ProportionalOddsFit {
        intercepts: alpha.to_vec(),
        coef: beta.to_vec(),
        outcome,
    })
}

pub(crate) fn proportional_odds_proba(x: &DMatrix<f64>, fit: &ProportionalOddsFit) -> DMatrix<f64> {
    let m = fit.intercepts.len() + 1;
    let eta = if fit.coef.is_empty() {
        DVector::zeros(x.nrows())
    } else {
        x * DVector::from_column_slice(&fit.coef)
    };
    let mut p = DMatrix::zeros(x.nrows(), m);
    for i in 0..x.nrows() {
        let mut prev = 0.0;
        let mut total = 0.0;
        for j in 0..m {
            let cum = if j + 1 < m { sigmoid(fit.intercepts[j] - eta[i]) } else { 1.0 };
            let v = (cum - prev).max(0.0);
            p[(i, j)] = v;
            total += v;
            prev = cum;
        }
        for j in 0..m {
            p[(i, j)] /= total;
        }
    }
    p
}

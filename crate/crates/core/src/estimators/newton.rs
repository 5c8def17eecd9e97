//! Damped Newton ascent for smooth concave objectives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) const MAX_ITER: usize = 100;
pub(crate) const REL_TOL: f64 = 1e-8;
pub(crate) const MAX_HALVINGS: usize = 10;

pub(crate) trait ConcaveObjective {
    /// Objective value; `-inf` outside the feasible region.
    fn value(&self, theta: &DVector<f64>) -> f64;
    /// Gradient and (negative definite) Hessian, or a negative definite
    /// approximation of it.
    fn gradient_hessian(&self, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>);
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub theta: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solve `(-H) d = g`, adding a ridge to `-H` until it factorizes.
fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> Option<DVector<f64>> {
    let neg = -h;
    let scale = neg.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    let mut jitter = 0.0;
    for _ in 0..12 {
        let mut m = neg.clone();
        if jitter > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
        }
        if let Some(ch) = m.cholesky() {
            let d = ch.solve(g);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        jitter = if jitter == 0.0 { scale * 1e-10 } else { jitter * 100.0 };
    }
    None
}

/// Maximize with Newton steps, halving the step until the objective does not
/// decrease. Stops when the relative change of the objective drops below
/// [`REL_TOL`] (followed by one polishing step) or after [`MAX_ITER`]
/// iterations.
pub(crate) fn maximize(obj: &impl ConcaveObjective, theta0: DVector<f64>) -> Result<NewtonOutcome> {
    let mut theta = theta0;
    let mut value = obj.value(&theta);
    if !value.is_finite() {
        return Err(Error::Numerical("starting point is infeasible".into()));
    }
    let mut converged = false;
    let mut polish_left = 1;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let (g, h) = obj.gradient_hessian(&theta);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite gradient".into()));
        }
        let Some(dir) = newton_direction(&g, &h) else {
            return Err(Error::Numerical("Hessian could not be factorized".into()));
        };
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = &theta + &dir * step;
            let v = obj.value(&cand);
            if v.is_finite() && v >= value - 1e-12 * value.abs() {
                accepted = Some((cand, v));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            // no ascent along the Newton direction: we are at the optimum up
            // to rounding, or the problem is ill-posed
            converged = g.amax() < 1e-6 * (1.0 + value.abs());
            break;
        };
        let rel = (v - value).abs() / (value.abs() + REL_TOL);
        theta = cand;
        value = v;
        if converged {
            polish_left -= 1;
            if polish_left == 0 {
                break;
            }
        } else if rel < REL_TOL {
            converged = true;
        }
    }
    Ok(NewtonOutcome {
        theta,
        value,
        iterations,
        converged,
    })
}

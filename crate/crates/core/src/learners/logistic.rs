//! L2-regularized logistic regression by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use crate::frame::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdSettings {
    pub lambda: f64,
    pub step: f64,
    pub max_iter: usize,
    /// Stop once the relative loss decrease drops below this.
    pub tol: f64,
}

impl Default for GdSettings {
    fn default() -> Self {
        GdSettings {
            lambda: 0.0,
            step: 0.1,
            max_iter: 10_000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean logistic loss plus `(λ/2)‖w‖²` and its gradient. `params` holds the
/// weights followed by the intercept; the intercept is not penalized.
pub fn loss_and_gradient(x: &Matrix, y: &[u8], params: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let d = x.cols();
    let n = x.rows() as f64;
    let (w, b) = (&params[..d], params[d]);
    let mut grad = vec![0.0; d + 1];
    let mut loss = 0.0;
    for i in 0..x.rows() {
        let row = x.row(i);
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        let yi = y[i] as f64;
        loss += softplus(z) - yi * z;
        let r = sigmoid(z) - yi;
        for (g, &a) in grad[..d].iter_mut().zip(row) {
            *g += r * a;
        }
        grad[d] += r;
    }
    loss /= n;
    for g in &mut grad {
        *g /= n;
    }
    let mut penalty = 0.0;
    for (g, &wj) in grad[..d].iter_mut().zip(w) {
        *g += lambda * wj;
        penalty += wj * wj;
    }
    (loss + 0.5 * lambda * penalty, grad)
}

/// Gradient descent with a fixed step that is halved whenever an update
/// fails to lower the loss. Rejected updates are not applied.
pub fn fit_gradient_descent(x: &Matrix, y: &[u8], settings: &GdSettings) -> LogisticModel {
    let d = x.cols();
    let mut params = vec![0.0; d + 1];
    let (mut loss, mut grad) = loss_and_gradient(x, y, &params, settings.lambda);
    let mut step = settings.step;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < settings.max_iter {
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            converged = true;
            break;
        }
        iterations += 1;
        let candidate: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
        let (new_loss, new_grad) = loss_and_gradient(x, y, &candidate, settings.lambda);
        if new_loss < loss {
            let rel = (loss - new_loss) / loss.abs().max(f64::MIN_POSITIVE);
            params = candidate;
            loss = new_loss;
            grad = new_grad;
            if rel < settings.tol {
                converged = true;
                break;
            }
        } else {
            step *= 0.5;
            if step < 1e-15 {
                // no descent possible at machine precision
                converged = true;
                break;
            }
        }
    }
    let intercept = params[d];
    params.truncate(d);
    LogisticModel {
        weights: params,
        intercept,
        iterations,
        converged,
        final_loss: loss,
    }
}

impl LogisticModel {
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.raw_score(row))
    }
}

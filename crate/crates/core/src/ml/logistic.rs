//! L2-regularized logistic regression trained by full-batch gradient descent
//! on standardized features.
//!
//! The objective is
//!   J(w, b) = (1/n) sum_i BCE(sigmoid(w.x_i + b), y_i) + (l2 / 2n) |w|^2
//! and training stops when the gradient norm (weights and bias jointly)
//! drops below 1e-6 or `max_epochs` is reached. `loss_and_grad` is public so
//! the analytic gradient can be checked against finite differences.

use serde::{Deserialize, Serialize};

pub const GRAD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LogisticParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Objective value and its analytic gradient at (weights, bias).
pub fn loss_and_grad(
    weights: &[f64],
    bias: f64,
    x: &[Vec<f64>],
    y: &[u8],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let d = weights.len();
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; d];
    let mut grad_b = 0.0;

    for (row, &label) in x.iter().zip(y) {
        let z = row.iter().zip(weights).map(|(xi, wi)| xi * wi).sum::<f64>() + bias;
        let p = sigmoid(z);
        let target = f64::from(label);
        let p_safe = p.clamp(1e-12, 1.0 - 1e-12);
        loss -= target * p_safe.ln() + (1.0 - target) * (1.0 - p_safe).ln();
        let err = p - target;
        for (g, xi) in grad_w.iter_mut().zip(row) {
            *g += err * xi;
        }
        grad_b += err;
    }
    loss /= n;
    grad_b /= n;
    for g in grad_w.iter_mut() {
        *g /= n;
    }
    // L2 term on weights only; the bias is unpenalized.
    let weight_norm_sq: f64 = weights.iter().map(|w| w * w).sum();
    loss += l2 / (2.0 * n) * weight_norm_sq;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g += l2 / n * w;
    }
    (loss, grad_w, grad_b)
}

/// Train on already-standardized features. Returns the parameters and the
/// per-epoch loss curve (loss evaluated before each update, plus the final
/// value).
pub fn train(
    x: &[Vec<f64>],
    y: &[u8],
    l2: f64,
    learning_rate: f64,
    max_epochs: usize,
) -> (LogisticParams, Vec<f64>) {
    let d = x[0].len();
    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let mut losses = Vec::with_capacity(max_epochs + 1);

    for _ in 0..max_epochs {
        let (loss, grad_w, grad_b) = loss_and_grad(&weights, bias, x, y, l2);
        losses.push(loss);
        let grad_norm = (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if grad_norm < GRAD_TOLERANCE {
            break;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= learning_rate * g;
        }
        bias -= learning_rate * grad_b;
    }
    let (final_loss, _, _) = loss_and_grad(&weights, bias, x, y, l2);
    losses.push(final_loss);
    (LogisticParams { weights, bias }, losses)
}

/// Per-feature standardization parameters estimated on training data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let n = x.len() as f64;
        let d = x[0].len();
        let mut means = vec![0.0; d];
        for row in x {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in means.iter_mut() {
            *m /= n;
        }
        let mut stds = vec![0.0; d];
        for row in x {
            for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in stds.iter_mut() {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0; // constant feature; leave it centered at zero
            }
        }
        Self { means, stds }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|row| self.apply_row(row)).collect()
    }
}

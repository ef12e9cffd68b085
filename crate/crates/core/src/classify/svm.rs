//! Soft-margin kernel SVM trained by sequential minimal optimization.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SymmetricMatrix};

/// Stop when the maximal KKT violation drops below this.
pub const KKT_TOL: f64 = 1e-3;
/// Cap on pair updates.
pub const MAX_ITERATIONS: usize = 1_000_000;

const TAU: f64 = 1e-12;

/// A trained binary machine. `+1` maps to `class_pair.0`, `-1` to `class_pair.1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SvmModel {
    pub support_indices: Vec<usize>,
    /// `α_s · y_s` per support vector.
    pub dual_weights: Vec<f64>,
    pub bias: f64,
    pub gamma: Option<f64>,
    pub class_pair: (i64, i64),
    pub n_train: usize,
    pub iterations: usize,
}

impl SvmModel {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_class_pair(mut self, positive: i64, negative: i64) -> Self {
        self.class_pair = (positive, negative);
        self
    }

    /// Decision value from one row of kernel values against the training set.
    pub fn decision_value(&self, kernel_row: &[f64]) -> f64 {
        self.support_indices
            .iter()
            .zip(&self.dual_weights)
            .map(|(&s, &w)| w * kernel_row[s])
            .sum::<f64>()
            + self.bias
    }
}

/// Rejects kernels with a negative diagonal entry or a negative 2×2
/// principal minor beyond a scale-relative tolerance.
fn check_psd(gram: &SymmetricMatrix) -> Result<()> {
    let n = gram.n();
    let scale = (0..n).map(|i| gram.get(i, i).abs()).fold(1.0, f64::max);
    let tol = 1e-8 * scale;
    for i in 0..n {
        let kii = gram.get(i, i);
        if kii < -tol {
            return Err(Error::numerical(format!("kernel diagonal entry {i} is {kii}")));
        }
        for j in (i + 1)..n {
            let kij = gram.get(i, j);
            let minor = kii * gram.get(j, j) - kij * kij;
            if minor < -tol * scale {
                return Err(Error::numerical(format!(
                    "kernel is not positive semidefinite: minor ({i}, {j}) is {minor}"
                )));
            }
        }
    }
    Ok(())
}

/// Solves `min ½ αᵀQα − Σα` subject to `0 ≤ α ≤ c`, `yᵀα = 0`, where
/// `Q_ij = y_i y_j K_ij`.
pub fn svm_train_binary(gram: &SymmetricMatrix, labels: &[i8], c: f64) -> Result<SvmModel> {
    let n = gram.n();
    if labels.len() != n {
        return Err(Error::validation(format!(
            "{} labels for a {n}x{n} kernel",
            labels.len()
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::validation(format!("C must be positive, got {c}")));
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::validation(format!("binary labels must be ±1, got {bad}")));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::validation("both classes must be present"));
    }
    if !gram.is_finite() {
        return Err(Error::numerical("kernel has non-finite entries"));
    }
    check_psd(gram)?;

    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * gram.get(i, j);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] < c) || (y[t] < 0.0 && a[t] > 0.0);
    let in_low = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] > 0.0) || (y[t] < 0.0 && a[t] < c);

    let mut iterations = 0;
    loop {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(t, &alpha) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(t, &alpha) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < KKT_TOL {
            break;
        }
        if iterations == MAX_ITERATIONS {
            log::warn!("SMO stopped after {MAX_ITERATIONS} updates with violation {}", gmax - gmin);
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // Intercept: average over free vectors, else the midpoint of the feasible range.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (ub + lb)
    };

    let mut support_indices = Vec::new();
    let mut dual_weights = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_indices.push(t);
            dual_weights.push(alpha[t] * y[t]);
        }
    }
    Ok(SvmModel {
        support_indices,
        dual_weights,
        bias: -rho,
        gamma: None,
        class_pair: (1, -1),
        n_train: n,
        iterations,
    })
}

/// Signed decision values for each row of `kernel_rows` (test × train).
pub fn svm_decision_values(model: &SvmModel, kernel_rows: &DenseMatrix) -> Result<Vec<f64>> {
    if kernel_rows.cols() != model.n_train {
        return Err(Error::validation(format!(
            "kernel rows have {} columns, model was trained on {} items",
            kernel_rows.cols(),
            model.n_train
        )));
    }
    Ok((0..kernel_rows.rows())
        .map(|r| {
            let row: Vec<f64> = (0..kernel_rows.cols()).map(|c| kernel_rows[(r, c)]).collect();
            model.decision_value(&row)
        })
        .collect())
}

/// `+1` / `-1` predictions; a decision value of exactly zero maps to `+1`.
pub fn svm_predict(model: &SvmModel, kernel_rows: &DenseMatrix) -> Result<Vec<i8>> {
    Ok(svm_decision_values(model, kernel_rows)?
        .into_iter()
        .map(|v| if v >= 0.0 { 1 } else { -1 })
        .collect())
}

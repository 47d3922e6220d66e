//! Binary soft-margin SVM with an RBF kernel, trained by SMO.
//!
//! The dual problem
//!
//! ```text
//! min  1/2 a'Qa - e'a    s.t.  y'a = 0,  0 <= a_i <= C,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! is solved two coordinates at a time. The working pair is the maximal
//! violating pair (first-order selection); ties go to the lowest index, so the
//! result is a pure function of the input order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `exp(-gamma * |a - b|^2)`.
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

/// Dense RBF Gram matrix of a sample set.
pub fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        k[i][i] = 1.0;
        for j in i + 1..n {
            let v = rbf_kernel(&x[i], &x[j], gamma);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    pub c: f64,
    pub gamma: f64,
    /// Stop once the maximal KKT violation `m(a) - M(a)` is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

impl SmoParams {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("C must be positive, got {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Trained binary classifier. `coefficients[k] = alpha_k * y_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub iterations: usize,
    /// Final maximal KKT violation.
    pub violation: f64,
}

impl BinarySvm {
    /// Trains on samples `x` with labels `y` in {-1, +1}.
    pub fn train(x: &[Vec<f64>], y: &[f64], params: &SmoParams) -> Result<Self> {
        params.validate()?;
        if x.len() != y.len() {
            return Err(Error::dim("svm labels", x.len(), y.len()));
        }
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::invalid("svm labels must be +1 or -1"));
        }
        if !(y.contains(&1.0) && y.contains(&-1.0)) {
            return Err(Error::TrainingDegenerate(
                "binary problem needs samples of both signs".into(),
            ));
        }
        let k = kernel_matrix(x, params.gamma);
        let sol = solve_dual(&k, y, params.c, params.tol, params.max_iter)?;

        let (support_vectors, coefficients) = sol
            .alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, &a)| (x[i].clone(), a * y[i]))
            .unzip();
        Ok(Self {
            support_vectors,
            coefficients,
            bias: -sol.rho,
            gamma: params.gamma,
            iterations: sol.iterations,
            violation: sol.violation,
        })
    }

    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * rbf_kernel(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }
}

/// Raw dual solution.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub violation: f64,
}

/// SMO on a precomputed Gram matrix.
pub fn solve_dual(k: &[Vec<f64>], y: &[f64], c: f64, tol: f64, max_iter: usize) -> Result<DualSolution> {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    // Gradient of the dual objective: G = Q a - e.
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;

    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let violation = loop {
        let mut i = usize::MAX;
        let mut m = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut big_m = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > m {
                m = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < big_m {
                big_m = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX {
            break 0.0;
        }
        let gap = m - big_m;
        if gap <= tol {
            break gap.max(0.0);
        }
        if iterations >= max_iter {
            return Err(Error::Convergence {
                iterations,
                violation: gap,
            });
        }
        iterations += 1;

        // Move a_i += y_i t, a_j -= y_j t, which keeps y'a fixed.
        let eta = (k[i][i] + k[j][j] - 2.0 * k[i][j]).max(1e-12);
        let mut step = gap / eta;
        step = step.min(if y[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        step = step.min(if y[j] > 0.0 { alpha[j] } else { c - alpha[j] });

        alpha[i] = (alpha[i] + y[i] * step).clamp(0.0, c);
        alpha[j] = (alpha[j] - y[j] * step).clamp(0.0, c);
        for t in 0..n {
            grad[t] += y[t] * step * (k[t][i] - k[t][j]);
        }
        // Snap to the box so bound membership tests stay exact.
        for idx in [i, j] {
            if alpha[idx] < 1e-12 * c {
                alpha[idx] = 0.0;
            } else if alpha[idx] > c * (1.0 - 1e-12) {
                alpha[idx] = c;
            }
        }
    };

    Ok(DualSolution {
        rho: compute_rho(&alpha, y, &grad, c),
        alpha,
        iterations,
        violation,
    })
}

/// Offset from free vectors, or the midpoint of the feasible interval when
/// every multiplier is at a bound.
fn compute_rho(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
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
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

//! Stationarity of the log-sum surrogate with respect to `θ`.
//!
//! Away from the threshold the surrogate `Σ log(max(0, r_i − ε) + γ)` has
//! gradient `Σ_{r_i > ε} σ_i a_i / (r_i − ε + γ)`, summed over the outlier
//! points with `σ_i a_i` the gradient of the point's largest row residual.
//! Points sitting exactly on the threshold make the surrogate
//! non-differentiable: their generalized gradient is any
//! `λ σ_j a_j` with `λ ∈ [0, 1/γ]`. Linear-programming iterates always have
//! such points, so the stationarity measure minimizes over them.

use crate::error::{invalid, Result};
use crate::linalg::lstsq;
use crate::model::{norm, ResidualSystem};
use nalgebra::{DMatrix, DVector};

/// Rows whose residual is within `BOUNDARY_TOL · max(1, ε)` of `ε` count as
/// sitting on the threshold.
pub const BOUNDARY_TOL: f64 = 1e-8;

struct Split {
    /// Fixed part of the gradient, from the outliers.
    outlier_sum: Vec<f64>,
    /// Signed gradients `σ_j a_j` of threshold rows.
    boundary: Vec<Vec<f64>>,
}

fn split(system: &ResidualSystem, theta: &[f64], epsilon: f64, gamma: f64) -> Result<Split> {
    crate::model::residuals(system, theta)?;
    let tol = BOUNDARY_TOL * epsilon.max(1.0);
    let d = system.dim();
    let mut outlier_sum = vec![0.0; d];
    let mut boundary = Vec::new();
    for g in 0..system.num_groups() {
        let (r, active) = system.group_residual(g, theta);
        if r - epsilon > tol {
            let sign = system.row_residual(active, theta).signum();
            let w = 1.0 / (r - epsilon + gamma);
            for (o, a) in outlier_sum.iter_mut().zip(system.row(active)) {
                *o += w * sign * a;
            }
            continue;
        }
        for &j in system.group(g) {
            let e = system.row_residual(j, theta);
            if (e.abs() - epsilon).abs() <= tol {
                let sign = if e >= 0.0 { 1.0 } else { -1.0 };
                boundary.push(system.row(j).iter().map(|a| sign * a).collect());
            }
        }
    }
    Ok(Split {
        outlier_sum,
        boundary,
    })
}

/// Norm of the outlier part of the surrogate gradient alone.
pub fn outlier_gradient_norm(
    system: &ResidualSystem,
    theta: &[f64],
    epsilon: f64,
    gamma: f64,
) -> Result<f64> {
    Ok(norm(&split(system, theta, epsilon, gamma)?.outlier_sum))
}

/// Distance from zero to the generalized gradient of the surrogate at
/// `θ`: the smallest norm of the outlier gradient sum plus any admissible
/// combination of threshold-row gradients. Zero at stationary points.
pub fn kkt_stationarity_gap(
    system: &ResidualSystem,
    theta: &[f64],
    epsilon: f64,
    gamma: f64,
) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid("gamma must be positive"));
    }
    let parts = split(system, theta, epsilon, gamma)?;
    if parts.boundary.is_empty() {
        return Ok(norm(&parts.outlier_sum));
    }
    let d = system.dim();
    let m = DMatrix::from_fn(d, parts.boundary.len(), |i, k| parts.boundary[k][i]);
    let c = DVector::from_column_slice(&parts.outlier_sum);
    let x = bounded_lsq(&m, &c, 1.0 / gamma);
    Ok((c + m * x).norm())
}

#[derive(Clone, Copy, PartialEq)]
enum Bound {
    Lower,
    Upper,
    Free,
}

/// Minimizes `‖c + M x‖` subject to `0 ≤ x ≤ upper` by an active-set
/// method on the bounds.
pub(crate) fn bounded_lsq(m: &DMatrix<f64>, c: &DVector<f64>, upper: f64) -> DVector<f64> {
    let k = m.ncols();
    let mut x = DVector::zeros(k);
    let mut state = vec![Bound::Lower; k];
    let scale = m.amax().max(1e-300) * (c.amax() + upper * m.amax()).max(1e-300);
    let grad_tol = 1e-13 * scale;
    for _ in 0..(10 * k + 10) {
        let grad = m.transpose() * (c + m * &x);
        let violation = |j: usize| match state[j] {
            Bound::Lower => -grad[j],
            Bound::Upper => grad[j],
            Bound::Free => 0.0,
        };
        let Some(j) = (0..k)
            .filter(|&j| violation(j) > grad_tol)
            .max_by(|&a, &b| violation(a).total_cmp(&violation(b)))
        else {
            break;
        };
        state[j] = Bound::Free;
        for _ in 0..=k {
            let free: Vec<usize> = (0..k).filter(|&j| state[j] == Bound::Free).collect();
            if free.is_empty() {
                break;
            }
            let mut rhs = -c.clone();
            for j in (0..k).filter(|&j| state[j] == Bound::Upper) {
                rhs -= m.column(j) * upper;
            }
            let sub = DMatrix::from_fn(m.nrows(), free.len(), |i, f| m[(i, free[f])]);
            let z = lstsq(sub, &rhs, 1e-12);
            let inside = z.iter().all(|&v| v > 0.0 && v < upper);
            if inside {
                for (f, &j) in free.iter().enumerate() {
                    x[j] = z[f];
                }
                break;
            }
            // Move towards z until the first free variable reaches a bound.
            let mut alpha: f64 = 1.0;
            for (f, &j) in free.iter().enumerate() {
                let step = z[f] - x[j];
                if z[f] <= 0.0 && step < 0.0 {
                    alpha = alpha.min(-x[j] / step);
                } else if z[f] >= upper && step > 0.0 {
                    alpha = alpha.min((upper - x[j]) / step);
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (f, &j) in free.iter().enumerate() {
                x[j] += alpha * (z[f] - x[j]);
                if x[j] <= upper * 1e-14 {
                    x[j] = 0.0;
                    state[j] = Bound::Lower;
                } else if x[j] >= upper * (1.0 - 1e-14) {
                    x[j] = upper;
                    state[j] = Bound::Upper;
                }
            }
        }
    }
    x
}

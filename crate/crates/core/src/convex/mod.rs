//! Exact solvers for the convex subproblems.
//!
//! For a residual system, threshold `ε` and positive per-point weights `w`
//! the slack program is
//!
//! ```text
//! minimize    Σ_i w_i s_i            (or Σ_i w_i s_i² for the QP)
//! subject to  |a_j·θ − b_j| ≤ ε + s_i   for every row j of point i
//!             s_i ≥ 0,  |θ_k| ≤ M
//! ```
//!
//! The LP is solved by a dense primal simplex method ([`SlackLp`]), the
//! QP by a primal active-set method ([`SlackQp`]). Both keep their state
//! between calls so a sequence of solves with changing weights starts each
//! solve from the previous optimum.

mod qp;
mod simplex;

pub use qp::SlackQp;
pub use simplex::SlackLp;

use crate::error::{invalid, Result};
use crate::model::ResidualSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerances {
    /// Slacks at or below this value are reported as exactly zero.
    pub feasibility_tol: f64,
    /// Reduced-cost and multiplier tolerance for the optimality test.
    pub optimality_tol: f64,
    /// Pivot (or active-set iteration) budget per solve. `None` means
    /// `50 · (n + d)`.
    pub max_pivots: Option<usize>,
    /// Box bound `M` on every parameter.
    pub theta_box: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-8,
            max_pivots: None,
            theta_box: 1e6,
        }
    }
}

impl SolverTolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.feasibility_tol)
            || !positive(self.optimality_tol)
            || !positive(self.theta_box)
            || self.max_pivots == Some(0)
        {
            return Err(invalid("solver tolerances must be strictly positive"));
        }
        Ok(())
    }

    pub(crate) fn pivot_budget(&self, n: usize, d: usize) -> usize {
        self.max_pivots.unwrap_or(50 * (n + d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// The method stopped on a numerically inconsistent tableau. The
    /// returned point is feasible but may be suboptimal.
    InfeasibleNumerics,
    IterationLimit,
}

/// Solver-specific by-products of a solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Number of parameters in the final simplex basis. Fewer than `d`
    /// means some directions of `θ` were left undetermined by the data.
    pub basic_params: usize,
    /// Dual objective of the final simplex basis (LP only).
    pub dual_bound: Option<f64>,
    /// Multipliers of the constraints `a_j·θ − b_j − s ≤ ε` and
    /// `−(a_j·θ − b_j) − s ≤ ε`, per row.
    pub row_duals: Vec<[f64; 2]>,
    /// Multipliers of `θ_k ≤ M` and `−θ_k ≤ M`.
    pub box_duals: Vec<[f64; 2]>,
    /// Largest violation of the optimality conditions (QP only).
    pub kkt_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackSolution {
    pub theta: Vec<f64>,
    /// Per-point slacks `max(0, r_i(θ) − ε)`, with values within the
    /// feasibility tolerance set to zero.
    pub slacks: Vec<f64>,
    /// Subproblem objective recomputed from `slacks`.
    pub objective: f64,
    pub status: SolveStatus,
    /// Simplex pivots or active-set iterations used by this solve.
    pub iterations: usize,
    pub diagnostics: Diagnostics,
}

pub(crate) fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(invalid(format!(
            "expected {n} weights, got {}",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(invalid("weights must be strictly positive and finite"));
    }
    Ok(())
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(invalid("inlier threshold must be finite and non-negative"));
    }
    Ok(())
}

/// Slacks `max(0, r_i − ε)` at `θ`, zeroed below `tol`.
pub(crate) fn slacks_at(system: &ResidualSystem, theta: &[f64], epsilon: f64, tol: f64) -> Vec<f64> {
    (0..system.num_groups())
        .map(|g| {
            let s = system.group_residual(g, theta).0 - epsilon;
            if s <= tol {
                0.0
            } else {
                s
            }
        })
        .collect()
}

/// Weighted slack LP with the given positive weights.
pub fn solve_weighted_slack_lp(
    system: &ResidualSystem,
    epsilon: f64,
    weights: &[f64],
    tol: &SolverTolerances,
) -> Result<SlackSolution> {
    check_weights(weights, system.num_groups())?;
    SlackLp::new(system, epsilon, tol)?.solve(weights)
}

/// Unweighted slack LP: minimizes the sum of slacks.
pub fn solve_slack_l1(
    system: &ResidualSystem,
    epsilon: f64,
    tol: &SolverTolerances,
) -> Result<SlackSolution> {
    solve_weighted_slack_lp(system, epsilon, &vec![1.0; system.num_groups()], tol)
}

/// Chebyshev fit over a subset of points: minimizes the largest residual.
/// Returns a minimizer and the optimal maximum residual.
pub fn solve_minmax(
    system: &ResidualSystem,
    subset: &[usize],
    tol: &SolverTolerances,
) -> Result<(Vec<f64>, f64)> {
    let fit = minmax_with_support(system, subset, tol)?;
    Ok((fit.theta, fit.max_residual))
}

pub(crate) struct MinmaxFit {
    pub theta: Vec<f64>,
    pub max_residual: f64,
    /// Points of the subset whose constraints carry a positive multiplier
    /// at the optimal basis.
    pub support: Vec<usize>,
}

pub(crate) fn minmax_with_support(
    system: &ResidualSystem,
    subset: &[usize],
    tol: &SolverTolerances,
) -> Result<MinmaxFit> {
    if subset.is_empty() {
        return Err(invalid("minmax fit needs at least one point"));
    }
    if let Some(&g) = subset.iter().find(|&&g| g >= system.num_groups()) {
        return Err(invalid(format!("point {g} out of range")));
    }
    let merged = system.merged(subset);
    let sol = SlackLp::new(&merged, 0.0, tol)?.solve(&[1.0])?;
    let max_residual = merged.group_residual(0, &sol.theta).0;
    // Merged rows follow the subset order, group by group.
    let mut support = Vec::new();
    let mut row = 0;
    for &g in subset {
        let rows = system.group(g).len();
        let active = sol.diagnostics.row_duals[row..row + rows]
            .iter()
            .any(|d| d[0].abs() > 1e-12 || d[1].abs() > 1e-12);
        if active {
            support.push(g);
        }
        row += rows;
    }
    Ok(MinmaxFit {
        theta: sol.theta,
        max_residual,
        support,
    })
}

/// Weighted slack QP: minimizes `Σ w_i s_i²`.
pub fn solve_weighted_slack_qp(
    system: &ResidualSystem,
    epsilon: f64,
    weights: &[f64],
    tol: &SolverTolerances,
) -> Result<SlackSolution> {
    SlackQp::new(system, epsilon, tol)?.solve(weights)
}

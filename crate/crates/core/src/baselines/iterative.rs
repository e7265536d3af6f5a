//! Deterministic outlier removal by repeated convex fits.

use crate::convex::{minmax_with_support, solve_slack_l1, SolverTolerances};
use crate::error::{degenerate, Result};
use crate::model::ResidualSystem;
use crate::result::{ConsensusResult, Termination};
use std::time::Instant;

/// Solves the plain slack LP, drops every point with positive slack and
/// repeats until no slack is positive.
pub fn iterative_l1_fit(system: &ResidualSystem, epsilon: f64) -> Result<ConsensusResult> {
    let tol = SolverTolerances::default();
    let started = Instant::now();
    let mut remaining: Vec<usize> = (0..system.num_groups()).collect();
    let mut rounds = 0;
    loop {
        let sub = system.subsystem(&remaining);
        let sol = solve_slack_l1(&sub, epsilon, &tol)?;
        rounds += 1;
        let keep: Vec<usize> = remaining
            .iter()
            .zip(&sol.slacks)
            .filter(|&(_, &s)| s == 0.0)
            .map(|(&g, _)| g)
            .collect();
        if keep.len() == remaining.len() {
            return ConsensusResult::from_theta(
                system,
                sol.theta,
                epsilon,
                started,
                Termination::Tolerance,
                rounds,
            );
        }
        if keep.is_empty() {
            return Err(degenerate("every point was removed"));
        }
        remaining = keep;
    }
}

/// Chebyshev-fits the remaining points and drops the support set of the
/// fit, the points that determine the largest residual, until that
/// residual is within `ε`.
///
/// Only points with a positive multiplier in the optimal basis are
/// dropped, not every point tied at the maximum: some linearizations put
/// all points at the same residual for `θ = 0`, and removing every tied
/// point would empty the set in one round.
pub fn iterative_linf_fit(system: &ResidualSystem, epsilon: f64) -> Result<ConsensusResult> {
    crate::convex::check_epsilon(epsilon)?;
    let tol = SolverTolerances::default();
    let started = Instant::now();
    let mut remaining: Vec<usize> = (0..system.num_groups()).collect();
    let mut rounds = 0;
    loop {
        let fit = minmax_with_support(system, &remaining, &tol)?;
        rounds += 1;
        if fit.max_residual <= epsilon + crate::model::INLIER_TOL {
            return ConsensusResult::from_theta(
                system,
                fit.theta,
                epsilon,
                started,
                Termination::Tolerance,
                rounds,
            );
        }
        let t = fit.max_residual;
        let cut = t - tol.feasibility_tol * t.max(1.0);
        let mut drop = fit.support;
        if drop.is_empty() {
            drop = remaining
                .iter()
                .copied()
                .filter(|&g| system.group_residual(g, &fit.theta).0 >= cut)
                .collect();
        }
        if drop.len() >= remaining.len() {
            // A support set covering every remaining point (d + 1 points in
            // general position) would empty the set; peel off one instead.
            drop.truncate(1);
        }
        remaining.retain(|g| !drop.contains(g));
        if remaining.is_empty() {
            return Err(degenerate("every point was removed"));
        }
    }
}

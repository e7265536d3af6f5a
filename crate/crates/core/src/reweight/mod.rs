//! Iteratively reweighted consensus maximization.
//!
//! The inlier count is replaced by the log-sum surrogate
//! `G(s) = Σ log(s_i + γ)` of the per-point slacks `s_i = max(0, r_i − ε)`.
//! `G` is concave, so minimizing its linearization at the current slacks,
//! a weighted slack LP with weights `1/(s_i + γ)`, can only decrease it.
//! [`irlp_fit`] repeats that step until the decrease of the weighted
//! objective falls below `ζ`. [`irqp_fit`] does the same with squared
//! slacks, weights `1/(s_i² + γ)` and a QP per step.
//!
//! With the default all-ones start every weight of the first step equals
//! `1/(1 + γ)`, so the first pass solves the plain slack LP and its
//! solution provides the first real slacks.

mod kkt;

pub use kkt::{kkt_stationarity_gap, outlier_gradient_norm, BOUNDARY_TOL};

use crate::baselines::{iterative_linf_fit, ransac_fit, RansacConfig};
use crate::convex::{slacks_at, SlackLp, SlackQp, SlackSolution, SolverTolerances};
use crate::error::{invalid, Result};
use crate::model::{consensus, ResidualSystem};
use crate::result::{ConsensusResult, IterRecord, IterTrace, Termination};
use std::time::Instant;

/// How the starting slacks are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    /// `s = 1` for every point.
    Ones,
    /// Slacks of the iterative Chebyshev fit.
    Linf,
    /// Slacks of a vanilla RANSAC fit with the given seed.
    Ransac { seed: u64 },
    /// Slacks of the given parameter vector.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IRConfig {
    pub gamma: f64,
    pub epsilon: f64,
    /// Maximum number of outer iterations.
    pub max_iters: usize,
    /// Absolute tolerance on the decrease of the weighted objective.
    pub zeta: f64,
    pub init: InitMode,
    pub tolerances: SolverTolerances,
}

impl IRConfig {
    pub const DEFAULT_GAMMA: f64 = 0.01;
    pub const DEFAULT_MAX_ITERS: usize = 25;
    pub const DEFAULT_ZETA: f64 = 1e-4;

    pub fn new(epsilon: f64) -> Self {
        Self {
            gamma: Self::DEFAULT_GAMMA,
            epsilon,
            max_iters: Self::DEFAULT_MAX_ITERS,
            zeta: Self::DEFAULT_ZETA,
            init: InitMode::Ones,
            tolerances: SolverTolerances::default(),
        }
    }

    pub fn with_init(mut self, init: InitMode) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma must be positive"));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(invalid("epsilon must be finite and non-negative"));
        }
        if self.max_iters == 0 {
            return Err(invalid("at least one iteration is required"));
        }
        if !(self.zeta > 0.0) || !self.zeta.is_finite() {
            return Err(invalid("zeta must be positive"));
        }
        self.tolerances.validate()
    }
}

fn check_slacks(s: &[f64], gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid("gamma must be positive"));
    }
    if s.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid("slacks must be finite and non-negative"));
    }
    Ok(())
}

/// `Σ log(s_i + γ)`.
pub fn surrogate_value(s: &[f64], gamma: f64) -> Result<f64> {
    check_slacks(s, gamma)?;
    Ok(s.iter().map(|&v| (v + gamma).ln()).sum())
}

/// `Σ log(s_i² + γ)`, the quantity the squared-slack scheme decreases.
pub fn surrogate_value_squared(s: &[f64], gamma: f64) -> Result<f64> {
    check_slacks(s, gamma)?;
    Ok(s.iter().map(|&v| (v * v + gamma).ln()).sum())
}

/// `w_i = 1/(s_i + γ)`.
pub fn update_weights_lp(s: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_slacks(s, gamma)?;
    Ok(s.iter().map(|&v| 1.0 / (v + gamma)).collect())
}

/// `w_i = 1/(s_i² + γ)`.
pub fn update_weights_qp(s: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_slacks(s, gamma)?;
    Ok(s.iter().map(|&v| 1.0 / (v * v + gamma)).collect())
}

#[derive(Clone, Copy, PartialEq)]
enum Scheme {
    Linear,
    Quadratic,
}

impl Scheme {
    fn lift(self, s: f64) -> f64 {
        match self {
            Scheme::Linear => s,
            Scheme::Quadratic => s * s,
        }
    }

    fn weights(self, s: &[f64], gamma: f64) -> Result<Vec<f64>> {
        match self {
            Scheme::Linear => update_weights_lp(s, gamma),
            Scheme::Quadratic => update_weights_qp(s, gamma),
        }
    }

    fn surrogate(self, s: &[f64], gamma: f64) -> Result<f64> {
        match self {
            Scheme::Linear => surrogate_value(s, gamma),
            Scheme::Quadratic => surrogate_value_squared(s, gamma),
        }
    }

    fn weighted(self, w: &[f64], s: &[f64]) -> f64 {
        w.iter().zip(s).map(|(w, &s)| w * self.lift(s)).sum()
    }
}

enum Subsolver<'a> {
    Lp(Box<SlackLp>),
    Qp(SlackQp<'a>),
}

impl Subsolver<'_> {
    fn solve(&mut self, w: &[f64]) -> Result<SlackSolution> {
        match self {
            Subsolver::Lp(lp) => lp.solve(w),
            Subsolver::Qp(qp) => qp.solve(w),
        }
    }
}

/// Parameter vector the starting slacks are taken from, if any.
fn start_theta(
    system: &ResidualSystem,
    config: &IRConfig,
    init_theta: Option<&[f64]>,
) -> Result<Option<Vec<f64>>> {
    if let Some(t) = init_theta {
        return Ok(Some(t.to_vec()));
    }
    Ok(match &config.init {
        InitMode::Ones => None,
        InitMode::Linf => Some(iterative_linf_fit(system, config.epsilon)?.theta),
        InitMode::Ransac { seed } => {
            let cfg = RansacConfig {
                seed: *seed,
                ..RansacConfig::default()
            };
            Some(ransac_fit(system, config.epsilon, &cfg)?.theta)
        }
        InitMode::Custom(t) => Some(t.clone()),
    })
}

fn run(
    system: &ResidualSystem,
    config: &IRConfig,
    init_theta: Option<&[f64]>,
    scheme: Scheme,
) -> Result<ConsensusResult> {
    config.validate()?;
    let started = Instant::now();
    let n = system.num_groups();
    let tol = &config.tolerances;
    let start = start_theta(system, config, init_theta)?;
    let mut trace = IterTrace::default();
    // The all-ones start is not the slack vector of any parameters, so the
    // stopping test is skipped on the first pass in that case.
    let (mut s, mut s_is_real) = match &start {
        Some(theta) => {
            crate::model::residuals(system, theta)?;
            let s = slacks_at(system, theta, config.epsilon, tol.feasibility_tol);
            trace.initial_surrogate = Some(scheme.surrogate(&s, config.gamma)?);
            (s, true)
        }
        None => (vec![1.0; n], false),
    };
    let mut solver = match scheme {
        Scheme::Linear => Subsolver::Lp(Box::new(SlackLp::new(system, config.epsilon, tol)?)),
        Scheme::Quadratic => Subsolver::Qp(match &start {
            Some(theta) => SlackQp::with_start(system, config.epsilon, tol, theta)?,
            None => SlackQp::new(system, config.epsilon, tol)?,
        }),
    };

    let mut theta = start.unwrap_or_else(|| vec![0.0; system.dim()]);
    let mut terminated_by = Termination::IterationLimit;
    let mut iterations = 0;
    while iterations < config.max_iters {
        let w = scheme.weights(&s, config.gamma)?;
        let sol = solver.solve(&w)?;
        iterations += 1;
        let previous_weighted = scheme.weighted(&w, &s);
        let weighted_objective = scheme.weighted(&w, &sol.slacks);
        trace.records.push(IterRecord {
            surrogate: scheme.surrogate(&sol.slacks, config.gamma)?,
            weighted_objective,
            previous_weighted,
            count: consensus(system, &sol.theta, config.epsilon)?.count,
            slacks: sol.slacks.clone(),
        });
        theta = sol.theta;
        let converged = s_is_real && previous_weighted - weighted_objective <= config.zeta;
        let all_fit = sol.slacks.iter().all(|&v| v == 0.0);
        s = sol.slacks;
        s_is_real = true;
        if converged || all_fit {
            terminated_by = Termination::Tolerance;
            break;
        }
    }

    let mut result = ConsensusResult::from_theta(
        system,
        theta,
        config.epsilon,
        started,
        terminated_by,
        iterations,
    )?;
    result.trace = trace;
    Ok(result)
}

/// Iteratively reweighted LP fit.
///
/// `init_theta`, when given, overrides `config.init`.
pub fn irlp_fit(
    system: &ResidualSystem,
    config: &IRConfig,
    init_theta: Option<&[f64]>,
) -> Result<ConsensusResult> {
    run(system, config, init_theta, Scheme::Linear)
}

/// Iteratively reweighted QP fit on squared slacks.
pub fn irqp_fit(
    system: &ResidualSystem,
    config: &IRConfig,
    init_theta: Option<&[f64]>,
) -> Result<ConsensusResult> {
    run(system, config, init_theta, Scheme::Quadratic)
}

#[cfg(test)]
mod tests;

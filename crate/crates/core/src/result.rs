//! Output of the consensus estimators.

use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The method's own convergence or confidence test fired.
    Tolerance,
    /// The iteration cap was reached first.
    IterationLimit,
}

/// One outer iteration of a reweighted fit.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    /// Log-sum surrogate of the new slacks.
    pub surrogate: f64,
    /// Weighted subproblem objective at the new slacks.
    pub weighted_objective: f64,
    /// Same weights applied to the previous slacks.
    pub previous_weighted: f64,
    /// Inlier count of the new parameters.
    pub count: usize,
    pub slacks: Vec<f64>,
}

impl IterRecord {
    /// Decrease of the weighted objective over this iteration, the quantity
    /// compared against the stopping tolerance.
    pub fn weighted_decrease(&self) -> f64 {
        self.previous_weighted - self.weighted_objective
    }

    pub fn max_slack(&self) -> f64 {
        self.slacks.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterTrace {
    /// Surrogate of the starting slacks, when they come from an actual
    /// parameter vector. `None` for the all-ones start.
    pub initial_surrogate: Option<f64>,
    pub records: Vec<IterRecord>,
}

impl IterTrace {
    /// The surrogate sequence, starting value included when known.
    pub fn surrogates(&self) -> Vec<f64> {
        self.initial_surrogate
            .into_iter()
            .chain(self.records.iter().map(|r| r.surrogate))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusResult {
    pub theta: Vec<f64>,
    /// Points with residual at most `ε` under `theta`, ascending.
    pub inliers: Vec<usize>,
    pub count: usize,
    /// Per-iteration record. Empty for methods without an outer loop.
    pub trace: IterTrace,
    pub wall_time: Duration,
    pub terminated_by: Termination,
    /// Outer iterations, hypotheses or removal rounds, depending on the
    /// method.
    pub iterations: usize,
}

impl ConsensusResult {
    pub fn wall_time_secs(&self) -> f64 {
        self.wall_time.as_secs_f64()
    }

    pub(crate) fn from_theta(
        system: &crate::model::ResidualSystem,
        theta: Vec<f64>,
        epsilon: f64,
        started: std::time::Instant,
        terminated_by: Termination,
        iterations: usize,
    ) -> crate::error::Result<Self> {
        let c = crate::model::consensus(system, &theta, epsilon)?;
        Ok(Self {
            theta,
            inliers: c.inliers,
            count: c.count,
            trace: IterTrace::default(),
            wall_time: started.elapsed(),
            terminated_by,
            iterations,
        })
    }

    /// Membership mask over the `n` points.
    pub fn inlier_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.inliers {
            mask[i] = true;
        }
        mask
    }
}

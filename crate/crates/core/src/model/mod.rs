//! Linear residual systems, consensus counting, geometric linearization and
//! synthetic problem generators.
//!
//! A [`ResidualSystem`] stores rows `(a_j, b_j)` with residual
//! `|a_j · θ - b_j|`. Rows are partitioned into groups, one per data point;
//! the residual of a data point is the largest absolute residual among its
//! rows, so a point is either an inlier as a whole or not at all.

mod geometry;
pub mod io;
mod synth;

pub use geometry::{
    fundamental_params, homography_params, linearize_fundamental, linearize_homography,
    normalize_matches, params_to_matrix, NormalizedMatches,
};
pub use synth::{synth_hyperplane, synth_line, synth_matches, MatchKind, SyntheticMatches};

use crate::error::{invalid, Result};
use nalgebra::Point2;

/// Absolute allowance used by the inclusive inlier test `r <= ε`.
///
/// Linear-programming solutions sit on vertices of the feasible region, so
/// some inliers have residual exactly `ε` up to floating-point rounding.
/// The allowance keeps those points on the inlier side.
pub const INLIER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSystem {
    dim: usize,
    /// Row-major coefficient matrix, `num_rows × dim`.
    coeffs: Vec<f64>,
    offsets: Vec<f64>,
    groups: Vec<Vec<usize>>,
    group_of_row: Vec<usize>,
}

impl ResidualSystem {
    /// Builds a system from explicit rows and a partition of row indices.
    pub fn new(dim: usize, rows: Vec<(Vec<f64>, f64)>, groups: Vec<Vec<usize>>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("parameter dimension must be at least 1"));
        }
        let mut coeffs = Vec::with_capacity(rows.len() * dim);
        let mut offsets = Vec::with_capacity(rows.len());
        for (j, (a, b)) in rows.into_iter().enumerate() {
            if a.len() != dim {
                return Err(invalid(format!(
                    "row {j} has {} coefficients, expected {dim}",
                    a.len()
                )));
            }
            if !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("row {j} contains a non-finite value")));
            }
            coeffs.extend_from_slice(&a);
            offsets.push(b);
        }
        let num_rows = offsets.len();
        if groups.is_empty() {
            return Err(invalid("system needs at least one group"));
        }
        let mut group_of_row = vec![usize::MAX; num_rows];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(invalid(format!("group {g} is empty")));
            }
            for &j in members {
                if j >= num_rows {
                    return Err(invalid(format!("group {g} references missing row {j}")));
                }
                if group_of_row[j] != usize::MAX {
                    return Err(invalid(format!("row {j} belongs to more than one group")));
                }
                group_of_row[j] = g;
            }
        }
        if let Some(j) = group_of_row.iter().position(|&g| g == usize::MAX) {
            return Err(invalid(format!("row {j} is not assigned to a group")));
        }
        Ok(Self {
            dim,
            coeffs,
            offsets,
            groups,
            group_of_row,
        })
    }

    /// One group per row.
    pub fn from_rows(dim: usize, rows: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let groups = (0..rows.len()).map(|j| vec![j]).collect();
        Self::new(dim, rows, groups)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.offsets.len()
    }

    /// Number of data points `n`.
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.coeffs[j * self.dim..(j + 1) * self.dim]
    }

    pub fn offset(&self, j: usize) -> f64 {
        self.offsets[j]
    }

    pub fn group(&self, g: usize) -> &[usize] {
        &self.groups[g]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_of(&self, j: usize) -> usize {
        self.group_of_row[j]
    }

    /// Signed residual `a_j · θ - b_j` of a single row.
    pub fn row_residual(&self, j: usize, theta: &[f64]) -> f64 {
        dot(self.row(j), theta) - self.offsets[j]
    }

    /// Group residual and the row attaining it.
    pub fn group_residual(&self, g: usize, theta: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, self.groups[g][0]);
        for &j in &self.groups[g] {
            let r = self.row_residual(j, theta).abs();
            if r > best.0 {
                best = (r, j);
            }
        }
        best
    }

    pub fn max_row_norm(&self) -> f64 {
        (0..self.num_rows())
            .map(|j| norm(self.row(j)))
            .fold(0.0, f64::max)
    }

    /// Largest number of rows in any group.
    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Restricts the system to the listed groups, renumbered in the given
    /// order.
    pub fn subsystem(&self, groups: &[usize]) -> Self {
        let mut coeffs = Vec::new();
        let mut offsets = Vec::new();
        let mut new_groups = Vec::with_capacity(groups.len());
        let mut group_of_row = Vec::new();
        for (new_g, &g) in groups.iter().enumerate() {
            let mut members = Vec::with_capacity(self.groups[g].len());
            for &j in &self.groups[g] {
                members.push(offsets.len());
                coeffs.extend_from_slice(self.row(j));
                offsets.push(self.offsets[j]);
                group_of_row.push(new_g);
            }
            new_groups.push(members);
        }
        Self {
            dim: self.dim,
            coeffs,
            offsets,
            groups: new_groups,
            group_of_row,
        }
    }

    /// All rows of the listed groups placed in a single group. The residual
    /// of the merged group is the maximum residual over the original groups.
    pub fn merged(&self, groups: &[usize]) -> Self {
        let mut sub = self.subsystem(groups);
        let all: Vec<usize> = (0..sub.num_rows()).collect();
        sub.group_of_row = vec![0; all.len()];
        sub.groups = vec![all];
        sub
    }

    fn check_dim(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim {
            return Err(invalid(format!(
                "parameter vector has dimension {}, system expects {}",
                theta.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Per-point residuals `r_i(θ)`, each the maximum absolute row residual of
/// the point's group.
pub fn residuals(system: &ResidualSystem, theta: &[f64]) -> Result<Vec<f64>> {
    system.check_dim(theta)?;
    Ok((0..system.num_groups())
        .map(|g| system.group_residual(g, theta).0)
        .collect())
}

/// Consensus set of `θ`: the points whose residual is at most `ε`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Consensus {
    pub inliers: Vec<usize>,
    pub count: usize,
}

pub fn consensus(system: &ResidualSystem, theta: &[f64], epsilon: f64) -> Result<Consensus> {
    if !(epsilon >= 0.0) {
        return Err(invalid("inlier threshold must be non-negative"));
    }
    let inliers: Vec<usize> = residuals(system, theta)?
        .into_iter()
        .enumerate()
        .filter(|&(_, r)| r <= epsilon + INLIER_TOL)
        .map(|(i, _)| i)
        .collect();
    Ok(Consensus {
        count: inliers.len(),
        inliers,
    })
}

/// Number of inliers without materializing the index set.
pub(crate) fn consensus_count(system: &ResidualSystem, theta: &[f64], epsilon: f64) -> usize {
    (0..system.num_groups())
        .filter(|&g| system.group_residual(g, theta).0 <= epsilon + INLIER_TOL)
        .count()
}

/// A point correspondence between two images, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMatch {
    pub p: Point2<f64>,
    pub q: Point2<f64>,
}

impl PointMatch {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self {
            p: Point2::new(x1, y1),
            q: Point2::new(x2, y2),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.q.iter()).all(|v| v.is_finite())
    }
}

/// Planted truth attached to a synthetic instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub theta: Vec<f64>,
    pub inlier_mask: Vec<bool>,
}

impl GroundTruth {
    pub fn planted_inliers(&self) -> usize {
        self.inlier_mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub system: ResidualSystem,
    pub epsilon: f64,
    pub ground_truth: Option<GroundTruth>,
}

impl ProblemInstance {
    pub fn new(
        system: ResidualSystem,
        epsilon: f64,
        ground_truth: Option<GroundTruth>,
    ) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(invalid("inlier threshold must be finite and non-negative"));
        }
        if let Some(gt) = &ground_truth {
            if gt.inlier_mask.len() != system.num_groups() {
                return Err(invalid("ground-truth mask length differs from point count"));
            }
            if gt.theta.len() != system.dim() {
                return Err(invalid("ground-truth parameters have the wrong dimension"));
            }
        }
        Ok(Self {
            system,
            epsilon,
            ground_truth,
        })
    }
}

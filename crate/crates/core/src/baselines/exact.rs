//! Exhaustive search for a maximum consensus set on small instances.
//!
//! The parameters that keep a fixed set of points within `ε` form a
//! polyhedron bounded by the hyperplanes `a_j·θ = b_j ± ε`. Every non-empty
//! polyhedron of this kind contains the minimum-norm solution of some set
//! of at most `d` linearly independent bounding equations (a vertex, or a
//! point of a minimal face when the polyhedron contains a line). Trying
//! every such set therefore visits a point of the optimal consensus region.

use crate::convex::{solve_minmax, SolverTolerances};
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::model::{consensus, consensus_count, ResidualSystem};
use crate::result::{ConsensusResult, Termination};
use nalgebra::{DMatrix, DVector};
use std::time::Instant;

/// Default cap on the number of equation sets tried.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 5_000_000;

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of equation sets `exact_maxcon` tries: all subsets of at most
/// `d` of the `2 · rows` bounding hyperplanes.
pub fn enumeration_size(system: &ResidualSystem) -> f64 {
    let planes = 2 * system.num_rows() as u64;
    let d = system.dim() as u64;
    (0..=d.min(planes)).map(|k| binomial(planes, k)).sum()
}

/// Calls `visit` with every subset of `0..n` of size `k`, in lexicographic
/// order.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Globally optimal consensus by enumeration. Fails with
/// [`Error::LimitExceeded`] when [`enumeration_size`] exceeds `limit`.
pub fn exact_maxcon(system: &ResidualSystem, epsilon: f64, limit: u64) -> Result<ConsensusResult> {
    crate::convex::check_epsilon(epsilon)?;
    let required = enumeration_size(system);
    if required > limit as f64 {
        return Err(Error::LimitExceeded {
            required,
            limit: limit as f64,
        });
    }
    let started = Instant::now();
    let d = system.dim();
    let planes = 2 * system.num_rows();
    let plane = |p: usize| {
        let j = p / 2;
        let sign = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
        (j, system.offset(j) + sign * epsilon)
    };
    let mut best_theta = vec![0.0; d];
    let mut best = consensus_count(system, &best_theta, epsilon);
    let mut tried = 1usize;
    for k in 1..=d.min(planes) {
        for_each_subset(planes, k, |set| {
            tried += 1;
            let m = DMatrix::from_fn(k, d, |i, c| system.row(plane(set[i]).0)[c]);
            let rhs = DVector::from_iterator(k, set.iter().map(|&p| plane(p).1));
            let theta: Vec<f64> = lstsq(m, &rhs, 1e-12).iter().copied().collect();
            let count = consensus_count(system, &theta, epsilon);
            if count > best {
                best = count;
                best_theta = theta;
            }
        });
    }
    // Candidates sit on the boundary of the consensus region. A Chebyshev
    // fit of the winning set moves into its interior when it has one.
    let set = consensus(system, &best_theta, epsilon)?.inliers;
    if let Ok((theta, _)) = solve_minmax(system, &set, &SolverTolerances::default()) {
        if consensus_count(system, &theta, epsilon) >= best {
            best_theta = theta;
        }
    }
    ConsensusResult::from_theta(system, best_theta, epsilon, started, Termination::Tolerance, tried)
}

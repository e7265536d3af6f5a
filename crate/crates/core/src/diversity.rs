//! Majorization and the log-sum surrogate as a diversity measure.
//!
//! For non-negative vectors of equal sum, `s ≺ t` (s is majorized by t)
//! when every partial sum of the entries of `s` sorted in decreasing order
//! is at most the corresponding partial sum for `t`. A vector higher in
//! this order is more concentrated; a slack vector concentrated on few
//! points leaves more points with zero slack, i.e. more inliers. The
//! surrogate `Σ log(s_i + γ)` is strictly Schur-concave, so it decreases
//! along the order.

use crate::error::{invalid, Result};
use std::io::Write;

/// Tolerance on partial sums when comparing Lorentz curves.
pub const MAJORIZATION_TOL: f64 = 1e-12;

/// Cumulative sums of a vector sorted in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzCurve {
    pub partial_sums: Vec<f64>,
}

impl LorentzCurve {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }

    /// Writes `k,partial_sum` rows, `k` counted from 1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,partial_sum")?;
        for (k, v) in self.partial_sums.iter().enumerate() {
            writeln!(w, "{},{}", k + 1, v)?;
        }
        Ok(())
    }
}

fn check_nonnegative(s: &[f64]) -> Result<()> {
    if s.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid("entries must be finite and non-negative"));
    }
    Ok(())
}

pub fn lorentz_partial_sums(s: &[f64]) -> Result<LorentzCurve> {
    check_nonnegative(s)?;
    let mut sorted = s.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let partial_sums = sorted
        .into_iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    Ok(LorentzCurve { partial_sums })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Majorization {
    /// `s ≺ t`.
    MajorizedBy,
    /// `t ≺ s`.
    Majorizes,
    /// Same sorted entries.
    Equal,
    /// The curves cross or the totals differ.
    Incomparable,
}

/// Majorization relation of `s` to `t`.
pub fn majorizes(s: &[f64], t: &[f64]) -> Result<Majorization> {
    if s.len() != t.len() {
        return Err(invalid(format!(
            "vectors have lengths {} and {}",
            s.len(),
            t.len()
        )));
    }
    let ls = lorentz_partial_sums(s)?;
    let lt = lorentz_partial_sums(t)?;
    if (ls.total() - lt.total()).abs() > MAJORIZATION_TOL {
        return Ok(Majorization::Incomparable);
    }
    let mut below = false;
    let mut above = false;
    for (a, b) in ls.partial_sums.iter().zip(&lt.partial_sums) {
        if a < &(b - MAJORIZATION_TOL) {
            below = true;
        } else if a > &(b + MAJORIZATION_TOL) {
            above = true;
        }
    }
    Ok(match (below, above) {
        (false, false) => Majorization::Equal,
        (true, false) => Majorization::MajorizedBy,
        (false, true) => Majorization::Majorizes,
        (true, true) => Majorization::Incomparable,
    })
}

/// Gradient of `Σ log(s_i + γ)`: `1/(s_i + γ)`.
pub fn surrogate_gradient(s: &[f64], gamma: f64) -> Result<Vec<f64>> {
    crate::reweight::update_weights_lp(s, gamma)
}

/// `(s_i − s_j)(∂G/∂s_i − ∂G/∂s_j)`. Non-positive for every pair exactly
/// when `G` satisfies Schur's condition at `s`.
pub fn schur_condition_check(gamma: f64, s: &[f64], (i, j): (usize, usize)) -> Result<f64> {
    check_nonnegative(s)?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid("gamma must be positive"));
    }
    if i >= s.len() || j >= s.len() {
        return Err(invalid("index out of range"));
    }
    let (a, b) = (s[i], s[j]);
    Ok(-(a - b).powi(2) / ((a + gamma) * (b + gamma)))
}

/// Number of entries at or below `tol`.
pub fn zero_count(s: &[f64], tol: f64) -> usize {
    s.iter().filter(|&&v| v <= tol).count()
}

/// Scales a non-negative vector to sum one. A zero vector is returned
/// unchanged.
pub fn normalize_sum(s: &[f64]) -> Vec<f64> {
    let total: f64 = s.iter().sum();
    if total > 0.0 {
        s.iter().map(|v| v / total).collect()
    } else {
        s.to_vec()
    }
}

use super::{PointMatch, ResidualSystem};
use crate::error::{degenerate, invalid, Result};
use nalgebra::{Matrix3, Point2, Vector3};
use std::f64::consts::SQRT_2;

/// Matches expressed in normalized coordinates together with the
/// similarity transforms `T1`, `T2` that produced them
/// (`p_norm = T1 p`, `q_norm = T2 q`).
#[derive(Debug, Clone)]
pub struct NormalizedMatches {
    pub matches: Vec<PointMatch>,
    pub t1: Matrix3<f64>,
    pub t2: Matrix3<f64>,
}

impl NormalizedMatches {
    /// Expresses a pixel-space homography `q ~ H p` in normalized coordinates.
    pub fn transfer_homography(&self, h: &Matrix3<f64>) -> Result<Matrix3<f64>> {
        let t1_inv = self
            .t1
            .try_inverse()
            .ok_or_else(|| degenerate("normalizing transform is singular"))?;
        Ok(self.t2 * h * t1_inv)
    }

    /// Expresses a pixel-space fundamental matrix `q^T F p = 0` in normalized
    /// coordinates.
    pub fn transfer_fundamental(&self, f: &Matrix3<f64>) -> Result<Matrix3<f64>> {
        let t1_inv = self
            .t1
            .try_inverse()
            .ok_or_else(|| degenerate("normalizing transform is singular"))?;
        let t2_inv = self
            .t2
            .try_inverse()
            .ok_or_else(|| degenerate("normalizing transform is singular"))?;
        Ok(t2_inv.transpose() * f * t1_inv)
    }
}

fn similarity(points: &[Point2<f64>]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    // Pooled standard deviation of the centred x and y coordinates.
    let var = points
        .iter()
        .map(|p| (p.x - cx).powi(2) + (p.y - cy).powi(2))
        .sum::<f64>()
        / (2.0 * n);
    let spread = var.sqrt();
    let magnitude = cx.abs().max(cy.abs()).max(1.0);
    if !(spread > 1e-12 * magnitude) {
        return Err(degenerate("point set has zero spread"));
    }
    let k = SQRT_2 / spread;
    Ok(Matrix3::new(k, 0.0, -k * cx, 0.0, k, -k * cy, 0.0, 0.0, 1.0))
}

fn apply(t: &Matrix3<f64>, p: &Point2<f64>) -> Point2<f64> {
    let v = t * Vector3::new(p.x, p.y, 1.0);
    Point2::new(v.x / v.z, v.y / v.z)
}

/// Translates each image's points to zero mean and scales them isotropically
/// so the standard deviation of their coordinates is `√2`.
pub fn normalize_matches(matches: &[PointMatch]) -> Result<NormalizedMatches> {
    if matches.is_empty() {
        return Err(invalid("need at least one match to normalize"));
    }
    if matches.iter().any(|m| !m.is_finite()) {
        return Err(invalid("match coordinates must be finite"));
    }
    let ps: Vec<_> = matches.iter().map(|m| m.p).collect();
    let qs: Vec<_> = matches.iter().map(|m| m.q).collect();
    let t1 = similarity(&ps)?;
    let t2 = similarity(&qs)?;
    let matches = matches
        .iter()
        .map(|m| PointMatch {
            p: apply(&t1, &m.p),
            q: apply(&t2, &m.q),
        })
        .collect();
    Ok(NormalizedMatches { matches, t1, t2 })
}

/// DLT rows for `q ~ H p` with `h33 = 1`. The two equations of each
/// correspondence share one group.
pub fn linearize_homography(matches: &[PointMatch]) -> Result<ResidualSystem> {
    if matches.len() < 5 {
        return Err(invalid(format!(
            "homography linearization needs at least 5 matches, got {}",
            matches.len()
        )));
    }
    let mut rows = Vec::with_capacity(2 * matches.len());
    let mut groups = Vec::with_capacity(matches.len());
    for (i, m) in matches.iter().enumerate() {
        let (x, y) = (m.p.x, m.p.y);
        let (u, v) = (m.q.x, m.q.y);
        rows.push((vec![x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y], u));
        rows.push((vec![0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y], v));
        groups.push(vec![2 * i, 2 * i + 1]);
    }
    ResidualSystem::new(8, rows, groups)
}

/// Epipolar rows `q^T F p = 0` with `f33 = 1`, one group per match. The rank
/// constraint on `F` is not imposed.
pub fn linearize_fundamental(matches: &[PointMatch]) -> Result<ResidualSystem> {
    if matches.len() < 9 {
        return Err(invalid(format!(
            "fundamental linearization needs at least 9 matches, got {}",
            matches.len()
        )));
    }
    let rows = matches
        .iter()
        .map(|m| {
            let (x, y) = (m.p.x, m.p.y);
            let (u, v) = (m.q.x, m.q.y);
            (vec![u * x, u * y, u, v * x, v * y, v, x, y], -1.0)
        })
        .collect();
    ResidualSystem::from_rows(8, rows)
}

fn params_of(m: &Matrix3<f64>) -> Result<Vec<f64>> {
    let s = m[(2, 2)];
    if s.abs() < 1e-12 * m.abs().max() {
        return Err(degenerate("matrix has a vanishing (3,3) entry"));
    }
    Ok((0..8).map(|k| m[(k / 3, k % 3)] / s).collect())
}

/// Row-major entries of `H / h33` without the trailing one.
pub fn homography_params(h: &Matrix3<f64>) -> Result<Vec<f64>> {
    params_of(h)
}

/// Row-major entries of `F / f33` without the trailing one.
pub fn fundamental_params(f: &Matrix3<f64>) -> Result<Vec<f64>> {
    params_of(f)
}

/// Inverse of [`homography_params`] / [`fundamental_params`].
pub fn params_to_matrix(theta: &[f64]) -> Result<Matrix3<f64>> {
    if theta.len() != 8 {
        return Err(invalid("expected 8 parameters"));
    }
    let mut m = Matrix3::identity();
    for (k, v) in theta.iter().enumerate() {
        m[(k / 3, k % 3)] = *v;
    }
    Ok(m)
}

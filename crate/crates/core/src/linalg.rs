//! Small dense solves shared by the solvers and estimators.

use nalgebra::{DMatrix, DVector, SVD};

/// SVD iterated to machine precision. The default convergence threshold
/// of `DMatrix::svd` leaves reconstruction errors around 1e-4 on some
/// small indefinite matrices.
fn svd(m: DMatrix<f64>) -> SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    m.try_svd(true, true, f64::EPSILON, 0)
        .expect("unbounded iteration count always converges")
}

/// Minimum-norm least-squares solution of `m x = rhs`. Singular values
/// below `rcond · σ_max` are treated as zero.
pub(crate) fn lstsq(m: DMatrix<f64>, rhs: &DVector<f64>, rcond: f64) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(m.ncols());
    }
    let svd = svd(m);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DVector::zeros(svd.v_t.as_ref().map_or(0, |v| v.ncols()));
    }
    svd.solve(rhs, rcond * smax)
        .expect("both singular vector sets were computed")
}

/// Least-squares solution of a system with at least as many rows as
/// columns, or `None` when the columns are numerically dependent.
pub(crate) fn solve_full_rank(m: DMatrix<f64>, rhs: &DVector<f64>, rcond: f64) -> Option<DVector<f64>> {
    if m.nrows() < m.ncols() {
        return None;
    }
    let svd = svd(m);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= rcond * smax {
        return None;
    }
    let x = svd.solve(rhs, 0.0).ok()?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Least-squares fit `θ` to the rows listed, minimizing `Σ (a_j·θ − b_j)²`.
pub(crate) fn fit_rows(
    system: &crate::model::ResidualSystem,
    rows: &[usize],
    rcond: f64,
) -> Option<Vec<f64>> {
    let d = system.dim();
    let m = DMatrix::from_fn(rows.len(), d, |i, k| system.row(rows[i])[k]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&j| system.offset(j)));
    solve_full_rank(m, &b, rcond).map(|x| x.iter().copied().collect())
}

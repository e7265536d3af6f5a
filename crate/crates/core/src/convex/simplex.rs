//! Dense primal simplex for the slack LP.
//!
//! Variables are the free parameters `θ`, the slacks `s ≥ 0` and one
//! non-negative surplus per inequality. The tableau is kept in dictionary
//! form `x_B = rhs − T x_N` and only the nonbasic columns are stored, so a
//! tableau has `2·rows + 2·d` rows and `d + n + 1` columns.
//!
//! A crash basis that makes each point's most violated row tight through
//! its slack is primal feasible from the start, so no artificial phase is
//! needed. A change of weights only changes the cost row, which lets a
//! sequence of solves continue from the previous optimal basis.

use super::{check_epsilon, check_weights, slacks_at, Diagnostics, SlackSolution, SolveStatus, SolverTolerances};
use crate::error::{Error, Result};
use crate::model::ResidualSystem;

/// Consecutive degenerate pivots tolerated before switching from the
/// largest-coefficient rule to Bland's rule.
const STALL_LIMIT: usize = 50;
/// Smallest tableau entry accepted as a pivot.
const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SlackLp {
    d: usize,
    n: usize,
    m: usize,
    /// `m × (d + n + 1)`, last column is the right-hand side.
    tab: Vec<f64>,
    /// Right-hand sides at the slack basis, for the dual objective.
    rhs0: Vec<f64>,
    /// Reduced costs of the nonbasic columns.
    cost: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    system: ResidualSystem,
    epsilon: f64,
    tol: SolverTolerances,
    budget: usize,
}

impl SlackLp {
    pub fn new(system: &ResidualSystem, epsilon: f64, tol: &SolverTolerances) -> Result<Self> {
        check_epsilon(epsilon)?;
        tol.validate()?;
        let d = system.dim();
        let n = system.num_groups();
        let rows = system.num_rows();
        let m = 2 * rows + 2 * d;
        let k = d + n;
        let w = k + 1;
        let mut tab = vec![0.0; m * w];
        let mut rhs0 = vec![0.0; m];
        for j in 0..rows {
            let g = system.group_of(j);
            let a = system.row(j);
            let b = system.offset(j);
            for (half, sign) in [(0, 1.0), (1, -1.0)] {
                let i = 2 * j + half;
                let row = &mut tab[i * w..(i + 1) * w];
                for (c, &ak) in a.iter().enumerate() {
                    row[c] = sign * ak;
                }
                row[d + g] = -1.0;
                row[k] = epsilon + sign * b;
                rhs0[i] = row[k];
            }
        }
        for c in 0..d {
            for (half, sign) in [(0, 1.0), (1, -1.0)] {
                let i = 2 * rows + 2 * c + half;
                tab[i * w + c] = sign;
                tab[i * w + k] = tol.theta_box;
                rhs0[i] = tol.theta_box;
            }
        }
        let mut lp = Self {
            d,
            n,
            m,
            tab,
            rhs0,
            cost: vec![0.0; k],
            basic: (0..m).map(|i| k + i).collect(),
            nonbasic: (0..k).collect(),
            system: system.clone(),
            epsilon,
            tol: *tol,
            budget: tol.pivot_budget(n, d),
        };
        lp.crash();
        Ok(lp)
    }

    fn width(&self) -> usize {
        self.d + self.n + 1
    }

    fn rhs(&self, i: usize) -> f64 {
        self.tab[i * self.width() + self.d + self.n]
    }

    fn is_param(&self, var: usize) -> bool {
        var < self.d
    }

    /// Makes each point's most violated inequality tight by bringing its
    /// slack into the basis. Slack columns of different points touch
    /// disjoint rows, so the pivots do not interact.
    fn crash(&mut self) {
        let rows_of: Vec<Vec<usize>> = self
            .system
            .groups()
            .iter()
            .map(|g| g.iter().flat_map(|&j| [2 * j, 2 * j + 1]).collect())
            .collect();
        for (g, rows) in rows_of.iter().enumerate() {
            let (r, v) = rows
                .iter()
                .map(|&i| (i, self.rhs(i)))
                .fold((usize::MAX, 0.0), |best, cur| if cur.1 < best.1 { cur } else { best });
            if v < 0.0 {
                self.pivot(r, self.d + g);
            }
        }
    }

    fn cost_of(&self, var: usize, weights: &[f64]) -> f64 {
        if var >= self.d && var < self.d + self.n {
            weights[var - self.d]
        } else {
            0.0
        }
    }

    fn price(&mut self, weights: &[f64]) {
        let w = self.width();
        let k = w - 1;
        for j in 0..k {
            self.cost[j] = self.cost_of(self.nonbasic[j], weights);
        }
        for i in 0..self.m {
            let cb = self.cost_of(self.basic[i], weights);
            if cb != 0.0 {
                let row = &self.tab[i * w..i * w + k];
                for (c, &t) in self.cost.iter_mut().zip(row) {
                    *c -= cb * t;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width();
        let p = self.tab[r * w + e];
        let inv = 1.0 / p;
        for v in &mut self.tab[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.tab[r * w + e] = inv;
        let prow = self.tab[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * w + e];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * w..(i + 1) * w];
            for (v, &pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            row[e] = -f * inv;
        }
        let f = self.cost[e];
        if f != 0.0 {
            for (c, &pv) in self.cost.iter_mut().zip(&prow) {
                *c -= f * pv;
            }
            self.cost[e] = -f * inv;
        }
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[e]);
    }

    /// Entering column and direction of movement.
    fn choose_entering(&self, threshold: f64, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, &c) in self.cost.iter().enumerate() {
            let var = self.nonbasic[j];
            let (gain, dir) = if self.is_param(var) {
                (c.abs(), if c > 0.0 { -1.0 } else { 1.0 })
            } else {
                (-c, 1.0)
            };
            if gain <= threshold {
                continue;
            }
            let better = match best {
                None => true,
                Some((bj, bg, _)) => {
                    if bland {
                        var < self.nonbasic[bj]
                    } else {
                        gain > bg
                    }
                }
            };
            if better {
                best = Some((j, gain, dir));
            }
        }
        best.map(|(j, _, dir)| (j, dir))
    }

    /// Leaving row for entering column `e` moving in direction `dir`, and
    /// the step length.
    fn choose_leaving(&self, e: usize, dir: f64, bland: bool) -> Option<(usize, f64)> {
        let w = self.width();
        let k = w - 1;
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            if self.is_param(self.basic[i]) {
                continue;
            }
            let alpha = self.tab[i * w + e] * dir;
            if alpha <= PIVOT_TOL {
                continue;
            }
            let ratio = self.tab[i * w + k].max(0.0) / alpha;
            let better = match best {
                None => true,
                Some((bi, br, ba)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br);
                    if tie {
                        if bland {
                            self.basic[i] < self.basic[bi]
                        } else {
                            alpha > ba
                        }
                    } else {
                        ratio < br
                    }
                }
            };
            if better {
                best = Some((i, ratio, alpha));
            }
        }
        best.map(|(i, ratio, _)| (i, ratio))
    }

    /// Solves the LP for `weights`, continuing from the current basis.
    pub fn solve(&mut self, weights: &[f64]) -> Result<SlackSolution> {
        check_weights(weights, self.n)?;
        let wmax = weights.iter().copied().fold(0.0, f64::max);
        let threshold = self.tol.optimality_tol * wmax.max(1.0);
        self.price(weights);
        let mut pivots = 0;
        let mut stalled = 0;
        let mut status = SolveStatus::Optimal;
        let mut repriced = false;
        loop {
            let bland = stalled >= STALL_LIMIT;
            let Some((e, dir)) = self.choose_entering(threshold, bland) else {
                // Guard against drift in the updated cost row.
                if repriced {
                    break;
                }
                self.price(weights);
                repriced = true;
                continue;
            };
            repriced = false;
            let Some((r, step)) = self.choose_leaving(e, dir, bland) else {
                status = SolveStatus::InfeasibleNumerics;
                break;
            };
            if pivots >= self.budget {
                return Err(Error::IterationLimit(self.budget));
            }
            self.pivot(r, e);
            pivots += 1;
            if step <= 1e-12 {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        Ok(self.extract(weights, status, pivots))
    }

    fn extract(&self, weights: &[f64], status: SolveStatus, pivots: usize) -> SlackSolution {
        let k = self.d + self.n;
        let mut theta = vec![0.0; self.d];
        let mut basic_params = 0;
        for i in 0..self.m {
            if self.is_param(self.basic[i]) {
                theta[self.basic[i]] = self.rhs(i);
                basic_params += 1;
            }
        }
        let mut duals = vec![0.0; self.m];
        for (j, &var) in self.nonbasic.iter().enumerate() {
            if var >= k {
                duals[var - k] = self.cost[j];
            }
        }
        let dual_bound = -duals.iter().zip(&self.rhs0).map(|(y, b)| y * b).sum::<f64>();
        let rows = self.system.num_rows();
        let pairs = |off: usize, count: usize| -> Vec<[f64; 2]> {
            (0..count)
                .map(|j| [duals[off + 2 * j], duals[off + 2 * j + 1]])
                .collect()
        };
        let slacks = slacks_at(&self.system, &theta, self.epsilon, self.tol.feasibility_tol);
        let objective = slacks.iter().zip(weights).map(|(s, w)| s * w).sum();
        SlackSolution {
            theta,
            slacks,
            objective,
            status,
            iterations: pivots,
            diagnostics: Diagnostics {
                basic_params,
                dual_bound: Some(dual_bound),
                row_duals: pairs(0, rows),
                box_duals: pairs(2 * rows, self.d),
                kkt_residual: None,
            },
        }
    }
}

//! Primal active-set method for the weighted slack QP.
//!
//! The working set holds tight inequalities `σ(a_j·θ − b_j) − s_i ≤ ε`,
//! grouped by point. The first working constraint of a point expresses its
//! slack as an affine function of `θ`; any further working constraints of
//! the same point, and working box bounds, become linear equalities on
//! `θ`. Each iteration therefore reduces to an equality-constrained least
//! squares problem in `d` unknowns. Points without working constraints
//! have their slack driven to zero.
//!
//! The non-negativity bound on the slacks is dropped: it never binds at
//! the optimum because `s_i = 0` is always at least as good as a negative
//! slack.

use super::{check_epsilon, check_weights, slacks_at, Diagnostics, SlackSolution, SolveStatus, SolverTolerances};
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::model::{dot, ResidualSystem};
use nalgebra::{DMatrix, DVector};

/// A working constraint: row index (or parameter index for box bounds)
/// and sign.
type Tight = (usize, f64);

#[derive(Debug, Clone)]
pub struct SlackQp<'a> {
    system: &'a ResidualSystem,
    epsilon: f64,
    tol: SolverTolerances,
    theta: Vec<f64>,
    s: Vec<f64>,
    working: Vec<Vec<Tight>>,
    box_working: Vec<Tight>,
}

enum Entry {
    First(usize),
    Extra(usize, usize),
    Box(usize),
}

impl<'a> SlackQp<'a> {
    pub fn new(system: &'a ResidualSystem, epsilon: f64, tol: &SolverTolerances) -> Result<Self> {
        Self::with_start(system, epsilon, tol, &vec![0.0; system.dim()])
    }

    /// Starts the active-set iteration from a given parameter vector.
    pub fn with_start(
        system: &'a ResidualSystem,
        epsilon: f64,
        tol: &SolverTolerances,
        theta: &[f64],
    ) -> Result<Self> {
        check_epsilon(epsilon)?;
        tol.validate()?;
        crate::model::residuals(system, theta)?;
        let n = system.num_groups();
        let mut s = vec![0.0; n];
        let mut working = vec![Vec::new(); n];
        for g in 0..n {
            let (r, j) = system.group_residual(g, theta);
            if r > epsilon {
                s[g] = r - epsilon;
                let sign = system.row_residual(j, theta).signum();
                working[g].push((j, sign));
            }
        }
        Ok(Self {
            system,
            epsilon,
            tol: *tol,
            theta: theta.to_vec(),
            s,
            working,
            box_working: Vec::new(),
        })
    }

    /// `u·θ − c` is the slack defined by a tight row.
    fn slack_row(&self, (j, sign): Tight) -> (Vec<f64>, f64) {
        let u = self.system.row(j).iter().map(|a| sign * a).collect();
        (u, sign * self.system.offset(j) + self.epsilon)
    }

    fn resync(&mut self) {
        for g in 0..self.working.len() {
            if let Some(&first) = self.working[g].first() {
                let (u, c) = self.slack_row(first);
                self.s[g] = dot(&u, &self.theta) - c;
            }
        }
    }

    pub fn solve(&mut self, weights: &[f64]) -> Result<SlackSolution> {
        let n = self.system.num_groups();
        let d = self.system.dim();
        check_weights(weights, n)?;
        let budget = self.tol.pivot_budget(n, d).max(100);
        let mut iterations = 0;
        loop {
            self.resync();
            let (p, p_s, entries, nu) = self.step(weights);
            if self.is_stationary(weights, &p_s) {
                let (worst, lambda) = self.most_negative(weights, &entries, &nu);
                let lscale = lambda.max(1.0);
                match worst {
                    Some((idx, value)) if value < -self.tol.optimality_tol * lscale => {
                        self.drop(&entries[idx]);
                    }
                    _ => break,
                }
            } else {
                self.advance(&p, &p_s);
            }
            iterations += 1;
            if iterations > budget {
                return Err(Error::IterationLimit(budget));
            }
        }
        Ok(self.extract(weights, iterations))
    }

    /// True when the step is too short to change the objective beyond
    /// rounding, so the current point minimizes over the working set.
    fn is_stationary(&self, weights: &[f64], p_s: &[f64]) -> bool {
        let objective: f64 = self.s.iter().zip(weights).map(|(s, w)| w * s * s).sum();
        let decrease: f64 = self
            .s
            .iter()
            .zip(p_s)
            .zip(weights)
            .map(|((s, dp), w)| w * (s * s - (s + dp) * (s + dp)))
            .sum();
        let s_scale = self.s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        p_s.iter().all(|v| v.abs() <= 1e-10 * s_scale) || decrease <= 1e-10 * objective.max(1e-12)
    }

    /// Step to the minimizer over the current working set, the working
    /// entries in solve order, and the equality multipliers.
    fn step(&self, weights: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<Entry>, Vec<f64>) {
        let d = self.system.dim();
        let mut h = DMatrix::zeros(d, d);
        let mut grad = DVector::zeros(d);
        let mut eq_rows: Vec<Vec<f64>> = Vec::new();
        let mut entries = Vec::new();
        for (g, tight) in self.working.iter().enumerate() {
            let Some(&first) = tight.first() else { continue };
            let (u, _) = self.slack_row(first);
            let uv = DVector::from_column_slice(&u);
            h += 2.0 * weights[g] * &uv * uv.transpose();
            grad += 2.0 * weights[g] * self.s[g] * &uv;
            entries.push(Entry::First(g));
            for (pos, &extra) in tight.iter().enumerate().skip(1) {
                let (v, _) = self.slack_row(extra);
                eq_rows.push(v.iter().zip(&u).map(|(a, b)| a - b).collect());
                entries.push(Entry::Extra(g, pos));
            }
        }
        for (pos, &(k, sign)) in self.box_working.iter().enumerate() {
            let mut row = vec![0.0; d];
            row[k] = sign;
            eq_rows.push(row);
            entries.push(Entry::Box(pos));
        }
        let q = eq_rows.len();
        let mut kkt = DMatrix::zeros(d + q, d + q);
        kkt.view_mut((0, 0), (d, d)).copy_from(&h);
        for (r, row) in eq_rows.iter().enumerate() {
            for c in 0..d {
                kkt[(d + r, c)] = row[c];
                kkt[(c, d + r)] = row[c];
            }
        }
        let mut rhs = DVector::zeros(d + q);
        rhs.rows_mut(0, d).copy_from(&(-grad));
        // One step of iterative refinement; the KKT matrix mixes the
        // weighted Hessian with unit-scale constraint rows.
        let mut sol = lstsq(kkt.clone(), &rhs, 1e-13);
        let residual = &rhs - &kkt * &sol;
        sol += lstsq(kkt, &residual, 1e-13);
        let p: Vec<f64> = sol.rows(0, d).iter().copied().collect();
        let nu: Vec<f64> = sol.rows(d, q).iter().copied().collect();
        let p_s = (0..self.s.len())
            .map(|g| match self.working[g].first() {
                Some(&first) => dot(&self.slack_row(first).0, &p),
                None => -self.s[g],
            })
            .collect();
        (p, p_s, entries, nu)
    }

    /// Multipliers of all working constraints. Returns the most negative
    /// one (index into `entries`) and the largest magnitude.
    fn multipliers(&self, weights: &[f64], entries: &[Entry], nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; entries.len()];
        let mut k = 0;
        let mut i = 0;
        while i < entries.len() {
            match entries[i] {
                Entry::First(g) => {
                    let extras = self.working[g].len() - 1;
                    let extra_sum: f64 = nu[k..k + extras].iter().sum();
                    out[i] = 2.0 * weights[g] * self.s[g] - extra_sum;
                    for e in 0..extras {
                        out[i + 1 + e] = nu[k + e];
                    }
                    k += extras;
                    i += 1 + extras;
                }
                Entry::Box(_) => {
                    out[i] = nu[k];
                    k += 1;
                    i += 1;
                }
                Entry::Extra(..) => unreachable!("extras follow their point's first entry"),
            }
        }
        out
    }

    fn most_negative(&self, weights: &[f64], entries: &[Entry], nu: &[f64]) -> (Option<(usize, f64)>, f64) {
        let lambda = self.multipliers(weights, entries, nu);
        let scale = lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = lambda
            .iter()
            .copied()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, bv)) if bv <= v => best,
                _ => Some((i, v)),
            });
        (worst, scale)
    }

    fn drop(&mut self, entry: &Entry) {
        match *entry {
            Entry::First(g) => {
                self.working[g].remove(0);
            }
            Entry::Extra(g, pos) => {
                self.working[g].remove(pos);
            }
            Entry::Box(pos) => {
                self.box_working.remove(pos);
            }
        }
    }

    /// Moves along `(p, p_s)` until the full step or the first blocking
    /// constraint, which joins the working set.
    fn advance(&mut self, p: &[f64], p_s: &[f64]) {
        let sys = self.system;
        let mut alpha = 1.0;
        let mut block: Option<(Option<usize>, Tight)> = None;
        for (g, &ps) in p_s.iter().enumerate() {
            for &j in sys.group(g) {
                let r = sys.row_residual(j, &self.theta);
                let dr = dot(sys.row(j), p);
                for sign in [1.0, -1.0] {
                    if self.working[g].contains(&(j, sign)) {
                        continue;
                    }
                    let dv = sign * dr - ps;
                    let scale = 1e-14 * (1.0 + dr.abs() + ps.abs());
                    if dv <= scale {
                        continue;
                    }
                    let v = sign * r - self.s[g] - self.epsilon;
                    let a = (-v).max(0.0) / dv;
                    if a < alpha {
                        alpha = a;
                        block = Some((Some(g), (j, sign)));
                    }
                }
            }
        }
        let m = self.tol.theta_box;
        for (k, &pk) in p.iter().enumerate() {
            for sign in [1.0, -1.0] {
                if self.box_working.contains(&(k, sign)) {
                    continue;
                }
                let dv = sign * pk;
                if dv <= 1e-14 {
                    continue;
                }
                let a = (m - sign * self.theta[k]).max(0.0) / dv;
                if a < alpha {
                    alpha = a;
                    block = Some((None, (k, sign)));
                }
            }
        }
        for (t, dp) in self.theta.iter_mut().zip(p) {
            *t += alpha * dp;
        }
        for (s, dp) in self.s.iter_mut().zip(p_s) {
            *s += alpha * dp;
        }
        match block {
            Some((Some(g), tight)) => self.working[g].push(tight),
            Some((None, tight)) => self.box_working.push(tight),
            None => {}
        }
    }

    fn extract(&mut self, weights: &[f64], iterations: usize) -> SlackSolution {
        self.resync();
        let (_, _, entries, nu) = self.step(weights);
        let lambda = self.multipliers(weights, &entries, &nu);
        let sys = self.system;
        let d = sys.dim();

        // Optimality conditions: stationarity in θ and s, primal and dual
        // feasibility.
        let mut grad_theta = vec![0.0; d];
        let mut grad_s: Vec<f64> = self.s.iter().zip(weights).map(|(s, w)| 2.0 * w * s).collect();
        let mut row_duals = vec![[0.0; 2]; sys.num_rows()];
        let mut box_duals = vec![[0.0; 2]; d];
        let mut li = 0;
        for (g, tight) in self.working.iter().enumerate() {
            for &(j, sign) in tight {
                let l = lambda[li];
                li += 1;
                for (gt, a) in grad_theta.iter_mut().zip(sys.row(j)) {
                    *gt += l * sign * a;
                }
                grad_s[g] -= l;
                row_duals[j][if sign > 0.0 { 0 } else { 1 }] = l;
            }
        }
        for &(k, sign) in &self.box_working {
            let l = lambda[li];
            li += 1;
            grad_theta[k] += l * sign;
            box_duals[k][if sign > 0.0 { 0 } else { 1 }] = l;
        }
        let infeasibility = (0..sys.num_groups())
            .map(|g| sys.group_residual(g, &self.theta).0 - self.epsilon - self.s[g])
            .fold(0.0f64, f64::max);
        let dual_violation = lambda.iter().fold(0.0f64, |m, &l| m.max(-l));
        let kkt = grad_theta
            .iter()
            .chain(&grad_s)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(infeasibility)
            .max(dual_violation);

        let slacks = slacks_at(sys, &self.theta, self.epsilon, self.tol.feasibility_tol);
        let objective = slacks.iter().zip(weights).map(|(s, w)| w * s * s).sum();
        SlackSolution {
            theta: self.theta.clone(),
            slacks,
            objective,
            status: SolveStatus::Optimal,
            iterations,
            diagnostics: Diagnostics {
                basic_params: 0,
                dual_bound: None,
                row_duals,
                box_duals,
                kkt_residual: Some(kkt),
            },
        }
    }
}

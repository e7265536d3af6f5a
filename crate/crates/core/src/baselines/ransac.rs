//! Hypothesize-and-verify sampling.

use crate::error::{degenerate, invalid, Result};
use crate::linalg::fit_rows;
use crate::model::{consensus_count, ResidualSystem};
use crate::result::{ConsensusResult, Termination};
use crate::rng::{derive_seed, seeded, Rng};
use rand::seq::index::sample;
use std::time::{Duration, Instant};

/// Relative singular-value cutoff below which a sample is degenerate.
const SAMPLE_RCOND: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RansacConfig {
    /// Probability of drawing at least one all-inlier sample.
    pub confidence: f64,
    /// Hard cap on the number of samples.
    pub max_iterations: usize,
    /// Points per sample. `None` picks the smallest number of points whose
    /// rows determine all parameters.
    pub min_sample_size: Option<usize>,
    pub seed: u64,
    /// Keep sampling until this much time has passed instead of using the
    /// adaptive stopping rule. The cap still applies.
    pub time_budget: Option<Duration>,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            confidence: 0.99,
            max_iterations: 10_000,
            min_sample_size: None,
            seed: 0,
            time_budget: None,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(invalid("confidence must lie strictly between 0 and 1"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("iteration cap must be positive"));
        }
        if self.min_sample_size == Some(0) {
            return Err(invalid("sample size must be positive"));
        }
        Ok(())
    }

    pub(crate) fn sample_size(&self, system: &ResidualSystem) -> usize {
        self.min_sample_size.unwrap_or_else(|| {
            let rows = system.groups().iter().map(Vec::len).min().unwrap_or(1);
            system.dim().div_ceil(rows)
        })
    }
}

/// Samples needed to draw an all-inlier sample of size `m` with
/// probability `confidence` when a fraction `inlier_ratio` of the points
/// are inliers, capped at `cap`.
pub fn ransac_iterations(confidence: f64, inlier_ratio: f64, m: usize, cap: usize) -> usize {
    let good = inlier_ratio.clamp(0.0, 1.0).powi(m as i32);
    if good >= 1.0 {
        return 1;
    }
    if good <= 0.0 {
        return cap;
    }
    let k = ((1.0 - confidence).ln() / (1.0 - good).ln()).ceil();
    if !k.is_finite() || k >= cap as f64 {
        cap
    } else {
        (k as usize).clamp(1, cap)
    }
}

/// Least-squares fit on all rows of the given points.
pub(crate) fn fit_groups(system: &ResidualSystem, groups: &[usize]) -> Option<Vec<f64>> {
    let rows: Vec<usize> = groups
        .iter()
        .flat_map(|&g| system.group(g).iter().copied())
        .collect();
    fit_rows(system, &rows, SAMPLE_RCOND)
}

struct Best {
    theta: Vec<f64>,
    count: usize,
}

/// Local optimization of a new best hypothesis: inner resampling from its
/// inliers followed by least-squares refits with a shrinking threshold.
struct LocalOpt {
    resamples: usize,
    max_inner_sample: usize,
    threshold_multiplier: f64,
    refit_steps: usize,
}

const LO: LocalOpt = LocalOpt {
    resamples: 10,
    max_inner_sample: 14,
    threshold_multiplier: 4.0,
    refit_steps: 4,
};

fn inliers_at(system: &ResidualSystem, theta: &[f64], threshold: f64) -> Vec<usize> {
    (0..system.num_groups())
        .filter(|&g| system.group_residual(g, theta).0 <= threshold + crate::model::INLIER_TOL)
        .collect()
}

fn local_optimize(
    system: &ResidualSystem,
    epsilon: f64,
    m: usize,
    start: &Best,
    rng: &mut Rng,
) -> Best {
    let mut best = Best {
        theta: start.theta.clone(),
        count: start.count,
    };
    let base = inliers_at(system, &start.theta, epsilon);
    let inner = (base.len() / 2).min(LO.max_inner_sample).max(m);
    for _ in 0..LO.resamples {
        let sampled: Vec<usize> = if base.len() > inner {
            sample(rng, base.len(), inner).iter().map(|i| base[i]).collect()
        } else {
            base.clone()
        };
        let Some(mut theta) = fit_groups(system, &sampled) else {
            continue;
        };
        for step in 0..LO.refit_steps {
            let frac = step as f64 / (LO.refit_steps - 1).max(1) as f64;
            let mult = LO.threshold_multiplier + (1.0 - LO.threshold_multiplier) * frac;
            let set = inliers_at(system, &theta, mult * epsilon);
            if set.len() < m {
                break;
            }
            match fit_groups(system, &set) {
                Some(t) => theta = t,
                None => break,
            }
        }
        let count = consensus_count(system, &theta, epsilon);
        if count > best.count {
            best = Best { theta, count };
        }
    }
    best
}

fn run(
    system: &ResidualSystem,
    epsilon: f64,
    cfg: &RansacConfig,
    method: u64,
    local: bool,
) -> Result<ConsensusResult> {
    cfg.validate()?;
    crate::convex::check_epsilon(epsilon)?;
    let started = Instant::now();
    let n = system.num_groups();
    let m = cfg.sample_size(system);
    if n < m {
        return Err(invalid(format!("need at least {m} points, got {n}")));
    }
    let mut rng = seeded(derive_seed(&[cfg.seed, method]));
    let mut best: Option<Best> = None;
    let mut needed = cfg.max_iterations;
    let mut drawn = 0;
    loop {
        let stop = match cfg.time_budget {
            Some(budget) => started.elapsed() >= budget && best.is_some(),
            None => drawn >= needed,
        };
        if stop || drawn >= cfg.max_iterations {
            break;
        }
        drawn += 1;
        let groups = sample(&mut rng, n, m).into_vec();
        let Some(theta) = fit_groups(system, &groups) else {
            continue;
        };
        let count = consensus_count(system, &theta, epsilon);
        if best.as_ref().is_none_or(|b| count > b.count) {
            let mut candidate = Best { theta, count };
            if local {
                candidate = local_optimize(system, epsilon, m, &candidate, &mut rng);
            }
            needed = ransac_iterations(
                cfg.confidence,
                candidate.count as f64 / n as f64,
                m,
                cfg.max_iterations,
            );
            best = Some(candidate);
        }
    }
    let best = best.ok_or_else(|| degenerate("every sample was degenerate"))?;
    let capped = cfg.time_budget.is_some() || needed >= cfg.max_iterations;
    let by = if drawn >= cfg.max_iterations && capped {
        Termination::IterationLimit
    } else {
        Termination::Tolerance
    };
    ConsensusResult::from_theta(system, best.theta, epsilon, started, by, drawn)
}

/// Vanilla RANSAC with the adaptive stopping rule.
pub fn ransac_fit(system: &ResidualSystem, epsilon: f64, cfg: &RansacConfig) -> Result<ConsensusResult> {
    run(system, epsilon, cfg, 1, false)
}

/// RANSAC with local optimization of every so-far-best hypothesis.
pub fn lo_ransac_fit(system: &ResidualSystem, epsilon: f64, cfg: &RansacConfig) -> Result<ConsensusResult> {
    run(system, epsilon, cfg, 2, true)
}

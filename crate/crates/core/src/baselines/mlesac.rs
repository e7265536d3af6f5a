//! Maximum-likelihood scoring of sampled hypotheses.
//!
//! Residuals are modelled as a mixture of a zero-mean Gaussian (inliers)
//! and a uniform density (outliers). Each hypothesis gets the mixing weight
//! that maximizes its likelihood, found by a few EM steps, and is scored by
//! the resulting negative log-likelihood.

use super::ransac::{fit_groups, RansacConfig};
use crate::error::{degenerate, invalid, Result};
use crate::model::{residuals, ResidualSystem};
use crate::result::{ConsensusResult, Termination};
use crate::rng::{derive_seed, seeded};
use rand::seq::index::sample;
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct MlesacConfig {
    pub iterations: usize,
    pub em_steps: usize,
    /// Inlier standard deviation. `None` means `ε / 2`.
    pub inlier_sigma: Option<f64>,
    /// Width of the uniform outlier density. `None` means twice the
    /// largest absolute offset, and at least `10 ε`.
    pub outlier_span: Option<f64>,
    pub min_sample_size: Option<usize>,
    pub seed: u64,
}

impl Default for MlesacConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            em_steps: 10,
            inlier_sigma: None,
            outlier_span: None,
            min_sample_size: None,
            seed: 0,
        }
    }
}

impl MlesacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(invalid("at least one hypothesis is required"));
        }
        let bad = |v: Option<f64>| v.is_some_and(|v| !(v > 0.0) || !v.is_finite());
        if bad(self.inlier_sigma) || bad(self.outlier_span) {
            return Err(invalid("mixture scales must be positive"));
        }
        Ok(())
    }
}

fn gaussian(r: f64, sigma: f64) -> f64 {
    (-0.5 * (r / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
}

/// EM estimate of the inlier fraction of a Gaussian/uniform mixture,
/// starting from one half.
pub fn estimate_mixing(residuals: &[f64], sigma: f64, span: f64, steps: usize) -> f64 {
    let outlier_density = 1.0 / span;
    let mut mix = 0.5;
    for _ in 0..steps {
        let total: f64 = residuals
            .iter()
            .map(|&r| {
                let inl = mix * gaussian(r, sigma);
                let out = (1.0 - mix) * outlier_density;
                if inl + out > 0.0 {
                    inl / (inl + out)
                } else {
                    0.0
                }
            })
            .sum();
        mix = total / residuals.len() as f64;
    }
    mix
}

fn negative_log_likelihood(residuals: &[f64], mix: f64, sigma: f64, span: f64) -> f64 {
    residuals
        .iter()
        .map(|&r| -(mix * gaussian(r, sigma) + (1.0 - mix) / span).ln())
        .sum()
}

pub fn mlesac_fit(system: &ResidualSystem, epsilon: f64, cfg: &MlesacConfig) -> Result<ConsensusResult> {
    cfg.validate()?;
    crate::convex::check_epsilon(epsilon)?;
    let started = Instant::now();
    let n = system.num_groups();
    let m = RansacConfig {
        min_sample_size: cfg.min_sample_size,
        ..RansacConfig::default()
    }
    .sample_size(system);
    if n < m {
        return Err(invalid(format!("need at least {m} points, got {n}")));
    }
    let max_offset = (0..system.num_rows())
        .map(|j| system.offset(j).abs())
        .fold(0.0, f64::max);
    let sigma = cfg.inlier_sigma.unwrap_or(epsilon / 2.0);
    let span = cfg.outlier_span.unwrap_or((2.0 * max_offset).max(10.0 * epsilon));
    if !(sigma > 0.0) || !(span > 0.0) {
        return Err(invalid("mixture scales are zero; set them explicitly when ε = 0"));
    }
    let mut rng = seeded(derive_seed(&[cfg.seed, 3]));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..cfg.iterations {
        let groups = sample(&mut rng, n, m).into_vec();
        let Some(theta) = fit_groups(system, &groups) else {
            continue;
        };
        let r = residuals(system, &theta)?;
        let mix = estimate_mixing(&r, sigma, span, cfg.em_steps);
        let nll = negative_log_likelihood(&r, mix, sigma, span);
        if best.as_ref().is_none_or(|(b, _)| nll < *b) {
            best = Some((nll, theta));
        }
    }
    let (_, theta) = best.ok_or_else(|| degenerate("every sample was degenerate"))?;
    ConsensusResult::from_theta(
        system,
        theta,
        epsilon,
        started,
        Termination::IterationLimit,
        cfg.iterations,
    )
}

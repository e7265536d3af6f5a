//! Single fit of one input file.

use crate::methods::{run_method, Method, MethodOptions};
use maxcon_core::model::io::{read_instance, read_matches};
use maxcon_core::model::{
    linearize_fundamental, linearize_homography, normalize_matches, params_to_matrix,
};
use maxcon_core::{ConsensusResult, Result};
use nalgebra::Matrix3;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitProblem {
    /// Instance file with its own threshold.
    File,
    /// Match file, fitted as a linearized homography.
    HomographyLinear,
    /// Match file, fitted as a linearized fundamental matrix.
    FundamentalLinear,
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub result: ConsensusResult,
    pub epsilon: f64,
    pub num_points: usize,
    /// Estimated matrix in pixel coordinates, for match inputs.
    pub pixel_model: Option<Matrix3<f64>>,
}

impl FitOutput {
    pub fn summary(&self, method: Method) -> String {
        let r = &self.result;
        let mut s = String::new();
        let _ = writeln!(s, "method      {method}");
        let _ = writeln!(s, "epsilon     {}", self.epsilon);
        let _ = writeln!(s, "consensus   {} of {}", r.count, self.num_points);
        let theta: Vec<String> = r.theta.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(s, "theta       [{}]", theta.join(", "));
        let _ = writeln!(s, "iterations  {} ({:?})", r.iterations, r.terminated_by);
        let _ = writeln!(s, "wall time   {:.4} s", r.wall_time_secs());
        if let Some(m) = &self.pixel_model {
            let _ = writeln!(s, "pixel model");
            for i in 0..3 {
                let _ = writeln!(
                    s,
                    "  {:>14.6e} {:>14.6e} {:>14.6e}",
                    m[(i, 0)],
                    m[(i, 1)],
                    m[(i, 2)]
                );
            }
        }
        s
    }

    /// One `0`/`1` per point.
    pub fn mask_text(&self) -> String {
        let mut s = String::with_capacity(2 * self.num_points);
        for inlier in self.result.inlier_mask(self.num_points) {
            s.push(if inlier { '1' } else { '0' });
            s.push('\n');
        }
        s
    }
}

/// Reads `input`, builds the residual system (normalizing and linearizing
/// match files) and runs `method`. `epsilon` overrides an instance file's
/// threshold and defaults to 0.1 for match files.
pub fn fit_command(
    input: &Path,
    problem: FitProblem,
    method: Method,
    epsilon: Option<f64>,
    options: &MethodOptions,
    seed: u64,
) -> Result<FitOutput> {
    match problem {
        FitProblem::File => {
            let inst = read_instance(input)?;
            let eps = epsilon.unwrap_or(inst.epsilon);
            let result = run_method(method, &inst.system, eps, options, seed)?;
            Ok(FitOutput {
                num_points: inst.system.num_groups(),
                result,
                epsilon: eps,
                pixel_model: None,
            })
        }
        FitProblem::HomographyLinear | FitProblem::FundamentalLinear => {
            let matches = read_matches(input)?;
            let norm = normalize_matches(&matches)?;
            let homography = problem == FitProblem::HomographyLinear;
            let system = if homography {
                linearize_homography(&norm.matches)?
            } else {
                linearize_fundamental(&norm.matches)?
            };
            let eps = epsilon.unwrap_or(crate::bench::MATCH_EPSILON);
            let result = run_method(method, &system, eps, options, seed)?;
            let m = params_to_matrix(&result.theta)?;
            let pixel = match (norm.t2.try_inverse(), homography) {
                (Some(t2_inv), true) => Some(t2_inv * m * norm.t1),
                (_, false) => Some(norm.t2.transpose() * m * norm.t1),
                (None, true) => None,
            };
            let pixel_model = pixel.map(|p| {
                let s = p[(2, 2)];
                if s.abs() > 1e-300 {
                    p / s
                } else {
                    p
                }
            });
            Ok(FitOutput {
                num_points: matches.len(),
                result,
                epsilon: eps,
                pixel_model,
            })
        }
    }
}

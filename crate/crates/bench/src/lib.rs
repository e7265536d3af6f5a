//! Fixed benchmark inputs shared by the criterion targets.

use maxcon_core::model::{linearize_homography, normalize_matches, synth_hyperplane, synth_matches, MatchKind};
use maxcon_core::{ProblemInstance, ResidualSystem};

/// Hyperplane instance with `d = 8`, `σ = 0.1`, `ε = 0.3`.
pub fn hyperplane(n: usize, outlier_frac: f64, seed: u64) -> ProblemInstance {
    let mut inst = synth_hyperplane(n, 8, 0.1, outlier_frac, 10.0, seed).expect("valid parameters");
    inst.epsilon = 0.3;
    inst
}

/// Normalized, linearized homography system from `n` synthetic matches.
pub fn homography(n: usize, outlier_frac: f64, seed: u64) -> ResidualSystem {
    let data = synth_matches(MatchKind::Homography, n, 1.0, outlier_frac, seed).expect("valid parameters");
    let norm = normalize_matches(&data.matches).expect("spread-out points");
    linearize_homography(&norm.matches).expect("enough matches")
}

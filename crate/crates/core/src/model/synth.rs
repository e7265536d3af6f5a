use super::{GroundTruth, PointMatch, ProblemInstance, ResidualSystem};
use crate::error::{degenerate, invalid, Result};
use crate::rng::seeded;
use nalgebra::{Matrix3, Point2, Rotation3, Vector3};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Image extent used by [`synth_matches`], in pixels.
pub const IMAGE_WIDTH: f64 = 640.0;
pub const IMAGE_HEIGHT: f64 = 480.0;

fn check_common(n: usize, outlier_frac: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("need at least one point"));
    }
    if !(0.0..=1.0).contains(&outlier_frac) {
        return Err(invalid("outlier fraction must lie in [0, 1]"));
    }
    Ok(())
}

fn outlier_mask(rng: &mut impl Rng, n: usize, outlier_frac: f64) -> Vec<bool> {
    let k = (outlier_frac * n as f64).floor() as usize;
    let mut inlier = vec![true; n];
    for i in index::sample(rng, n, k.min(n)).into_iter() {
        inlier[i] = false;
    }
    inlier
}

fn linear_model(
    n: usize,
    d: usize,
    intercept: bool,
    sigma_in: f64,
    outlier_frac: f64,
    outlier_range: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    check_common(n, outlier_frac)?;
    if d == 0 || n <= d {
        return Err(invalid(format!("need n > d >= 1, got n = {n}, d = {d}")));
    }
    if !(sigma_in > 0.0) || !(outlier_range > 0.0) {
        return Err(invalid("noise level and outlier range must be positive"));
    }
    let mut rng = seeded(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let noise = Normal::new(0.0, sigma_in).map_err(|e| invalid(e.to_string()))?;

    let mut theta: Vec<f64> = (0..d).map(|_| unit.sample(&mut rng)).collect();
    let len = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    theta.iter_mut().for_each(|v| *v /= len);

    let mask = outlier_mask(&mut rng, n, outlier_frac);
    let mut rows = Vec::with_capacity(n);
    for &is_inlier in &mask {
        let mut a: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if intercept {
            a[d - 1] = 1.0;
        }
        let clean: f64 = a.iter().zip(&theta).map(|(x, t)| x * t).sum();
        let mut b = clean + noise.sample(&mut rng);
        if !is_inlier {
            b += rng.gen_range(-outlier_range..=outlier_range);
        }
        rows.push((a, b));
    }
    let system = ResidualSystem::from_rows(d, rows)?;
    ProblemInstance::new(
        system,
        3.0 * sigma_in,
        Some(GroundTruth {
            theta,
            inlier_mask: mask,
        }),
    )
}

/// Points scattered around a random hyperplane through the origin.
///
/// The model is `b = a · θ` with `θ` uniform on the unit sphere of `R^d` and
/// `a` uniform in `[-1, 1]^d`. Inliers carry Gaussian noise with standard
/// deviation `sigma_in`; `⌊outlier_frac · n⌋` randomly chosen points get an
/// extra offset drawn uniformly from `[-outlier_range, outlier_range]`.
/// The instance threshold defaults to `3 · sigma_in`.
pub fn synth_hyperplane(
    n: usize,
    d: usize,
    sigma_in: f64,
    outlier_frac: f64,
    outlier_range: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    linear_model(n, d, false, sigma_in, outlier_frac, outlier_range, seed)
}

/// 2D line `y = θ0 x + θ1` with `x` uniform in `[-1, 1]`, otherwise generated
/// like [`synth_hyperplane`].
pub fn synth_line(
    n: usize,
    sigma_in: f64,
    outlier_frac: f64,
    outlier_range: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    linear_model(n, 2, true, sigma_in, outlier_frac, outlier_range, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    Homography,
    Fundamental,
}

impl MatchKind {
    pub fn minimal_sample(self) -> usize {
        match self {
            MatchKind::Homography => 4,
            MatchKind::Fundamental => 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticMatches {
    pub matches: Vec<PointMatch>,
    /// Pixel-space model: `q ~ H p` or `q^T F p = 0`, scaled so the (3,3)
    /// entry is one.
    pub model: Matrix3<f64>,
    pub inlier_mask: Vec<bool>,
}

fn project(v: &Vector3<f64>) -> Point2<f64> {
    Point2::new(v.x / v.z, v.y / v.z)
}

fn random_pixel(rng: &mut impl Rng) -> Point2<f64> {
    Point2::new(
        rng.gen_range(0.0..IMAGE_WIDTH),
        rng.gen_range(0.0..IMAGE_HEIGHT),
    )
}

/// Correspondences consistent with a random homography or two-view geometry
/// in a 640×480 image, with Gaussian pixel noise and uniformly placed
/// outliers.
pub fn synth_matches(
    kind: MatchKind,
    n: usize,
    noise: f64,
    outlier_frac: f64,
    seed: u64,
) -> Result<SyntheticMatches> {
    check_common(n, outlier_frac)?;
    if n < kind.minimal_sample() {
        return Err(invalid(format!(
            "need at least {} matches, got {n}",
            kind.minimal_sample()
        )));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(invalid("noise must be finite and non-negative"));
    }
    let mut rng = seeded(seed);
    let jitter = |rng: &mut crate::rng::Rng| {
        if noise > 0.0 {
            let d = Normal::new(0.0, noise).expect("positive sd");
            nalgebra::Vector2::new(d.sample(rng), d.sample(rng))
        } else {
            nalgebra::Vector2::zeros()
        }
    };
    let centre = Vector3::new(IMAGE_WIDTH / 2.0, IMAGE_HEIGHT / 2.0, 0.0);
    match kind {
        MatchKind::Homography => {
            let scale = rng.gen_range(0.8..1.2);
            let angle: f64 = rng.gen_range(-0.3..0.3);
            let shift = Vector3::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0), 0.0);
            let (p1, p2) = (rng.gen_range(-3e-4..3e-4), rng.gen_range(-3e-4..3e-4));
            let core = Matrix3::new(
                scale * angle.cos(),
                -scale * angle.sin(),
                0.0,
                scale * angle.sin(),
                scale * angle.cos(),
                0.0,
                p1,
                p2,
                1.0,
            );
            let to_centre = Matrix3::new(1.0, 0.0, -centre.x, 0.0, 1.0, -centre.y, 0.0, 0.0, 1.0);
            let back = Matrix3::new(
                1.0,
                0.0,
                centre.x + shift.x,
                0.0,
                1.0,
                centre.y + shift.y,
                0.0,
                0.0,
                1.0,
            );
            let mut h = back * core * to_centre;
            h /= h[(2, 2)];
            let mask = outlier_mask(&mut rng, n, outlier_frac);
            let mut matches = Vec::with_capacity(n);
            for &inl in &mask {
                let p = random_pixel(&mut rng);
                let q = if inl {
                    project(&(h * Vector3::new(p.x, p.y, 1.0))) + jitter(&mut rng)
                } else {
                    random_pixel(&mut rng)
                };
                matches.push(PointMatch { p, q });
            }
            Ok(SyntheticMatches {
                matches,
                model: h,
                inlier_mask: mask,
            })
        }
        MatchKind::Fundamental => {
            let f_px = 600.0;
            let k = Matrix3::new(f_px, 0.0, centre.x, 0.0, f_px, centre.y, 0.0, 0.0, 1.0);
            let axis = Vector3::new(
                rng.gen_range(-0.15..0.15),
                rng.gen_range(-0.15..0.15),
                rng.gen_range(-0.15..0.15),
            );
            let r = Rotation3::from_scaled_axis(axis).into_inner();
            let t = Vector3::new(
                rng.gen_range(0.5..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.2..0.2),
            );
            let k_inv = k
                .try_inverse()
                .ok_or_else(|| degenerate("calibration matrix is singular"))?;
            let mut f = k_inv.transpose() * t.cross_matrix() * r * k_inv;
            f /= f[(2, 2)];
            let mask = outlier_mask(&mut rng, n, outlier_frac);
            let mut matches = Vec::with_capacity(n);
            for &inl in &mask {
                let x = Vector3::new(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(5.0..9.0),
                );
                let p = project(&(k * x)) + jitter(&mut rng);
                let q = if inl {
                    project(&(k * (r * x + t))) + jitter(&mut rng)
                } else {
                    random_pixel(&mut rng)
                };
                matches.push(PointMatch { p, q });
            }
            Ok(SyntheticMatches {
                matches,
                model: f,
                inlier_mask: mask,
            })
        }
    }
}

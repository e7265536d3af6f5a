//! Comparison estimators and the exact enumeration oracle.

mod exact;
mod iterative;
mod mlesac;
mod ransac;

pub use exact::{exact_maxcon, enumeration_size, DEFAULT_ENUMERATION_LIMIT};
pub use iterative::{iterative_l1_fit, iterative_linf_fit};
pub use mlesac::{estimate_mixing, mlesac_fit, MlesacConfig};
pub use ransac::{lo_ransac_fit, ransac_fit, ransac_iterations, RansacConfig};

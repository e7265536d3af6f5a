//! Uniform entry point over all estimators.

use clap::ValueEnum;
use maxcon_core::baselines::{
    exact_maxcon, iterative_l1_fit, iterative_linf_fit, lo_ransac_fit, mlesac_fit, ransac_fit,
    MlesacConfig, RansacConfig, DEFAULT_ENUMERATION_LIMIT,
};
use maxcon_core::reweight::{irlp_fit, irqp_fit, IRConfig, InitMode};
use maxcon_core::{ConsensusResult, ResidualSystem, Result};
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Method {
    Ransac,
    LoRansac,
    Mlesac,
    L1,
    Linf,
    Irlp,
    Irqp,
    Exact,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ransac => "ransac",
            Method::LoRansac => "lo-ransac",
            Method::Mlesac => "mlesac",
            Method::L1 => "l1",
            Method::Linf => "linf",
            Method::Irlp => "irlp",
            Method::Irqp => "irqp",
            Method::Exact => "exact",
        }
    }

    /// Stable id mixed into per-method seeds.
    fn id(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Method as ValueEnum>::from_str(s, true)
    }
}

/// Starting point of the reweighted methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Init {
    Ones,
    Linf,
    Ransac,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOptions {
    pub gamma: f64,
    pub max_iters: usize,
    pub zeta: f64,
    pub init: Init,
    /// Run RANSAC for this long instead of using its stopping rule.
    pub time_budget: Option<Duration>,
    pub exact_limit: u64,
}

impl Default for MethodOptions {
    fn default() -> Self {
        Self {
            gamma: IRConfig::DEFAULT_GAMMA,
            max_iters: IRConfig::DEFAULT_MAX_ITERS,
            zeta: IRConfig::DEFAULT_ZETA,
            init: Init::Ones,
            time_budget: None,
            exact_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

pub fn run_method(
    method: Method,
    system: &ResidualSystem,
    epsilon: f64,
    opts: &MethodOptions,
    seed: u64,
) -> Result<ConsensusResult> {
    let seed = maxcon_core::rng::derive_seed(&[seed, method.id()]);
    let ransac = RansacConfig {
        seed,
        time_budget: opts.time_budget,
        max_iterations: if opts.time_budget.is_some() {
            usize::MAX
        } else {
            RansacConfig::default().max_iterations
        },
        ..RansacConfig::default()
    };
    let ir = || IRConfig {
        gamma: opts.gamma,
        max_iters: opts.max_iters,
        zeta: opts.zeta,
        init: match opts.init {
            Init::Ones => InitMode::Ones,
            Init::Linf => InitMode::Linf,
            Init::Ransac => InitMode::Ransac { seed },
        },
        ..IRConfig::new(epsilon)
    };
    match method {
        Method::Ransac => ransac_fit(system, epsilon, &ransac),
        Method::LoRansac => lo_ransac_fit(
            system,
            epsilon,
            &RansacConfig {
                time_budget: None,
                max_iterations: RansacConfig::default().max_iterations,
                ..ransac
            },
        ),
        Method::Mlesac => mlesac_fit(
            system,
            epsilon,
            &MlesacConfig {
                seed,
                ..MlesacConfig::default()
            },
        ),
        Method::L1 => iterative_l1_fit(system, epsilon),
        Method::Linf => iterative_linf_fit(system, epsilon),
        Method::Irlp => irlp_fit(system, &ir(), None),
        Method::Irqp => irqp_fit(system, &ir(), None),
        Method::Exact => exact_maxcon(system, epsilon, opts.exact_limit),
    }
}

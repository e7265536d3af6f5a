//! Seeded method comparisons over a sweep of outlier fractions.

use crate::methods::{run_method, Method, MethodOptions};
use crate::report::{BenchReport, ReportRow};
use maxcon_core::baselines::exact_maxcon;
use maxcon_core::model::io::read_instance;
use maxcon_core::model::{
    linearize_fundamental, linearize_homography, normalize_matches, synth_hyperplane,
    synth_matches, MatchKind,
};
use maxcon_core::rng::derive_seed;
use maxcon_core::{Error, ProblemInstance, ResidualSystem, Result};
use rayon::prelude::*;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;
use std::time::Instant;

pub const DEFAULT_TRIALS: usize = 20;
pub const PAPER_TRIALS: usize = 100;
/// Threshold for the linearized two-view problems, in normalized units.
pub const MATCH_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum BenchProblem {
    Hyperplane,
    HomographyLinear,
    FundamentalLinear,
    /// A fixed instance file; only the method seeds vary between trials.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub problem: BenchProblem,
    pub fractions: Vec<f64>,
    pub n: usize,
    pub d: usize,
    /// Defaults to `3σ` for hyperplanes and [`MATCH_EPSILON`] for matches.
    pub epsilon: Option<f64>,
    pub sigma: f64,
    /// Pixel noise of the match generators.
    pub noise: f64,
    pub outlier_range: f64,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    pub options: MethodOptions,
    /// Run the exact solver when its enumeration guard admits the instance.
    pub oracle: bool,
    pub record_timing: bool,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            problem: BenchProblem::Hyperplane,
            fractions: vec![0.2, 0.4, 0.6],
            n: 250,
            d: 8,
            epsilon: Some(0.3),
            sigma: 0.1,
            noise: 1.0,
            outlier_range: 10.0,
            methods: vec![Method::Irlp, Method::Ransac],
            trials: DEFAULT_TRIALS,
            seed: 0,
            options: MethodOptions::default(),
            oracle: true,
            record_timing: true,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        if self.fractions.is_empty() && !matches!(self.problem, BenchProblem::File(_)) {
            return bad("no outlier fractions given");
        }
        if self.fractions.iter().any(|f| !(0.0..1.0).contains(f)) {
            return bad("outlier fractions must lie in [0, 1)");
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) || !e.is_finite() {
                return bad("epsilon must be finite and non-negative");
            }
        }
        if let BenchProblem::File(p) = &self.problem {
            if !p.is_file() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("{} not found", p.display()),
                )));
            }
        }
        Ok(())
    }

    fn cell_labels(&self) -> Vec<String> {
        match &self.problem {
            BenchProblem::File(p) => vec![format!("file={}", p.display())],
            BenchProblem::Hyperplane => self
                .fractions
                .iter()
                .map(|f| {
                    let eps = self.epsilon.unwrap_or(3.0 * self.sigma);
                    format!("frac={f:.2}/d={}/eps={}", self.d, short(eps))
                })
                .collect(),
            _ => self
                .fractions
                .iter()
                .map(|f| format!("frac={f:.2}/eps={}", short(self.epsilon.unwrap_or(MATCH_EPSILON))))
                .collect(),
        }
    }

    fn instance(&self, cell: usize, seed: u64) -> Result<(ResidualSystem, f64)> {
        let frac = self.fractions.get(cell).copied().unwrap_or(0.0);
        let matches = |kind| -> Result<(ResidualSystem, f64)> {
            let data = synth_matches(kind, self.n, self.noise, frac, seed)?;
            let norm = normalize_matches(&data.matches)?;
            let sys = match kind {
                MatchKind::Homography => linearize_homography(&norm.matches)?,
                MatchKind::Fundamental => linearize_fundamental(&norm.matches)?,
            };
            Ok((sys, self.epsilon.unwrap_or(MATCH_EPSILON)))
        };
        match &self.problem {
            BenchProblem::Hyperplane => {
                let ProblemInstance {
                    system, epsilon, ..
                } = synth_hyperplane(self.n, self.d, self.sigma, frac, self.outlier_range, seed)?;
                Ok((system, self.epsilon.unwrap_or(epsilon)))
            }
            BenchProblem::HomographyLinear => matches(MatchKind::Homography),
            BenchProblem::FundamentalLinear => matches(MatchKind::Fundamental),
            BenchProblem::File(p) => {
                let inst = read_instance(p)?;
                Ok((inst.system, self.epsilon.unwrap_or(inst.epsilon)))
            }
        }
    }
}

/// Drops float noise such as `3 · 0.1 = 0.30000000000000004` from labels.
fn short(x: f64) -> f64 {
    format!("{x:.9}").parse().unwrap_or(x)
}

/// Bit-exact fingerprint of a residual system.
pub fn system_hash(system: &ResidualSystem) -> u64 {
    let mut h = DefaultHasher::new();
    system.dim().hash(&mut h);
    for j in 0..system.num_rows() {
        system.group_of(j).hash(&mut h);
        system.offset(j).to_bits().hash(&mut h);
        for a in system.row(j) {
            a.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

struct Trial {
    hash: u64,
    n: usize,
    counts: Vec<usize>,
    seconds: Vec<f64>,
    oracle: Option<usize>,
}

fn run_trial(spec: &BenchSpec, cell: usize, trial: usize) -> Result<Trial> {
    let seed = derive_seed(&[spec.seed, cell as u64, trial as u64]);
    let (system, eps) = spec.instance(cell, seed)?;
    let hash = system_hash(&system);
    let mut counts = Vec::with_capacity(spec.methods.len());
    let mut seconds = Vec::with_capacity(spec.methods.len());
    for &m in &spec.methods {
        let t0 = Instant::now();
        let r = run_method(m, &system, eps, &spec.options, seed)?;
        seconds.push(t0.elapsed().as_secs_f64());
        counts.push(r.count);
    }
    let oracle = if spec.oracle {
        match exact_maxcon(&system, eps, spec.options.exact_limit) {
            Ok(r) => Some(r.count),
            Err(Error::LimitExceeded { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    debug_assert_eq!(hash, system_hash(&system));
    Ok(Trial {
        hash,
        n: system.num_groups(),
        counts,
        seconds,
        oracle,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

/// Runs every method on every trial instance of every cell. Trials run in
/// parallel; results are collected in trial order, so the report does not
/// depend on scheduling.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchReport> {
    spec.validate()?;
    let labels = spec.cell_labels();
    let mut report = BenchReport::default();
    for (cell, label) in labels.iter().enumerate() {
        let trials: Vec<Trial> = (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, cell, t))
            .collect::<Result<_>>()?;
        for (t, tr) in trials.iter().enumerate() {
            report.instance_hashes.push((label.clone(), t, tr.hash));
        }
        let oracle: Option<Vec<usize>> = trials.iter().map(|t| t.oracle).collect();
        for (k, m) in spec.methods.iter().enumerate() {
            let counts: Vec<f64> = trials.iter().map(|t| t.counts[k] as f64).collect();
            let (mean_count, std_count) = mean_std(&counts);
            let mean_time_s = spec
                .record_timing
                .then(|| mean_std(&trials.iter().map(|t| t.seconds[k]).collect::<Vec<_>>()).0);
            let oracle_opt_frac = oracle.as_ref().map(|best| {
                let hits = trials
                    .iter()
                    .zip(best)
                    .filter(|(t, &b)| t.counts[k] == b)
                    .count();
                hits as f64 / trials.len() as f64
            });
            report.rows.push(ReportRow {
                method: m.name().to_owned(),
                cell: label.clone(),
                n: trials[0].n,
                mean_count,
                std_count,
                mean_time_s,
                oracle_opt_frac,
            });
        }
    }
    Ok(report)
}

use clap::{Args, Parser, Subcommand, ValueEnum};
use maxcon_cli::bench::{BenchProblem, BenchSpec, DEFAULT_TRIALS, PAPER_TRIALS};
use maxcon_cli::config::expand_config;
use maxcon_cli::report::ReportFormat;
use maxcon_cli::{exit_code, fit_command, run_bench, FitProblem, Init, Method, MethodOptions};
use maxcon_core::model::io::{write_instance, write_matches};
use maxcon_core::model::{synth_hyperplane, synth_line, synth_matches, MatchKind};
use maxcon_core::{Error, Result};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(name = "maxcon", version, about = "Maximum consensus robust fitting")]
#[command(args_override_self = true)]
struct Cli {
    /// `key = value` file with default flag values (flags win).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance or match file.
    Generate(GenerateArgs),
    /// Fit one instance or match file.
    Fit(FitArgs),
    /// Compare methods over seeded synthetic trials.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenProblem {
    Hyperplane,
    Line,
    Homography,
    Fundamental,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "hyperplane")]
    problem: GenProblem,
    #[arg(long, default_value_t = 250)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    d: usize,
    /// Inlier noise of linear models.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Pixel noise of match files.
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.5)]
    outlier_frac: f64,
    #[arg(long, default_value_t = 10.0)]
    outlier_range: f64,
    /// Threshold stored in instance files (default 3·sigma).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the planted inlier mask.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, default_value_t = maxcon_core::IRConfig::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = maxcon_core::IRConfig::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = maxcon_core::IRConfig::DEFAULT_ZETA)]
    zeta: f64,
    /// Start of the reweighted methods (default ones, linf for fundamental).
    #[arg(long, value_enum)]
    init: Option<Init>,
    /// Let RANSAC sample for this many seconds.
    #[arg(long, value_name = "SECONDS")]
    time_budget: Option<f64>,
    /// Largest candidate count the exact solver accepts.
    #[arg(long, default_value_t = maxcon_core::baselines::DEFAULT_ENUMERATION_LIMIT)]
    exact_limit: u64,
}

impl MethodArgs {
    fn options(&self, fundamental: bool) -> Result<MethodOptions> {
        let time_budget = match self.time_budget {
            None => None,
            Some(s) if s > 0.0 && s.is_finite() => Some(Duration::from_secs_f64(s)),
            Some(s) => return Err(Error::InvalidArgument(format!("bad time budget {s}"))),
        };
        let default_init = if fundamental { Init::Linf } else { Init::Ones };
        Ok(MethodOptions {
            gamma: self.gamma,
            max_iters: self.max_iters,
            zeta: self.zeta,
            init: self.init.unwrap_or(default_init),
            time_budget,
            exact_limit: self.exact_limit,
        })
    }
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "file")]
    problem: FitProblem,
    #[arg(long, value_enum, default_value = "irlp")]
    method: Method,
    /// Inlier threshold (instance files carry their own).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    method_args: MethodArgs,
    /// Write one 0/1 line per point.
    #[arg(long)]
    inliers_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchProblemArg {
    Hyperplane,
    HomographyLinear,
    FundamentalLinear,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Table,
    Svg,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "hyperplane")]
    problem: BenchProblemArg,
    /// Instance file for `--problem file`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6])]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 250)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    d: usize,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 10.0)]
    outlier_range: f64,
    #[arg(long = "method", alias = "methods", value_enum, value_delimiter = ',', default_values = ["irlp", "ransac"])]
    methods: Vec<Method>,
    #[arg(long)]
    trials: Option<usize>,
    /// 100 trials per cell.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    method_args: MethodArgs,
    /// Output directory for bench.csv, bench.txt and bench.svg.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["csv", "table", "svg"])]
    formats: Vec<FormatArg>,
    /// Leave the time column empty so reports compare byte for byte.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    no_oracle: bool,
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(&a.out)?);
    let mask = match a.problem {
        GenProblem::Hyperplane | GenProblem::Line => {
            let inst = match a.problem {
                GenProblem::Line => synth_line(a.n, a.sigma, a.outlier_frac, a.outlier_range, a.seed)?,
                _ => synth_hyperplane(a.n, a.d, a.sigma, a.outlier_frac, a.outlier_range, a.seed)?,
            };
            write_instance(&mut out, &inst.system, a.epsilon.unwrap_or(inst.epsilon))?;
            inst.ground_truth.map(|g| g.inlier_mask).unwrap_or_default()
        }
        GenProblem::Homography | GenProblem::Fundamental => {
            let kind = match a.problem {
                GenProblem::Homography => MatchKind::Homography,
                _ => MatchKind::Fundamental,
            };
            let data = synth_matches(kind, a.n, a.noise, a.outlier_frac, a.seed)?;
            write_matches(&mut out, &data.matches)?;
            data.inlier_mask
        }
    };
    out.flush()?;
    if let Some(path) = a.truth_out {
        let text: String = mask.iter().map(|&m| if m { "1\n" } else { "0\n" }).collect();
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let opts = a
        .method_args
        .options(a.problem == FitProblem::FundamentalLinear)?;
    let out = fit_command(&a.input, a.problem, a.method, a.epsilon, &opts, a.seed)?;
    print!("{}", out.summary(a.method));
    if let Some(path) = a.inliers_out {
        std::fs::write(path, out.mask_text())?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let problem = match a.problem {
        BenchProblemArg::Hyperplane => BenchProblem::Hyperplane,
        BenchProblemArg::HomographyLinear => BenchProblem::HomographyLinear,
        BenchProblemArg::FundamentalLinear => BenchProblem::FundamentalLinear,
        BenchProblemArg::File => BenchProblem::File(
            a.input
                .clone()
                .ok_or_else(|| Error::InvalidArgument("--problem file needs --input".into()))?,
        ),
    };
    let fundamental = matches!(problem, BenchProblem::FundamentalLinear);
    let trials = a.trials.unwrap_or(if a.paper_scale {
        PAPER_TRIALS
    } else {
        DEFAULT_TRIALS
    });
    let spec = BenchSpec {
        problem,
        fractions: a.fractions,
        n: a.n,
        d: a.d,
        epsilon: a.epsilon,
        sigma: a.sigma,
        noise: a.noise,
        outlier_range: a.outlier_range,
        methods: a.methods,
        trials,
        seed: a.seed,
        options: a.method_args.options(fundamental)?,
        oracle: !a.no_oracle,
        record_timing: !a.no_timing,
    };
    let report = run_bench(&spec)?;
    let formats: Vec<ReportFormat> = a
        .formats
        .iter()
        .map(|f| match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Svg => ReportFormat::Svg,
        })
        .collect();
    report.emit(&a.out, "bench", &formats)?;
    let log: String = report
        .instance_hashes
        .iter()
        .map(|(cell, t, h)| format!("{cell} {t} {h:016x}\n"))
        .collect();
    std::fs::write(a.out.join("instances.log"), log)?;
    print!("{}", report.to_table());
    Ok(())
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let cli = Cli::parse_from(argv);
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Bench(a) => bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

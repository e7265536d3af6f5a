//! Library side of the `maxcon` command: synthetic benchmarks, single fits
//! and report files.

pub mod bench;
pub mod config;
pub mod fit;
pub mod methods;
pub mod report;

pub use bench::{run_bench, BenchProblem, BenchSpec};
pub use fit::{fit_command, FitOutput, FitProblem};
pub use methods::{run_method, Init, Method, MethodOptions};
pub use report::{BenchReport, ReportFormat, ReportRow};

use maxcon_core::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::IterationLimit(_) | Error::LimitExceeded { .. } => EXIT_SOLVER,
        Error::InvalidArgument(_) | Error::DegenerateData(_) | Error::Parse { .. } | Error::Io(_) => {
            EXIT_DATA
        }
    }
}

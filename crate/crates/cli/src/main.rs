use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use polyreach::runner::{run, Algorithm, RunConfig};
use polyreach::{Splitting, Tolerances};

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Apnm,
    Epnm,
    Papnm,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplittingArg {
    /// Cut along one coordinate hyperplane at a time (exact)
    PerCoordinate,
    /// Cross the image's edges with every hyperplane at once
    SinglePass,
}

/// Reachability-based safety verification of ReLU networks.
#[derive(Parser)]
#[command(name = "polyreach", version)]
struct Cli {
    /// Network in .nnet format
    #[arg(long)]
    network: PathBuf,
    /// Property file with [input] and [output] sections
    #[arg(long)]
    property: PathBuf,
    #[arg(long, value_enum, default_value = "epnm")]
    algorithm: AlgorithmArg,
    /// Parts merged per set (papnm only)
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    merge_size: u64,
    /// Worker threads [default: available parallelism]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Wall-clock budget in seconds
    #[arg(long, default_value_t = 86_400.0)]
    timeout: f64,
    /// Where to write the JSON report
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = Tolerances::default().lp)]
    lp_tol: f64,
    #[arg(long, default_value_t = Tolerances::default().sign)]
    sign_eps: f64,
    #[arg(long, default_value_t = Tolerances::default().dedup)]
    dedup_tol: f64,
    #[arg(long, value_enum, default_value = "per-coordinate")]
    splitting: SplittingArg,
}

fn main() -> ExitCode {
    // Usage errors share the error exit code rather than clap's 2, which
    // would read as "unknown".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    if !(cli.timeout.is_finite() && cli.timeout > 0.0) {
        eprintln!("error: cli: --timeout must be a positive number of seconds");
        return ExitCode::from(4);
    }
    let workers = cli.workers.map(|w| w as usize).unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    let cfg = RunConfig {
        network_path: cli.network,
        property_path: cli.property,
        algorithm: match cli.algorithm {
            AlgorithmArg::Apnm => Algorithm::Apnm,
            AlgorithmArg::Epnm => Algorithm::Epnm,
            AlgorithmArg::Papnm => Algorithm::Papnm,
        },
        merge_size: cli.merge_size as usize,
        workers,
        timeout: Duration::from_secs_f64(cli.timeout),
        tol: Tolerances {
            lp: cli.lp_tol,
            sign: cli.sign_eps,
            dedup: cli.dedup_tol,
        },
        splitting: match cli.splitting {
            SplittingArg::PerCoordinate => Splitting::PerCoordinate,
            SplittingArg::SinglePass => Splitting::SinglePass,
        },
        report_path: cli.report,
    };
    let report = run(&cfg);
    print!("{}", report.summary());
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(report.exit_code() as u8)
}

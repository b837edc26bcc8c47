//! `percolab`: run experiments from a TOML configuration and emit reports.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 conditioning failed or every
//! sample rejected, 4 capacity exceeded, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use percolab::experiment::{self, emit_report, ExperimentConfig, ExperimentKind, Formats, Outcome, RunRecord};
use percolab::Error;

#[derive(Parser)]
#[command(name = "percolab", version, about = "Anchored isoperimetry of supercritical bond percolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one configuration and write it next to its summary.
    Sample(RunArgs),
    /// Estimate theta_p.
    Theta(RunArgs),
    /// Estimate the flow constant on a direction mesh.
    Beta(RunArgs),
    /// Build the Wulff crystal and its isoperimetric constant.
    Wulff(RunArgs),
    /// Estimate n phi_n over a schedule of scales.
    Phi(RunArgs),
    /// Symmetric-difference distances of minimizers to Wulff translates.
    Shape(RunArgs),
    /// n phi_n against the Wulff constant, with the trend statistic.
    Converge(RunArgs),
    /// Re-emit reports from JSON run records.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args)]
struct Common {
    /// Output directory; defaults to the configuration's, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Formats to write; repeat or separate with commas (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON run records.
    #[arg(required = true)]
    records: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn formats(f: &[Format]) -> Formats {
    if f.is_empty() {
        return Formats::default();
    }
    Formats {
        csv: f.contains(&Format::Csv),
        json: f.contains(&Format::Json),
        svg: f.contains(&Format::Svg),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::Parameter(_) => 2,
        Error::Conditioning(_) => 3,
        Error::Capacity(_) => 4,
        _ => 1,
    }
}

fn threads(n: Option<usize>) -> Result<(), Error> {
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn emit(records: &[RunRecord], out: &Path, f: Formats) -> Result<(), Error> {
    for path in emit_report(records, out, f)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn summarize(rec: &RunRecord) {
    use experiment::RunResults as R;
    match &rec.results {
        R::Sample(s) => println!(
            "open fraction {:.4}, origin cluster {} (reaches boundary: {})",
            s.open_fraction, s.origin_cluster_size, s.origin_reaches_boundary
        ),
        R::Theta(t) => println!("theta_hat = {:.4} +- {:.4}", t.theta_hat, t.ci_radius),
        R::Beta(t) => println!("{} directions, max CI radius {:.4}", t.rows.len(), t.max_ci_radius()),
        R::Wulff(c) => println!(
            "theta = {:.4}, I(W) / (theta vol W) = {:.6}",
            c.theta.value, c.constant.ratio
        ),
        R::Phi(s) | R::Convergence(s) => {
            for row in &s.summary {
                println!(
                    "n = {:>4}  mean n phi_n = {:.4} +- {:.4}  ({} accepted)",
                    row.n, row.mean_scaled, row.ci_radius, row.accepted
                );
            }
            if let (Some(c), Some(t)) = (&s.calibration, &s.trend) {
                println!(
                    "constant {:.6}; gap nonincreasing in {} of {} steps",
                    c.constant.ratio, t.nonincreasing, t.steps
                );
            }
        }
        R::Shape(s) => {
            for row in &s.summary {
                println!(
                    "n = {:>4}  median distance {:.4}  ({} accepted)",
                    row.n, row.median_distance, row.accepted
                );
            }
            println!("median nonincreasing in {} of {} steps", s.trend.nonincreasing, s.trend.steps);
        }
    }
}

fn run_command(kind: ExperimentKind, args: &RunArgs) -> Result<u8, Error> {
    threads(args.common.threads)?;
    let mut config = ExperimentConfig::load(&args.config)?;
    if config.kind != kind {
        return Err(Error::Config(format!(
            "configuration is for `{}`, not `{}`",
            config.kind.as_str(),
            kind.as_str()
        )));
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let out = args
        .common
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let record = experiment::run(&config)?;
    summarize(&record);
    emit(std::slice::from_ref(&record), &out, formats(&args.common.format))?;
    if kind == ExperimentKind::Sample {
        let (_, bonds) = experiment::run_sample(&config)?;
        let path = out.join(format!("{}.bonds", record.stem()));
        bonds.write_to(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
        println!("wrote {}", path.display());
    }
    if record.outcome == Outcome::NoValidSamples {
        eprintln!("no valid samples: every replicate exhausted its rejection attempts");
        return Ok(3);
    }
    Ok(0)
}

fn report_command(args: &ReportArgs) -> Result<u8, Error> {
    let records = args
        .records
        .iter()
        .map(|p| RunRecord::from_json(&std::fs::read_to_string(p)?))
        .collect::<Result<Vec<_>, Error>>()?;
    let out = args.common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    emit(&records, &out, formats(&args.common.format))?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample(a) => run_command(ExperimentKind::Sample, a),
        Command::Theta(a) => run_command(ExperimentKind::Theta, a),
        Command::Beta(a) => run_command(ExperimentKind::Beta, a),
        Command::Wulff(a) => run_command(ExperimentKind::Wulff, a),
        Command::Phi(a) => run_command(ExperimentKind::Phi, a),
        Command::Shape(a) => run_command(ExperimentKind::Shape, a),
        Command::Converge(a) => run_command(ExperimentKind::Convergence, a),
        Command::Report(a) => report_command(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

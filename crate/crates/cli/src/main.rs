//! `noisyopt`: run optimizer benchmarks on noisy ensemble VQE costs and
//! analyze the resulting energy clouds.

mod analyze;
mod rank;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noisyopt_core::harness::{
    family_catalog, read_records, run_experiment, summarize, RecordWriter,
};
use noisyopt_core::{Error, ExperimentConfig, RunRecord};

#[derive(Parser)]
#[command(
    name = "noisyopt",
    version,
    about = "Optimizer benchmarks for noisy state-averaged VQE"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (family, optimizer, seed) combination of a config.
    Run(RunArgs),
    /// Normality, homogeneity and permutation tests per optimizer.
    Analyze(analyze::AnalyzeArgs),
    /// Distances to reference energies and rank-based comparisons.
    Rank(rank::RankArgs),
    /// Mean and standard deviation of final energy and evaluations per cell.
    Summarize {
        #[arg(long)]
        runs: PathBuf,
    },
    /// List the built-in noise families.
    Catalog {
        /// Print full estimator specs as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
}

/// A failed command and the exit code it maps to.
pub(crate) struct Failure {
    code: u8,
    message: String,
}

pub(crate) const EXIT_CONFIG: u8 = 2;
pub(crate) const EXIT_DATA: u8 = 3;

impl Failure {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub(crate) fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub(crate) fn output(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: format!("cannot write {}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Usage(_) => Failure::config(e.to_string()),
            _ => Failure::data(e.to_string()),
        }
    }
}

pub(crate) type CmdResult = Result<(), Failure>;

pub(crate) fn load_runs(path: &Path) -> Result<Vec<RunRecord>, Failure> {
    let file = File::open(path)
        .map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))?;
    let records =
        read_records(file).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    if records.is_empty() {
        return Err(Failure::data(format!("{}: no records", path.display())));
    }
    Ok(records)
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
pub(crate) fn emit(text: &str) -> CmdResult {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(Failure::output(Path::new("<stdout>"), e))
        }
        _ => Ok(()),
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> CmdResult {
    std::fs::write(path, contents).map_err(|e| Failure::output(path, e))
}

pub(crate) fn write_json(path: &Path, value: &impl serde::Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::output(path, e))?;
    write_file(path, &(text + "\n"))
}

fn run(args: &RunArgs) -> CmdResult {
    let cfg = ExperimentConfig::load(&args.config)?;
    let file = File::create(&args.out).map_err(|e| Failure::output(&args.out, e))?;
    let mut writer = RecordWriter::new(BufWriter::new(file));
    log::info!("{} runs on {} thread(s)", cfg.n_runs(), args.jobs);
    let records = run_experiment(&cfg, usize::from(args.jobs), |r| writer.write(r))?;
    let failed = records.iter().filter(|r| !r.e_sa.is_finite()).count();
    eprintln!("wrote {} records to {}", records.len(), args.out.display());
    if failed > 0 {
        eprintln!("{failed} run(s) ended without a finite energy");
    }
    Ok(())
}

fn summarize_cmd(runs: &Path) -> CmdResult {
    let records = load_runs(runs)?;
    let mut out =
        String::from("family,optimizer,n,n_failed,mu_final,sigma_final,mu_evals,sigma_evals\n");
    for c in summarize(&records) {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.2},{:.2}",
            c.family,
            c.optimizer,
            c.n,
            c.n_failed,
            c.mu_final,
            c.sigma_final,
            c.mu_evals,
            c.sigma_evals
        );
    }
    emit(&out)
}

fn catalog(json: bool) -> CmdResult {
    let families = family_catalog();
    if json {
        emit(&(serde_json::to_string_pretty(&families).expect("catalog serializes") + "\n"))
    } else {
        emit(
            &families
                .iter()
                .map(|f| format!("{}\n", f.name))
                .collect::<String>(),
        )
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Analyze(args) => analyze::analyze(args),
        Command::Rank(args) => rank::rank(args),
        Command::Summarize { runs } => summarize_cmd(runs),
        Command::Catalog { json } => catalog(*json),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

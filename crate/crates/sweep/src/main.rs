use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xychain_sweep::{load_config, run_cut, run_sweep, ModelKind, RunOptions, SweepConfig, SweepError};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "xychain", version, about = "Steady-state sweeps of boundary-driven XY chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Static chain over a (gamma, h) grid.
    StaticSweep(RunArgs),
    /// Kicked chain on the covariance route over an (a, tau) grid.
    KickedSweep(RunArgs),
    /// Kicked chain on the full master equation over an (a, tau) grid.
    KickedFullSweep(RunArgs),
    /// Band stationary-point counts over an (a, tau) grid.
    BandMap(RunArgs),
    /// One-dimensional cut repeated for each chain size in `[cut] n_list`.
    Cut(RunArgs),
    /// Check a configuration and print its normalised form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `output`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Recorded in the metadata only; all evaluations are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

fn fail(code: u8, err: &SweepError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<SweepConfig, ExitCode> {
    load_config(path).map_err(|e| match e {
        SweepError::Config(_) | SweepError::Io { .. } => fail(EXIT_CONFIG, &e),
        other => fail(EXIT_RUNTIME, &other),
    })
}

fn execute(args: &RunArgs, expected: Option<ModelKind>) -> ExitCode {
    let config = match load(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(model) = expected {
        if config.model != model {
            eprintln!(
                "error: this subcommand runs model \"{model}\", the configuration has \"{}\"",
                config.model
            );
            return ExitCode::from(EXIT_CONFIG);
        }
    } else if config.cut.is_none() {
        eprintln!("error: `cut` needs a [cut] table with n_list");
        return ExitCode::from(EXIT_CONFIG);
    }
    for note in &config.notes {
        eprintln!("note: {note}");
    }
    let opts = RunOptions {
        workers: args.workers,
        seed: args.seed,
    };
    let result = match (&config.cut, expected) {
        (Some(list), None) => run_cut(&config, list, opts),
        _ => run_sweep(&config, opts),
    };
    let dataset = match result {
        Ok(d) => d,
        Err(e) => return fail(EXIT_RUNTIME, &e),
    };
    let dir = args
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let (csv, json) = match dataset.write(&dir, &config.name) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_RUNTIME, &e),
    };
    let masked = dataset.masked_count();
    println!(
        "{} records ({} masked) -> {} , {}",
        dataset.records.len(),
        masked,
        csv.display(),
        json.display()
    );
    if masked > 0 {
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::StaticSweep(a) => execute(a, Some(ModelKind::Static)),
        Command::KickedSweep(a) => execute(a, Some(ModelKind::KickedCov)),
        Command::KickedFullSweep(a) => execute(a, Some(ModelKind::KickedFull)),
        Command::BandMap(a) => execute(a, Some(ModelKind::Bands)),
        Command::Cut(a) => execute(a, None),
        Command::Validate { config } => match load(config) {
            Ok(c) => {
                for note in &c.notes {
                    eprintln!("note: {note}");
                }
                println!("{}", serde_json::to_string_pretty(&c.echo()).expect("json value"));
                println!("digest: {}", c.digest());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}

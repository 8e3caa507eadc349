use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grf_core::GrfError;
use grf_lab::{run, Kind, LabError, Report, Result, Scenario};

#[derive(Parser)]
#[command(name = "grflab", version, about = "Run flow and transport experiments on periodic meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config.
    Run(RunArgs),
    /// Run every verification check on the config's scenario.
    Verify(RunArgs),
    /// Print the summary of a finished run.
    Report {
        /// Artifact directory written by `run` or `verify`.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    config: PathBuf,
    /// Replaces `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted `key=value` override, applied in order.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Artifact directory.
    #[arg(long, default_value = "grflab-out")]
    out: PathBuf,
}

fn load(args: &RunArgs, force: Option<Kind>) -> Result<Scenario> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| LabError::Config(format!("{}: {e}", args.config.display())))?;
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("experiment.seed={seed}"));
    }
    if let Some(kind) = force {
        overrides.push(format!("experiment.kind=\"{kind}\""));
    }
    let sc = Scenario::parse(&text, &overrides)?;
    sc.validate()?;
    Ok(sc)
}

fn execute(args: &RunArgs, force: Option<Kind>) -> Result<i32> {
    let sc = load(args, force)?;
    let go = || -> Result<i32> {
        let outcome = run(&sc)?;
        outcome.write(&args.out)?;
        print!("{}", outcome.report.summary());
        println!("artifacts in {}", args.out.display());
        Ok(outcome.report.exit_code())
    };
    match args.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| LabError::Config(format!("threads: {e}")))?;
            pool.install(go)
        }
        None => go(),
    }
}

fn show(dir: &Path) -> Result<i32> {
    let report = Report::load(dir)?;
    print!("{}", report.summary());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => execute(args, None),
        Command::Verify(args) => execute(args, Some(Kind::VerifyAll)),
        Command::Report { dir } => show(dir),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("grflab: {e}");
            let code = match e {
                LabError::Core(GrfError::NotConverged { .. }) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

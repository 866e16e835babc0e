//! `phi`: predictive hypothesis identification from the command line.
//!
//! Exit codes: 0 on success, 2 for usage and parse errors, 3 for evaluation
//! failures and failed verification checks.

mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};

use commands::{Command, Failure};
use report::Format;

#[derive(Debug, Parser)]
#[command(name = "phi", version, about = "Predictive hypothesis identification")]
struct Cli {
    #[command(flatten)]
    output: OutputArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    json: bool,
    /// Write the report to a file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for parallel sweeps; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    if let Some(n) = cli.output.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Eval(e.to_string()))?;
    }
    let format = if cli.output.json { Format::Json } else { cli.output.format };
    let outcome = commands::run(&cli.command)?;
    let text = outcome.report.render(format).map_err(Failure::Eval)?;
    report::emit(&text, cli.output.output.as_deref())
        .map_err(|e| Failure::Eval(format!("cannot write the report: {e}")))?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

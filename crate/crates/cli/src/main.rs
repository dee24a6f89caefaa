use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use limeaudit_cli::{cmd_report, cmd_run, cmd_verify, CliError, ReportFormat};

#[derive(Parser)]
#[command(name = "limeaudit", version, about = "Audit the stability of LIME explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Render audit reports or sweeps as CSV tables or SVG charts.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum)]
        format: ReportFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a config and print the resolved plan without running it.
    Verify { config: PathBuf },
}

fn fail(e: &CliError) -> ExitCode {
    let kind = match e {
        CliError::Config(_) => "config",
        CliError::Data(_) => "data",
        CliError::Internal(_) => "internal",
    };
    let msg = serde_json::json!({
        "status": "error",
        "kind": kind,
        "exit_code": e.exit_code(),
        "message": e.to_string(),
    });
    eprintln!("{msg}");
    ExitCode::from(e.exit_code() as u8)
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(lines: impl IntoIterator<Item = String>) {
    let mut out = std::io::stdout().lock();
    for line in lines {
        if writeln!(out, "{line}").is_err() {
            return;
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LIMEAUDIT_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config).map(|s| {
            emit(s.manifest.outputs.iter().map(|p| s.output_dir.join(p).display().to_string()));
        }),
        Command::Report { files, format, out } => cmd_report(&files, format, &out).map(|written| {
            emit(written.iter().map(|f| f.display().to_string()));
        }),
        Command::Verify { config } => cmd_verify(&config).map(|plan| {
            emit([serde_json::to_string_pretty(&plan).expect("plan serializes")]);
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

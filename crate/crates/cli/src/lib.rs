//! Command-line front end: `synth`, `train`, `predict`, `evaluate`, `sweep`.
//!
//! Failures print one `error[TAG]: message` line on stderr and exit with
//! 2 (input), 3 (configuration) or 4 (numeric).

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => commands::synth(a, stdout),
        Command::Train(a) => commands::train(a, stdout),
        Command::Predict(a) => commands::predict(a, stdout),
        Command::Evaluate(a) => commands::evaluate(a, stdout),
        Command::Sweep(a) => commands::sweep(a, stdout),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default();
            let err = CliError::config(first.trim_start_matches("error: ").to_string());
            let _ = writeln!(stderr, "{err}");
            return err.exit_code();
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "{err}");
            err.exit_code()
        }
    }
}

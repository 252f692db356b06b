use std::process::ExitCode;

use bclab_cli::config::{read_config_file, Cli};
use bclab_cli::error::{CliError, ErrorRecord, EXIT_VERIFY};
use bclab_cli::output::to_json;
use clap::Parser;

/// Caps the rayon pool from `BCLAB_THREADS`.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("BCLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("BCLAB_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| {
        let (command, flags) = cli.command.split();
        let options = match &cli.config {
            Some(path) => flags.overlay(read_config_file(path)?),
            None => flags,
        };
        bclab_cli::run(command, &options)
    });
    match result {
        Ok(outcome) => {
            print!("{}", to_json(&outcome));
            if outcome.code == EXIT_VERIFY {
                let record = ErrorRecord {
                    kind: "verification".into(),
                    code: EXIT_VERIFY,
                    message: "one or more verification suites failed".into(),
                };
                eprint!("{}", to_json(&record));
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprint!("{}", to_json(&ErrorRecord::from(&e)));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

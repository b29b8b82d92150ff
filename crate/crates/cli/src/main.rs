use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

mod commands;

use commands::{Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints usage/help itself and decides between stdout and stderr.
            let _ = e.print();
            // Bad values are reported without the usage line clap shows for other errors.
            if matches!(e.kind(), ErrorKind::InvalidValue | ErrorKind::ValueValidation) {
                eprintln!("\n{}", usage_for_args());
            }
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Usage line of the subcommand named on the command line, or of the tool.
fn usage_for_args() -> clap::builder::StyledStr {
    let mut cmd = Cli::command();
    cmd.build();
    let sub = std::env::args()
        .skip(1)
        .find(|a| cmd.find_subcommand(a).is_some());
    match sub {
        Some(name) => cmd.find_subcommand_mut(&name).expect("known subcommand").render_usage(),
        None => cmd.render_usage(),
    }
}

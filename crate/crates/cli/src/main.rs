//! `surprise`: generate synthetic scenes and compute surprise time series.
//!
//! Exit status: 0 on success, 2 for usage or input errors, 3 when the data
//! does not allow any surprise value to be computed.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use surprise_core::PipelineError;

use args::{Cli, Command};

const EXIT_INPUT: u8 = 2;
const EXIT_INSUFFICIENT: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    let insufficient = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<PipelineError>(),
            Some(PipelineError::EmptySeries { .. } | PipelineError::NoPredictions { .. })
        )
    });
    if insufficient {
        EXIT_INSUFFICIENT
    } else {
        EXIT_INPUT
    }
}

/// Clap's report for bad values omits the usage line; add the one for the
/// subcommand that was being parsed.
fn usage_error(err: clap::Error) -> ExitCode {
    let code = err.exit_code();
    let _ = err.print();
    let show_usage = !matches!(
        err.kind(),
        ErrorKind::DisplayHelp
            | ErrorKind::DisplayVersion
            | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
    );
    if show_usage && !err.to_string().contains("Usage:") {
        let mut cmd = Cli::command();
        cmd.build();
        let sub = std::env::args().nth(1);
        let usage = match sub.as_deref().and_then(|s| cmd.find_subcommand_mut(s)) {
            Some(sub) => sub.render_usage(),
            None => cmd.render_usage(),
        };
        eprintln!("\n{usage}");
    }
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_INPUT))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => return usage_error(err),
    };
    let result = match cli.command {
        Command::Scenario(a) => commands::scenario(a),
        Command::Surprise(a) => commands::surprise(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

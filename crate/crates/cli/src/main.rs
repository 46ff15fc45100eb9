mod args;
mod commands;

use std::io::{ErrorKind, Write};
use std::process::ExitCode;

use causal_gravity::ephemeris::{builtin_table, load_table};
use clap::Parser;

use args::{Cli, Command};
use commands::Session;

fn run(cli: Cli) -> anyhow::Result<String> {
    let table = match &cli.ephemeris {
        Some(path) => load_table(path)?,
        None => builtin_table(),
    };
    let session = Session {
        table,
        out: cli.out,
        json: cli.json,
        deg: cli.deg,
    };
    match &cli.command {
        Command::Orbit { planet, model } => commands::orbit(&session, *planet, *model),
        Command::Integrate { planet, periods, tolerances } => {
            commands::integrate(&session, *planet, *periods, tolerances)
        }
        Command::Pair { scenario } => commands::pair(&session, scenario),
        Command::Advance { observation, phi1, phi3 } => commands::advance(&session, observation, *phi1, *phi3),
        Command::Sweep { observation, phi1_steps, phi3_steps } => {
            commands::sweep(&session, observation, *phi1_steps, *phi3_steps)
        }
        Command::Constants => commands::constants(&session),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(text) => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) if e.kind() == ErrorKind::BrokenPipe => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

mod args;
mod commands;
mod prompt;
mod source;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(scgnet::Error),
    Io(std::io::Error),
    Unreasonable,
    CheckFailed,
}

impl From<scgnet::Error> for CliError {
    fn from(e: scgnet::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Data(_) | CliError::Io(_) => 1,
            CliError::Unreasonable => 2,
            CliError::CheckFailed => 3,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // exit code 2 is reserved for runs without a reasonable solution
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Classify(a) => commands::classify(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Check(a) => commands::check_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Data(err) => eprintln!("error: {err}"),
                CliError::Io(err) if err.kind() == std::io::ErrorKind::BrokenPipe => {}
                CliError::Io(err) => eprintln!("error: {err}"),
                CliError::Unreasonable => eprintln!("no reasonable solution found"),
                CliError::CheckFailed => eprintln!("derivative check failed"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

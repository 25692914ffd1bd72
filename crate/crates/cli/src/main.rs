mod args;
mod commands;
mod config;

use clap::error::ErrorKind;
use clap::Parser;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    NotCertifiable(String),
    VerificationFailed(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::NotCertifiable(_) => 2,
            CliError::VerificationFailed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::NotCertifiable(m) => write!(f, "not certifiable: {m}"),
            CliError::VerificationFailed(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<gdcert::Error> for CliError {
    fn from(e: gdcert::Error) -> Self {
        match e {
            gdcert::Error::Infeasible(_) => CliError::NotCertifiable(e.to_string()),
            gdcert::Error::EigenvalueOnCircle { .. } => CliError::VerificationFailed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        args::Command::Certify(a) => commands::certify(a),
        args::Command::Sweep(a) => commands::sweep(a),
        args::Command::Simulate(a) => commands::simulate(a),
        args::Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

//! Command-line front end: configuration loading, the `spectrum`, `energy`,
//! `decay` and `optimize` commands, and self-describing CSV output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use config::{FileConfig, Overrides, RunConfig};
use output::OutputSet;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Energy,
    Decay,
    Optimize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Energy => "energy",
            Command::Decay => "decay",
            Command::Optimize => "optimize",
        }
    }
}

/// Worker cap from `PLATE_SPECTRA_THREADS`, if set.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("PLATE_SPECTRA_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}

/// Resolves the configuration and runs `cmd`, removing its outputs on failure.
pub fn run(
    cmd: Command,
    config: Option<PathBuf>,
    over: &Overrides,
    dump_operators: bool,
) -> Result<(Vec<String>, Vec<PathBuf>), CliError> {
    let file = match &config {
        Some(p) => config::load(p)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig::resolve(file, over)?;
    let mut out = OutputSet::new(&cfg.out_dir, cmd.name(), &cfg.description)?;
    let result = match cmd {
        Command::Spectrum => commands::spectrum(&cfg, dump_operators, &mut out),
        Command::Energy => commands::energy(&cfg, &mut out),
        Command::Decay => commands::decay(&cfg, &mut out),
        Command::Optimize => commands::optimize(&cfg, &mut out),
    };
    match result {
        Ok(lines) => Ok((lines, out.files().to_vec())),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_cap_values() {
        assert_eq!(thread_cap(None).unwrap(), None);
        assert_eq!(thread_cap(Some("4")).unwrap(), Some(4));
        assert_eq!(thread_cap(Some("0")).unwrap_err().exit_code(), 2);
        assert!(thread_cap(Some("many")).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::Numerical(String::new()).exit_code(), 3);
        assert_eq!(CliError::Io(String::new()).exit_code(), 3);
    }
}

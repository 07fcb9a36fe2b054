use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plate_spectra_cli::config::{parse_grid, MethodName, Overrides};
use plate_spectra_cli::{run, thread_cap, CliError, Command};

/// Spectra, energy decay and damping placement for the interior-damped hinged plate.
#[derive(Parser)]
#[command(name = "plate-spectra", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues of the damped generator and the spectral abscissa.
    Spectrum(Common),
    /// Energy traces of modal initial states with reference curves.
    Energy(Common),
    /// Decay of the abscissa eigenvector (and listed modes) against 2 mu.
    Decay(Common),
    /// Rank candidate damping regions by spectral abscissa.
    Optimize(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid override, e.g. 31x31.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Force the dense eigensolver.
    #[arg(long, conflicts_with = "arnoldi")]
    dense: bool,
    /// Force the shift-invert sweep.
    #[arg(long)]
    arnoldi: bool,
    /// Also write the assembled operators (spectrum only).
    #[arg(long)]
    dump_operators: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Energy(a) => (Command::Energy, a),
        Cmd::Decay(a) => (Command::Decay, a),
        Cmd::Optimize(a) => (Command::Optimize, a),
    };
    match execute(cmd, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plate-spectra {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command, args: Common) -> Result<(), CliError> {
    let threads = std::env::var("PLATE_SPECTRA_THREADS").ok();
    if let Some(n) = thread_cap(threads.as_deref())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let over = Overrides {
        grid: args.grid,
        method: match (args.dense, args.arnoldi) {
            (true, _) => Some(MethodName::Dense),
            (_, true) => Some(MethodName::Arnoldi),
            _ => None,
        },
        out: args.out,
    };
    let (lines, files) = run(cmd, args.config, &over, args.dump_operators)?;
    let mut stdout = std::io::stdout().lock();
    for l in lines {
        let _ = writeln!(stdout, "{l}");
    }
    for f in files {
        let _ = writeln!(stdout, "wrote {}", f.display());
    }
    Ok(())
}

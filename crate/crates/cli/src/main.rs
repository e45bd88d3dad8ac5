//! `subrayleigh` command-line tool: bounds, exponents, Monte Carlo studies,
//! moment estimation and reconstruction, written as CSV or JSON lines with
//! a provenance header.

mod commands;
mod opts;
mod table;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use commands::{DiscriminateArgs, MomentsArgs, ReconstructArgs};
use opts::Opts;
use table::{render, Table};

/// Failures of the command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] subrayleigh::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(subrayleigh::Error::Numerical(_)) => 3,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Lib(e) => match e {
                subrayleigh::Error::Domain(_) => "domain",
                subrayleigh::Error::Numerical(_) => "numerical",
                subrayleigh::Error::Unsupported(_) => "unsupported",
                subrayleigh::Error::Parse(_) => "parse",
                subrayleigh::Error::Io(_) => "io",
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "subrayleigh", version, about = "Resolution limits and receivers for sub-diffraction imaging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Classical and quantum Cramér-Rao bounds over a separation grid.
    Bounds(#[command(flatten)] Opts),
    /// Monte Carlo MSE of the separation estimator.
    MseSim(#[command(flatten)] Opts),
    /// Chernoff exponents for one source against two.
    Chernoff(#[command(flatten)] Opts),
    /// Simulated one-versus-two discrimination error.
    Discriminate {
        #[command(flatten)]
        opts: Opts,
        #[command(flatten)]
        args: DiscriminateArgs,
    },
    /// Fisher information of a partially coherent pair.
    Coherence(#[command(flatten)] Opts),
    /// Simulated Hermite-Gaussian moment estimates of a scene.
    Moments {
        #[command(flatten)]
        opts: Opts,
        #[command(flatten)]
        args: MomentsArgs,
    },
    /// Image reconstruction from a moment table.
    Reconstruct {
        #[command(flatten)]
        opts: Opts,
        #[command(flatten)]
        args: ReconstructArgs,
    },
    /// Two-stage adaptive separation estimation.
    Adaptive(#[command(flatten)] Opts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bounds(_) => "bounds",
            Command::MseSim(_) => "mse-sim",
            Command::Chernoff(_) => "chernoff",
            Command::Discriminate { .. } => "discriminate",
            Command::Coherence(_) => "coherence",
            Command::Moments { .. } => "moments",
            Command::Reconstruct { .. } => "reconstruct",
            Command::Adaptive(_) => "adaptive",
        }
    }

    fn opts(&self) -> &Opts {
        match self {
            Command::Bounds(o) | Command::MseSim(o) | Command::Chernoff(o) | Command::Coherence(o) | Command::Adaptive(o) => o,
            Command::Discriminate { opts, .. } | Command::Moments { opts, .. } | Command::Reconstruct { opts, .. } => opts,
        }
    }

    /// SHA-256 over the canonical JSON of the options and every input file.
    fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).unwrap_or_default());
        h.update(self.opts().input_bytes());
        if let Command::Reconstruct { args, .. } = self {
            if let Ok(b) = std::fs::read(&args.moments) {
                h.update(b);
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn header(cmd: &Command) -> Vec<(String, String)> {
    vec![
        ("tool".into(), format!("subrayleigh {}", env!("CARGO_PKG_VERSION"))),
        ("command".into(), cmd.name().into()),
        ("config_sha256".into(), cmd.config_hash()),
        ("seed".into(), cmd.opts().seed.to_string()),
    ]
}

fn write_output(path: Option<&std::path::Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::Lib(e.into()))
        }
    }
}

/// Graymap with the header as comment lines after the magic number.
fn pgm_with_header(pgm: &[u8], header: &[(String, String)]) -> Vec<u8> {
    let split = pgm.iter().position(|&b| b == b'\n').map_or(pgm.len(), |i| i + 1);
    let mut out = pgm[..split].to_vec();
    for (k, v) in header {
        out.extend(format!("# {k}: {v}\n").bytes());
    }
    out.extend(&pgm[split..]);
    out
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SUBRAYLEIGH_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("SUBRAYLEIGH_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cmd = &cli.command;
    let opts = cmd.opts();
    let hdr = header(cmd);
    let mut pgm = None;
    let table: Table = match cmd {
        Command::Bounds(o) => commands::bounds(o)?,
        Command::MseSim(o) => commands::mse_sim(o)?,
        Command::Chernoff(o) => commands::chernoff(o)?,
        Command::Discriminate { opts, args } => commands::discriminate(opts, args)?,
        Command::Coherence(o) => commands::coherence(o)?,
        Command::Moments { opts, args } => commands::moments(opts, args)?,
        Command::Reconstruct { opts, args } => {
            let (t, p) = commands::reconstruct_cmd(opts, args)?;
            pgm = p.map(|bytes| (args.pgm.clone(), bytes));
            t
        }
        Command::Adaptive(o) => commands::adaptive(o)?,
    };
    if let Some((Some(path), bytes)) = pgm {
        let mut h = hdr.clone();
        h.extend(table.notes.iter().cloned());
        write_output(Some(&path), &pgm_with_header(&bytes, &h))?;
    }
    write_output(opts.out.as_deref(), render(&table, &hdr, opts.format).as_bytes())
}

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let rec = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{rec}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report("usage", e.to_string().trim(), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.kind(), &e.to_string(), e.exit_code()),
    }
}

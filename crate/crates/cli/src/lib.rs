//! Command-line front end for `pomalg`.
//!
//! Every subcommand reads JSON inputs, runs one library operation and writes
//! a single JSON document. Exit codes: 0 success, 1 validation failure,
//! 2 usage or format error, 3 numeric error.

pub mod commands;
pub mod format;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pomalg::{PomError, Tolerance};
use serde_json::Value;
use thiserror::Error;

use format::FormatError;

#[derive(Debug, Parser)]
#[command(name = "pomalg", version, about = "Algebra of generalised quantum observables")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Positivity slack for eigenvalues.
    #[arg(long, global = true, value_name = "EPS")]
    pub tol_pos: Option<f64>,
    /// Equality slack for identities.
    #[arg(long, global = true, value_name = "EPS")]
    pub tol_eq: Option<f64>,
    /// Relative spectral cutoff for supports and pseudo-inverses.
    #[arg(long, global = true, value_name = "EPS")]
    pub tol_rank: Option<f64>,
    /// Distance under which two rank-1 elements count as the same element.
    #[arg(long, global = true, value_name = "EPS")]
    pub tol_match: Option<f64>,
    /// Seed for randomised commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run manifest with tolerance overrides and a seed.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StateArg {
    /// `vacuum`, `fock:N`, `coherent:RE,IM` or `file:PATH` (a bare path also works).
    #[arg(long)]
    pub state: String,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check positivity and completeness of a POM.
    Validate {
        #[arg(long)]
        pom: PathBuf,
    },
    /// Merge proportional elements.
    Reduce {
        #[arg(long)]
        pom: PathBuf,
    },
    /// Rewrite a POM with rank-1 elements.
    Maximalize {
        #[arg(long)]
        pom: PathBuf,
    },
    /// Expectation of a function of the outcome.
    Expect {
        #[arg(long)]
        pom: PathBuf,
        #[command(flatten)]
        state: StateArg,
        /// `a`, `a^K`, `abs`, `cos` or `sin`.
        #[arg(long, default_value = "a")]
        f: String,
    },
    /// Outcome variance.
    Variance {
        #[arg(long)]
        pom: PathBuf,
        #[command(flatten)]
        state: StateArg,
    },
    /// Draw outcomes from the measurement statistics.
    Sample {
        #[arg(long)]
        pom: PathBuf,
        #[command(flatten)]
        state: StateArg,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Include the raw draws in the output.
        #[arg(long)]
        raw: bool,
    },
    /// Statistical deviation of a POM from a Hermitian operator in a state.
    Deviation {
        #[arg(long)]
        pom: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[command(flatten)]
        state: StateArg,
    },
    /// Hilbert-Schmidt distance between a POM and a Hermitian operator.
    Distance {
        #[arg(long)]
        pom: PathBuf,
        #[arg(long)]
        x: PathBuf,
    },
    /// Distance from a POM to the nearest Hermitian operator.
    Mindist {
        #[arg(long)]
        pom: PathBuf,
    },
    /// Combine a POM with a Hermitian operator: slots `a` and `x`.
    CombineHx {
        #[arg(long)]
        pom: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        g: String,
        #[arg(long)]
        state: Option<String>,
    },
    /// Combine two POMs: slots `a` and `b`.
    CombinePp {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        g: String,
        #[arg(long)]
        state: Option<String>,
    },
    /// Check the generalised uncertainty relation for two POMs.
    Uncertainty {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        state: StateArg,
    },
    /// Discretised canonical phase POM.
    PhaseCanonical {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        bins: usize,
    },
    /// Number-phase uncertainty bound.
    PhaseBound {
        #[command(flatten)]
        state: StateArg,
        /// Truncation (required for generated states).
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        bins: usize,
    },
    /// Circular deviation between canonical and heterodyne phase.
    PhaseDelta {
        #[command(flatten)]
        state: StateArg,
        /// Truncation; coherent states pick one automatically when omitted.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Expectation of an expression in `a`, `b` and Hermitian operators `x1..xn`.
    Chain {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Hermitian operator file, bound to `x1`, `x2`, ... in order.
        #[arg(long)]
        x: Vec<PathBuf>,
        #[arg(long)]
        g: String,
        #[command(flatten)]
        state: StateArg,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{file}: {err}")]
    Format { file: String, err: FormatError },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Usage(_) | CliError::Format { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<PomError> for CliError {
    fn from(e: PomError) -> Self {
        let msg = e.to_string();
        match e {
            PomError::Syntax { .. } | PomError::UnboundSlot(_) | PomError::Shape { .. } | PomError::Alias { .. } => {
                CliError::Usage(msg)
            }
            PomError::Invalid(_)
            | PomError::Positivity { .. }
            | PomError::Redundancy { .. }
            | PomError::Hermiticity { .. }
            | PomError::Match { .. } => CliError::Validation(msg),
            PomError::Numerics(_) | PomError::RouteMismatch { .. } | PomError::NotAGram { .. } | PomError::Domain { .. } => {
                CliError::Numeric(msg)
            }
        }
    }
}

/// Result of a successful invocation: the document and its exit code
/// (`validate` reports failures with code 1 but still emits its report).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub document: Value,
    pub code: i32,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub tol: Tolerance,
    pub seed: u64,
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        file: path.display().to_string(),
        err: FormatError { pointer: "/".into(), message: format!("malformed JSON: {e}") },
    })
}

fn context(g: &GlobalOpts) -> Result<Context, CliError> {
    let (mut tol, mut seed) = (Tolerance::default(), 0);
    if let Some(path) = &g.manifest {
        let m = format::parse_manifest(&read_json(path)?)
            .map_err(|err| CliError::Format { file: path.display().to_string(), err })?;
        tol = m.tolerance;
        seed = m.seed.unwrap_or(seed);
    }
    for (flag, target) in [
        (g.tol_pos, &mut tol.eps_pos),
        (g.tol_eq, &mut tol.eps_eq),
        (g.tol_rank, &mut tol.eps_rank),
        (g.tol_match, &mut tol.eps_match),
    ] {
        if let Some(v) = flag {
            *target = v;
        }
    }
    tol.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Context { tol, seed: g.seed.unwrap_or(seed) })
}

/// Runs a parsed invocation without touching standard output.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let ctx = context(&cli.global)?;
    commands::dispatch(&cli.command, &ctx)
}

/// Parses `argv`, runs the command, writes the document and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli).and_then(|o| write_document(&o.document, cli.global.out.as_deref()).map(|_| o.code)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pomalg: {e}");
            e.exit_code()
        }
    }
}

fn write_document(doc: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}"))),
    }
}

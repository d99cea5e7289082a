//! Command-line front end: graph listing, tensor decomposition, closed-form
//! coefficient generation, and the closed-form-vs-oracle verification run.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 tensor not invariant,
//! 4 dissociated (unbound) parameters, 5 non-convergent extrapolation.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use snbasis::harmonic::{derive_params, ModelError, ModelParams};
use snbasis::invariants::{decompose, nonzero_count, InvariantError};
use snbasis::io::{read_tensor, write_table, IoError};
use snbasis::oracle::{Ladder, OracleError};
use snbasis::report::build_report;
use snbasis::{enumerate_graphs, first_order_coefficients, Signature};

#[derive(Parser)]
#[command(name = "snbasis", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List canonical graphs of a block signature with nonzero counts.
    Graphs {
        /// Block signature, e.g. "ggr" (g = angular pair slot, r = radial).
        #[arg(long)]
        sig: String,
        /// Particle count.
        #[arg(long)]
        n: u32,
    },
    /// Decompose a tensor file into the graph basis.
    Decompose {
        /// Input tensor in SNTENSOR v1 format.
        #[arg(long)]
        input: PathBuf,
        /// Orbit-constancy tolerance (absolute below magnitude 1, relative above).
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the closed-form wave-function coefficient tables.
    Coeffs {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare closed-form coefficients against the numerical oracle.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Per-row tolerance on the fractional difference.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Extrapolation ladder "D0,ratio,steps"; default 1e4*N,4,6.
        #[arg(long)]
        ladder: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Particle count.
    #[arg(long)]
    n: u32,
    /// Trap frequency.
    #[arg(long, default_value_t = 1.0)]
    omega_t: f64,
    /// Pair frequency squared (may be negative).
    #[arg(long, conflicts_with = "lambda")]
    omega_p2: Option<f64>,
    /// Frequency ratio lambda = omega_int/omega_t (alternative to --omega-p2).
    #[arg(long)]
    lambda: Option<f64>,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams, ModelError> {
        match (self.omega_p2, self.lambda) {
            (Some(op2), None) => derive_params(self.n, self.omega_t, op2),
            (None, Some(lam)) => ModelParams::from_lambda(self.n, lam),
            (None, None) => derive_params(self.n, self.omega_t, 0.0),
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

enum CmdError {
    Usage(String),
    NotInvariant(String),
    Dissociated(String),
    NonConvergent(String),
    Other(String),
}

impl CmdError {
    fn exit_code(&self) -> u8 {
        match self {
            CmdError::Usage(_) => 2,
            CmdError::NotInvariant(_) => 3,
            CmdError::Dissociated(_) => 4,
            CmdError::NonConvergent(_) => 5,
            CmdError::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Usage(m)
            | CmdError::NotInvariant(m)
            | CmdError::Dissociated(m)
            | CmdError::NonConvergent(m)
            | CmdError::Other(m) => m,
        }
    }
}

impl From<ModelError> for CmdError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Dissociated { .. } => CmdError::Dissociated(e.to_string()),
            ModelError::InvalidInput(_) => CmdError::Usage(e.to_string()),
        }
    }
}

impl From<OracleError> for CmdError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::NonConvergent { .. } => CmdError::NonConvergent(e.to_string()),
            OracleError::Invariant(inner) => inner.into(),
            OracleError::OutsideDomain(_) => CmdError::Other(e.to_string()),
        }
    }
}

impl From<InvariantError> for CmdError {
    fn from(e: InvariantError) -> Self {
        match e {
            InvariantError::NotInvariant { .. } => CmdError::NotInvariant(e.to_string()),
            other => CmdError::Usage(other.to_string()),
        }
    }
}

impl From<IoError> for CmdError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Invariant(inner) => inner.into(),
            other => CmdError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Other(e.to_string())
    }
}

fn out_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CmdError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<bool, CmdError> {
    match cli.command {
        Command::Graphs { sig, n } => {
            let sig: Signature = sig
                .parse()
                .map_err(|e| CmdError::Usage(format!("{e}")))?;
            let graphs =
                enumerate_graphs(&sig, n).map_err(|e| CmdError::Usage(e.to_string()))?;
            let mut w = std::io::stdout().lock();
            for g in graphs {
                let count = nonzero_count(&g, n, &sig);
                writeln!(w, "{g} {count}")?;
            }
            Ok(true)
        }
        Command::Decompose { input, tol, out } => {
            let mut reader = BufReader::new(
                File::open(&input).map_err(|e| CmdError::Usage(format!("{}: {e}", input.display())))?,
            );
            let tensor = read_tensor(&mut reader)?;
            let table = decompose(&tensor, tol)?;
            let mut w = out_writer(&out)?;
            write_table(&table, &mut w).map_err(CmdError::from)?;
            Ok(true)
        }
        Command::Coeffs { model, out } => {
            let params = model.params()?;
            let coeffs = first_order_coefficients(&params);
            let mut w = out_writer(&out)?;
            for rank in 1..=3usize {
                for (g, v) in coeffs.rank_table(rank) {
                    writeln!(w, "{g} {v}")?;
                }
            }
            Ok(true)
        }
        Command::Verify {
            model,
            tol,
            ladder,
            format,
            out,
        } => {
            let params = model.params()?;
            let ladder = match ladder {
                Some(spec) => Ladder::parse(&spec).map_err(CmdError::Usage)?,
                None => Ladder::default_for(params.n_particles),
            };
            let report = build_report(&params, tol, &ladder)?;
            let mut w = out_writer(&out)?;
            match format {
                Format::Csv => report.write_csv(&mut w)?,
                Format::Table => report.write_table(&mut w)?,
            }
            Ok(report.overall_pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

//! Command-line front end.
//!
//! Every subcommand reads a market instance (from `--instance PATH` or
//! `--inline JSON`), delegates to the library, and writes a JSON report, or a
//! CSV for sweeps, to `--out PATH` or stdout. Exit codes: 0 success, 2 invalid
//! input, 3 when a required equilibrium or allocation does not exist.

pub mod sweep;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::benchmark::{monopoly_optimum_with, planner_optimum_with};
use crate::equilibrium::{
    enumerate_equilibria, verify_equilibrium_with, EquilibriumRecord, RecordPattern, Verification, VerifyOptions,
};
use crate::error::{Error, Result};
use crate::extensions::network::{network_outputs_with, neumann_check, NEUMANN_TERMS};
use crate::extensions::ownership::{
    common_kappa, first_best_random_trials, ownership_equilibrium_with, ownership_welfare_slope,
};
use crate::linalg::Matrix;
use crate::spectral::{ranking_condition, SpectralInstance};
use crate::welfare::{compare_cosines, compare_diff_vs_sigma, compare_mono_vs_conc, compare_mono_vs_diff};
use crate::MarketInstance;
use sweep::Grid;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "HEDONIC_EQ_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_ABSENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hedonic-eq",
    version,
    about = "Equilibrium engine for hedonic-linear markets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Instance JSON file.
    #[arg(long, global = true, conflicts_with = "inline")]
    pub instance: Option<PathBuf>,
    /// Instance JSON given on the command line.
    #[arg(long, global = true)]
    pub inline: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Sweep grid `lo:hi:steps`.
    #[arg(long, global = true)]
    pub grid: Option<Grid>,
    /// Seed for sampling oracles.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Acceptance tolerance for equilibrium verification.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Use the reflected branch when constructing profiles.
    #[arg(long, global = true)]
    pub mirror: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Comparison {
    MonoDiff,
    DiffSigma,
    MonoConc,
    Cosines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig4,
    Fig6,
    Fig8,
    Table1,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Social planner's optimum.
    Planner {
        #[command(flatten)]
        common: Common,
    },
    /// Monopolist's optimum.
    Monopoly {
        #[command(flatten)]
        common: Common,
    },
    /// Every Cournot-Nash equilibrium.
    Equilibria {
        #[command(flatten)]
        common: Common,
        /// Attach a sampled deviation check to every record.
        #[arg(long)]
        verify: bool,
        /// Deviation samples per firm.
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// Welfare rankings between structures and equilibria.
    Welfare {
        #[command(flatten)]
        common: Common,
        /// A single comparison; all applicable ones when absent.
        #[arg(long, value_enum)]
        compare: Option<Comparison>,
        /// Sign vector for `diff-sigma`, e.g. `1,-1,1`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        sigma: Option<Vec<i8>>,
    },
    /// Outputs under network effects.
    Network {
        #[command(flatten)]
        common: Common,
    },
    /// Symmetric common ownership.
    Ownership {
        #[command(flatten)]
        common: Common,
        /// Common ownership weight; taken from the instance when absent.
        #[arg(long)]
        kappa: Option<f64>,
        /// Random ownership matrices for the first-best check.
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Oligopoly against monopoly for a fixed demand system.
    Spectral {
        #[command(flatten)]
        common: Common,
        /// Comma-separated intercepts.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        psi: Option<Vec<f64>>,
        /// Rows separated by `;`, entries by `,`.
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<String>,
    },
    /// CSV data behind the symmetric-case figures and table.
    Figure {
        #[command(flatten)]
        common: Common,
        #[arg(value_enum)]
        name: Figure,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Symmetric standalone values for `fig8`.
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 3.0, 4.0])]
        gammas: Vec<f64>,
    },
}

/// Maps a library error to the exit-code contract.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Absent(_) | Error::Infeasible { .. } | Error::NoSignSolution { .. } | Error::Hypothesis(_) => {
            EXIT_ABSENT
        }
        _ => EXIT_INVALID,
    }
}

/// Parses `args` (program name first), runs the command, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn load_instance(c: &Common) -> Result<MarketInstance> {
    let text = match (&c.instance, &c.inline) {
        (Some(p), _) => std::fs::read_to_string(p)?,
        (None, Some(s)) => s.clone(),
        (None, None) => return Err(Error::invalid("instance", "pass --instance PATH or --inline JSON")),
    };
    Ok(serde_json::from_str(&text)?)
}

fn emit_text(c: &Common, text: &str) -> Result<()> {
    match &c.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(c: &Common, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit_text(c, &text)
}

#[derive(Serialize)]
struct RecordEntry {
    pattern: RecordPattern,
    #[serde(flatten)]
    record: EquilibriumRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<Verification>,
}

fn with_tol(v: Verification, tol: Option<f64>) -> Verification {
    match tol {
        Some(t) => Verification {
            accepted: v.conditions.output_floor <= t && v.conditions.alignment <= t && v.deviation_gain <= t,
            ..v
        },
        None => v,
    }
}

fn outcome<T: Serialize>(r: Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn parse_sigma_matrix(s: &str) -> Result<Matrix> {
    let rows = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid("sigma", format!("cannot parse entry {v:?}")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows)
}

fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Planner { common } => {
            let inst = load_instance(common)?;
            emit_json(common, &planner_optimum_with(&inst, common.mirror)?)
        }
        Command::Monopoly { common } => {
            let inst = load_instance(common)?;
            emit_json(common, &monopoly_optimum_with(&inst, common.mirror)?)
        }
        Command::Equilibria {
            common,
            verify,
            samples,
        } => {
            let inst = load_instance(common)?.without_extensions();
            let opts = VerifyOptions {
                samples: *samples,
                seed: common.seed,
            };
            let entries = enumerate_equilibria(&inst)?
                .into_iter()
                .map(|record| {
                    let verification = if *verify {
                        Some(with_tol(
                            verify_equilibrium_with(&inst, &record.allocation, opts)?,
                            common.tol,
                        ))
                    } else {
                        None
                    };
                    Ok(RecordEntry {
                        pattern: record.pattern(inst.gamma()),
                        record,
                        verification,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            emit_json(common, &json!({ "count": entries.len(), "records": entries }))
        }
        Command::Welfare { common, compare, sigma } => {
            let inst = load_instance(common)?.without_extensions();
            let sigma = sigma.clone().unwrap_or_else(|| vec![1; inst.n()]);
            match compare {
                Some(Comparison::MonoDiff) => emit_json(common, &compare_mono_vs_diff(&inst)?),
                Some(Comparison::DiffSigma) => emit_json(common, &compare_diff_vs_sigma(&inst, &sigma)?),
                Some(Comparison::MonoConc) => emit_json(common, &compare_mono_vs_conc(&inst)?),
                Some(Comparison::Cosines) => emit_json(common, &compare_cosines(&inst)?),
                None => emit_json(
                    common,
                    &json!({
                        "mono_diff": outcome(compare_mono_vs_diff(&inst)),
                        "diff_sigma": outcome(compare_diff_vs_sigma(&inst, &sigma)),
                        "mono_conc": outcome(compare_mono_vs_conc(&inst)),
                        "cosines": outcome(compare_cosines(&inst)),
                    }),
                ),
            }
        }
        Command::Network { common } => {
            let inst = load_instance(common)?;
            let outputs = network_outputs_with(&inst, common.mirror)?;
            let check = neumann_check(&inst, 1.0, inst.gamma(), NEUMANN_TERMS)?;
            emit_json(common, &json!({ "outputs": outputs, "neumann": check }))
        }
        Command::Ownership { common, kappa, trials } => {
            let inst = load_instance(common)?;
            if let Some(grid) = &common.grid {
                return emit_text(common, &sweep::ownership_sweep(&inst, grid)?);
            }
            let kappa = match kappa {
                Some(k) => *k,
                None => common_kappa(&inst)?
                    .ok_or_else(|| Error::invalid("kappa", "pass --kappa or an ownership matrix"))?,
            };
            let eq = ownership_equilibrium_with(&inst, kappa, common.mirror)?
                .ok_or(Error::Absent("ownership equilibrium"))?;
            let base = inst.without_extensions();
            let report = json!({
                "equilibrium": eq,
                "welfare_slope": outcome(ownership_welfare_slope(&base, kappa)),
                "first_best": outcome(first_best_random_trials(&base, *trials, common.seed)),
            });
            emit_json(common, &report)
        }
        Command::Spectral { common, psi, sigma } => {
            let si = match (psi, sigma) {
                (Some(p), Some(s)) => SpectralInstance::new(p.clone(), parse_sigma_matrix(s)?)?,
                (None, None) => {
                    let text = match (&common.instance, &common.inline) {
                        (Some(p), _) => std::fs::read_to_string(p)?,
                        (None, Some(s)) => s.clone(),
                        (None, None) => {
                            return Err(Error::invalid(
                                "psi, sigma",
                                "pass --psi and --sigma or a spectral instance",
                            ))
                        }
                    };
                    serde_json::from_str(&text)?
                }
                _ => return Err(Error::invalid("psi, sigma", "pass both --psi and --sigma")),
            };
            emit_json(common, &ranking_condition(&si)?)
        }
        Command::Figure {
            common,
            name,
            n,
            alpha,
            gammas,
        } => {
            let csv = match name {
                Figure::Fig4 => sweep::fig4(*n, *alpha, &common.grid.unwrap_or(Grid::new(0.0, 5.0, 200)?))?,
                Figure::Fig6 => sweep::fig6(*n, *alpha, &common.grid.unwrap_or(Grid::new(0.0, 5.0, 200)?))?,
                Figure::Table1 => sweep::table1(*n, *alpha, &common.grid.unwrap_or(Grid::new(0.0, 5.0, 200)?))?,
                Figure::Fig8 => sweep::fig8(*n, *alpha, gammas, &common.grid.unwrap_or(Grid::new(0.0, 1.0, 51)?))?,
            };
            emit_text(common, &csv)
        }
    }
}

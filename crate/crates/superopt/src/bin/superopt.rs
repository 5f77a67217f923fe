use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use superopt::report::{self, ChecksEnabled, RunConfig};
use superopt::solver::{SolverConfig, TransposeMode};

#[derive(Parser)]
#[command(name = "superopt", version, about = "Superoptimal analytic approximation for four-block and Nehari symbols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransposeArg {
    Auto,
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a symbol and emit the diagnostic report (and optionally a CSV
    /// of the singular-value profiles of the error).
    Run {
        #[arg(long)]
        input: PathBuf,
        /// Report JSON destination; stdout when omitted.
        #[arg(long)]
        out_report: Option<PathBuf>,
        /// Profile CSV destination; skipped when omitted.
        #[arg(long)]
        out_csv: Option<PathBuf>,
        /// Sampling grid size (0 = automatic).
        #[arg(long, default_value_t = 0)]
        grid_size: usize,
        /// Truncation window (0 = automatic).
        #[arg(long, default_value_t = 0)]
        n_in: usize,
        /// Correction degree searched per level (0 = automatic).
        #[arg(long, default_value_t = 0)]
        degree: usize,
        /// Relative gap accepted per level.
        #[arg(long, default_value_t = 1e-7)]
        tol_gap: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// "all", "none", or a comma list of
        /// constancy,index_sums,inequalities.
        #[arg(long, default_value = "all")]
        checks: String,
        #[arg(long, value_enum, default_value_t = TransposeArg::Auto)]
        transpose: TransposeArg,
    },
    /// Parse an input file and list schema violations without solving.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
}

fn read_input(path: &PathBuf) -> Result<report::SymbolInput, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid input JSON: {e}"))
}

fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Validate { input } => {
            let parsed = match read_input(&input) {
                Ok(p) => p,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(1);
                }
            };
            let violations = report::validate_input(&parsed);
            let out = serde_json::json!({ "violations": violations });
            println!("{out}");
            if violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Run {
            input,
            out_report,
            out_csv,
            grid_size,
            n_in,
            degree,
            tol_gap,
            seed,
            checks,
            transpose,
        } => {
            let parsed = match read_input(&input) {
                Ok(p) => p,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(1);
                }
            };
            let sym = match report::symbol_from_input(&parsed) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let checks = match ChecksEnabled::parse(&checks) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let cfg = RunConfig {
                solver: SolverConfig {
                    grid_size,
                    n_in,
                    degree,
                    tol_gap,
                    seed,
                    ..SolverConfig::default()
                },
                transpose: match transpose {
                    TransposeArg::Auto => TransposeMode::Auto,
                    TransposeArg::On => TransposeMode::On,
                    TransposeArg::Off => TransposeMode::Off,
                },
                checks,
                ..RunConfig::default()
            };
            let (rep, result) = match report::build_report(&sym, &cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(report::exit_code_for(&e) as u8);
                }
            };
            let json = match report::to_json(&rep) {
                Ok(j) => j,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            };
            if let Some(path) = out_report {
                if let Err(e) = std::fs::write(&path, &json) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            } else {
                print!("{json}");
            }
            if let Some(path) = out_csv {
                let csv = match report::to_csv(&sym, &result) {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(3);
                    }
                };
                if let Err(e) = std::fs::write(&path, csv) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
    }
}

fn main() -> ExitCode {
    run(Cli::parse())
}

//! Command-line front end: runs the check suites and decompositions from
//! `hodgedec` and emits machine-readable JSON reports.
//!
//! Reports go to stdout (and to `--out` when given); human-oriented progress
//! notes go to stderr. A fixed command line with a fixed `--seed` produces a
//! byte-identical report: point sampling uses the ChaCha8 stream cipher as
//! its PRNG, and all reductions have fixed order.
//!
//! Exit codes: `0` all checks passed, `1` a check failed or the solver
//! diverged, `2` configuration or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hodgedec::checks::{self, ChecksError, DecomposeConfig, DecomposeInput, DecomposeOutput};
use hodgedec::helmholtz::{write_scalar_csv, write_vector_csv, HelmholtzError, Medium};
use hodgedec::report::Report;

#[derive(Parser)]
#[command(
    name = "hodgedec",
    version,
    about = "Weighted Helmholtz decompositions on truncated exterior shells",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the tower-field ladder identities against the
    /// finite-difference oracle at seeded sample points.
    VerifyTowers(VerifyTowersArgs),
    /// Emit the Dirichlet-dimension table with its combinatorial
    /// cross-checks.
    Dims(DimsArgs),
    /// Compare the integrability classifier against the quadrature growth
    /// oracle.
    Integrability(IntegrabilityArgs),
    /// Decompose a vector field on a truncated shell and report diagnostics.
    Decompose(DecomposeArgs),
    /// Run every suite and merge everything into a single report.
    ReportAll(ReportAllArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Seed for the deterministic sample-point stream.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Also write the report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyTowersArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Largest harmonic order to cover (at most 8).
    #[arg(long, default_value_t = 4)]
    n_max: u32,
    /// Largest ladder height for the scalar towers (at most 4).
    #[arg(long, default_value_t = 2)]
    k_max: u32,
    /// Number of seeded sample points.
    #[arg(long, default_value_t = 20)]
    points: usize,
}

#[derive(Args)]
struct DimsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Weights to tabulate.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    s_list: Option<Vec<f64>>,
    /// Field degrees to tabulate (1 and/or 2).
    #[arg(long, value_delimiter = ',')]
    q_list: Option<Vec<u32>>,
}

#[derive(Args)]
struct IntegrabilityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Weights to scan.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    s_list: Option<Vec<f64>>,
    /// Oracle truncation radii.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input field: "dirichlet-ball", "manufactured-mix", or a CSV path.
    #[arg(long, default_value = "dirichlet-ball")]
    input: String,
    /// Shell grid as r0,R,n_r,n_ang; defaults to the builtin grid or the
    /// file header.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(f64, f64, usize, u32)>,
    /// Weight exponent of the decomposition.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    s: f64,
    /// Medium tensor: "identity" or "radial:c,tau".
    #[arg(long, value_parser = parse_medium, default_value = "identity")]
    medium: Medium,
    /// Whether to extract the finite-dimensional correction part first
    /// (requires s > 3/2).
    #[arg(
        long,
        value_name = "ON_OFF",
        value_parser = parse_on_off,
        default_value = "off",
        action = clap::ArgAction::Set
    )]
    correction: bool,
    /// Relative solver tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Directory for the decomposed parts as CSV field files.
    #[arg(long)]
    parts_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportAllArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Relative solver tolerance for the decomposition runs.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

fn parse_grid(text: &str) -> Result<(f64, f64, usize, u32), String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(format!(
            "expected r0,R,n_r,n_ang, got {} fields",
            parts.len()
        ));
    }
    let r0 = parts[0].parse::<f64>().map_err(|e| format!("r0: {e}"))?;
    let big_r = parts[1].parse::<f64>().map_err(|e| format!("R: {e}"))?;
    let n_r = parts[2].parse::<usize>().map_err(|e| format!("n_r: {e}"))?;
    let n_ang = parts[3].parse::<u32>().map_err(|e| format!("n_ang: {e}"))?;
    Ok((r0, big_r, n_r, n_ang))
}

fn parse_medium(text: &str) -> Result<Medium, String> {
    if text == "identity" {
        return Ok(Medium::Identity);
    }
    if let Some(rest) = text.strip_prefix("radial:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err("radial medium needs two parameters: radial:c,tau".into());
        }
        let c = parts[0].parse::<f64>().map_err(|e| format!("c: {e}"))?;
        let tau = parts[1].parse::<f64>().map_err(|e| format!("tau: {e}"))?;
        return Ok(Medium::RadialIsotropic { c, tau });
    }
    Err(format!(
        "unknown medium {text:?}; use \"identity\" or \"radial:c,tau\""
    ))
}

fn parse_on_off(text: &str) -> Result<bool, String> {
    match text {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected \"on\" or \"off\", got {other:?}")),
    }
}

fn write_parts(dir: &Path, out: &DecomposeOutput) -> Result<(), HelmholtzError> {
    std::fs::create_dir_all(dir)?;
    write_vector_csv(&dir.join("input.csv"), &out.grid, &out.input_field)?;
    write_vector_csv(&dir.join("grad_part.csv"), &out.grid, &out.result.grad_part)?;
    write_vector_csv(&dir.join("sol_part.csv"), &out.grid, &out.result.sol_part)?;
    write_scalar_csv(&dir.join("potential.csv"), &out.grid, &out.result.potential)?;
    if let Some(part) = &out.result.correction {
        write_vector_csv(&dir.join("correction_part.csv"), &out.grid, &part.field)?;
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<(Report, Option<PathBuf>), ChecksError> {
    match command {
        Command::VerifyTowers(args) => {
            let report =
                checks::run_verify_towers(args.n_max, args.k_max, args.points, args.common.seed)?;
            Ok((report, args.common.out))
        }
        Command::Dims(args) => {
            let s_list = args.s_list.unwrap_or_else(checks::default_dims_s_list);
            let q_list = args.q_list.unwrap_or_else(|| vec![1, 2]);
            let report = checks::run_dims(&s_list, &q_list)?;
            Ok((report, args.common.out))
        }
        Command::Integrability(args) => {
            let s_list = args
                .s_list
                .unwrap_or_else(checks::default_integrability_s_list);
            let radii = args
                .radii
                .unwrap_or_else(checks::default_integrability_r_list);
            let report = checks::run_integrability(&s_list, &radii)?;
            Ok((report, args.common.out))
        }
        Command::Decompose(args) => {
            let input = match args.input.as_str() {
                "dirichlet-ball" => DecomposeInput::DirichletBall,
                "manufactured-mix" => DecomposeInput::ManufacturedMix,
                path => DecomposeInput::File(PathBuf::from(path)),
            };
            let cfg = DecomposeConfig {
                input,
                grid: args.grid,
                s: args.s,
                medium: args.medium,
                correction: args.correction,
                tol: args.tol,
            };
            let out = checks::run_decompose(&cfg)?;
            let d = &out.result.diagnostics;
            eprintln!(
                "decomposed in {} iterations: orthogonality {:.3e}, weak residual {:.3e}, \
                 reconstruction {:.3e}",
                d.iterations,
                d.orthogonality_residual,
                d.weak_divergence_residual,
                d.reconstruction_error
            );
            if let Some(dir) = &args.parts_dir {
                write_parts(dir, &out)?;
                eprintln!("wrote field CSVs to {}", dir.display());
            }
            Ok((out.report, args.common.out))
        }
        Command::ReportAll(args) => {
            let report = checks::run_report_all(args.common.seed, args.tol)?;
            Ok((report, args.common.out))
        }
    }
}

/// Usage and configuration problems exit with 2; a diverging solver is a
/// numerical failure and exits with 1 like a failed check.
fn exit_code_for(err: &ChecksError) -> u8 {
    match err {
        ChecksError::Helmholtz(HelmholtzError::SolverDiverged { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok((report, out_path)) => {
            let json = report.to_json();
            print!("{json}");
            if let Some(path) = &out_path {
                if let Err(e) = std::fs::write(path, &json) {
                    eprintln!("error: cannot write report to {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                let failed = report.records.iter().filter(|r| !r.passed()).count();
                eprintln!("{failed} of {} checks failed", report.records.len());
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

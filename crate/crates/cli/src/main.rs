//! `nbl`: solves, ε-sweeps, Moser assemblies and the verification suite for
//! nodal radial solutions of `−Δu = λ u e^{u² + |u|^{1+ε}}` on the unit disk.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nodal_blowup::blowup::DEFAULT_RHO_MAX;
use nodal_blowup::experiment::{moser_report, run_sweep, solve, SolveDocument, SweepConfig};
use nodal_blowup::nonlinearity::DEFAULT_GUARD;
use nodal_blowup::shooting::ShootingConfig;
use nodal_blowup::{verify, Error};
use serde_json::{json, Value};

const ENV_HELP: &str = "\
ENVIRONMENT:
  NBL_THREADS  maximum number of worker threads for sweeps (default: all cores)
  NBL_GUARD    overflow-guard exponent (default 700)

EXIT STATUS:
  0  success (sweep: at least one row solved)
  1  bad flags, or lambda not below the first Dirichlet eigenvalue 5.7831859629
  2  no amplitude bracket (NoBracket)
  3  integration or quadrature failure (Stiffness and related)
  4  verify found a failing check";

#[derive(Parser, Debug)]
#[command(name = "nbl", version, about = "Nodal radial solutions on the unit disk and their blow-up", after_help = ENV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for one nodal solution (`--k 0`: the positive solution at eps = 0).
    Solve(SolveArgs),
    /// Solve along a decreasing list of eps and tabulate the blow-up diagnostics.
    Sweep(SweepArgs),
    /// Assemble the Moser test function and compare with the nodal solution.
    Moser(MoserArgs),
    /// Run the invariant and closed-form checks.
    Verify(VerifyArgs),
    /// Solve the eps = 0 positive reference problem.
    Ground(GroundArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct Tolerances {
    /// Integrator tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Target for |u(1)|.
    #[arg(long = "boundary-tol", default_value_t = 1e-8)]
    boundary_tol: f64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Number of interior zeros.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Window of the rescaled profile.
    #[arg(long = "rho-max", default_value_t = DEFAULT_RHO_MAX)]
    rho_max: f64,
    #[command(flatten)]
    tols: Tolerances,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// json: full document; csv: profile nodes.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Comma-separated, strictly decreasing.
    #[arg(long = "eps-list", value_delimiter = ',', default_values_t = [0.8, 0.6, 0.45, 0.35, 0.28])]
    eps_list: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long = "rho-max", default_value_t = DEFAULT_RHO_MAX)]
    rho_max: f64,
    #[command(flatten)]
    tols: Tolerances,
    /// Output file; CSV output also gets `<out>.meta.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct MoserArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// log R_k of the nested recipe.
    #[arg(long = "log-r-k", default_value_t = 0.1f64.ln(), allow_hyphen_values = true)]
    log_r_k: f64,
    #[command(flatten)]
    tols: Tolerances,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json: full document; csv: one row per piece.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GroundArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long = "rho-max", default_value_t = DEFAULT_RHO_MAX)]
    rho_max: f64,
    #[command(flatten)]
    tols: Tolerances,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_) | Error::Domain(_) => 1,
            Error::NoBracket { .. } => 2,
            _ => 3,
        };
        Failure { code, kind: e.kind().into(), message: e.to_string() }
    }
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, kind: "InvalidArguments".into(), message: message.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: 1, kind: "Io".into(), message: format!("{}: {e}", path.display()) }
    }
}

type Outcome = Result<u8, Failure>;

fn env_guard() -> Result<f64, Failure> {
    match std::env::var("NBL_GUARD") {
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|g| g.is_finite())
            .ok_or_else(|| Failure::usage(format!("NBL_GUARD must be a finite number, got {s:?}"))),
        Err(_) => Ok(DEFAULT_GUARD),
    }
}

fn env_threads() -> Result<Option<usize>, Failure> {
    match std::env::var("NBL_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Failure::usage(format!("NBL_THREADS must be a positive integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

fn shooting(tols: &Tolerances) -> Result<ShootingConfig, Failure> {
    if !(tols.tol > 0.0 && tols.boundary_tol > 0.0) {
        return Err(Failure::usage("tolerances must be positive"));
    }
    Ok(ShootingConfig::default()
        .with_integrator_tol(tols.tol)
        .with_boundary_tol(tols.boundary_tol)
        .with_guard(env_guard()?))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable document");
    s.push('\n');
    s
}

fn cmd_solve(a: &SolveArgs) -> Outcome {
    let cfg = shooting(&a.tols)?;
    let sol = solve(a.lambda, a.eps, a.k, &cfg)?;
    let doc = SolveDocument::new(&sol, a.rho_max)?;
    let text = match a.format {
        Format::Json => pretty(&doc),
        Format::Csv => doc.profile_csv(),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn cmd_ground(a: &GroundArgs) -> Outcome {
    let args = SolveArgs {
        lambda: a.lambda,
        eps: 0.0,
        k: 0,
        rho_max: a.rho_max,
        tols: a.tols.clone(),
        out: a.out.clone(),
        format: a.format,
    };
    cmd_solve(&args)
}

fn cmd_sweep(a: &SweepArgs) -> Outcome {
    let guard = env_guard()?;
    let cfg = SweepConfig {
        lambda: a.lambda,
        k: a.k,
        eps_list: a.eps_list.clone(),
        rho_max: a.rho_max,
        boundary_tol: a.tols.boundary_tol,
        integrator_tol: a.tols.tol,
        guard,
    };
    let table = run_sweep(&cfg, env_threads()?)?;
    match a.format {
        Format::Csv => {
            emit(a.out.as_deref(), &table.to_csv())?;
            if let Some(out) = &a.out {
                let mut meta = out.clone().into_os_string();
                meta.push(".meta.json");
                let meta = PathBuf::from(meta);
                std::fs::write(&meta, pretty(&table.metadata())).map_err(|e| Failure::io(&meta, e))?;
            }
        }
        Format::Json => emit(a.out.as_deref(), &pretty(&table.to_json()))?,
    }
    if table.succeeded() > 0 {
        Ok(0)
    } else {
        let first = &table.rows[0];
        let code = if first.status == "NoBracket" { 2 } else { 3 };
        Err(Failure {
            code,
            kind: first.status.clone(),
            message: format!("no row solved; first: {}", first.message.clone().unwrap_or_default()),
        })
    }
}

fn cmd_moser(a: &MoserArgs) -> Outcome {
    let cfg = shooting(&a.tols)?;
    let report = moser_report(a.lambda, a.eps, a.k, a.log_r_k, &cfg)?;
    let text = match a.format {
        Format::Json => pretty(&report),
        Format::Csv => moser_csv(&report),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn moser_csv(report: &Value) -> String {
    use nodal_blowup::experiment::fmt_f64;
    let mut out = String::from("index,t,dirichlet_unit,dirichlet,potential,functional,analytic_limit\n");
    let f = |v: &Value| fmt_f64(v.as_f64().unwrap_or(f64::NAN));
    for p in report["assembly"]["pieces"].as_array().into_iter().flatten() {
        let e = &p["energy"];
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p["index"],
            f(&p["t"]),
            f(&p["dirichlet_unit"]),
            f(&e["dirichlet"]),
            f(&e["potential"]),
            f(&e["functional"]),
            p["analytic_limit"]
        ));
    }
    out
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let checks = verify::run_all();
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    if let Some(out) = &a.out {
        std::fs::write(out, pretty(&checks)).map_err(|e| Failure::io(out, e))?;
    }
    Ok(if failed == 0 { 0 } else { 4 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", json!({ "error": "InvalidArguments", "message": e.to_string().trim(), "exit_code": 1 }));
            return ExitCode::from(1);
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Moser(a) => cmd_moser(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Ground(a) => cmd_ground(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message, "exit_code": f.code }));
            ExitCode::from(f.code)
        }
    }
}

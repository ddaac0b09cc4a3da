//! `equinox`: validate, solve, check and sweep economies described in JSON
//! scenario files, and demonstrate approximate zeros on `[0, 1]`.

mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use equinox_core::equilibrium::{
    check_equilibrium, refine_sequence, solve_with, validate_economy, ApproximateEquilibrium,
    CheckReport, ValidationReport, MAX_SEQUENCE_LENGTH,
};
use equinox_core::fixed_point::approximate_zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use scenario::Scenario;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {}", .0.display(), .1)]
    Io(PathBuf, std::io::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("solver failed: {0}")]
    Solver(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(..) | CliError::Schema(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "equinox",
    version,
    about = "Approximate competitive equilibria with certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check pointedness, interior witnesses and sampled nonsatiation.
    Validate { scenario: PathBuf },
    /// Solve and write a result bundle (certificate, validation, check, timing).
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_refine: Option<usize>,
        /// Result bundle path; standard output when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Re-verify a certificate or result bundle against a scenario.
    Check {
        scenario: PathBuf,
        certificate: PathBuf,
    },
    /// Solve at ε_n = eps0·2^(−n), n = 0..=k, and print a CSV table.
    Sweep {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        eps0: f64,
        #[arg(short, long, default_value_t = 4)]
        k: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Approximate zero on [0, 1] of c0 + c1·x + c2·x² + …
    Ivt {
        /// Coefficients, lowest degree first, e.g. `-1,2` for 2x − 1.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        function: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        /// Grid size; estimated by sampling when absent.
        #[arg(long)]
        modulus: Option<usize>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Timing {
    validate_ms: f64,
    solve_ms: f64,
    check_ms: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultBundle {
    schema: u32,
    certificate: ApproximateEquilibrium,
    validation: ValidationReport,
    check: CheckReport,
    timing: Timing,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(p.into(), e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::Io("<stdout>".into(), e))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialise") + "\n"
}

fn require_valid(report: &ValidationReport) -> Result<(), CliError> {
    if report.passed() {
        return Ok(());
    }
    let reason = if !report.pointedness.pointed {
        "production cone is not pointed".to_string()
    } else {
        report
            .interior_error
            .clone()
            .unwrap_or_else(|| "no interior witnesses".into())
    };
    Err(CliError::Validation(reason))
}

fn validate(path: &Path) -> Result<(), CliError> {
    let econ = Scenario::load(path)?.economy()?;
    let report = validate_economy(&econ);
    write_out(None, &to_json(&report))?;
    require_valid(&report)
}

fn solve(
    path: &Path,
    epsilon: Option<f64>,
    seed: Option<u64>,
    max_refine: Option<usize>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let scenario = Scenario::load(path)?;
    let econ = scenario.economy()?;
    let mut opts = scenario.solve_options();
    opts.epsilon = epsilon.unwrap_or(opts.epsilon);
    opts.seed = seed.unwrap_or(opts.seed);
    opts.max_refine = max_refine.unwrap_or(opts.max_refine);

    let t = Instant::now();
    let validation = validate_economy(&econ);
    let validate_ms = ms(t);
    require_valid(&validation)?;
    let t = Instant::now();
    let cert = solve_with(&econ, &opts).map_err(|e| CliError::Solver(e.to_string()))?;
    let solve_ms = ms(t);
    let t = Instant::now();
    let check = check_equilibrium(&econ, &cert);
    let check_ms = ms(t);
    let failed: Vec<String> = check.failures().map(|c| c.to_string()).collect();
    let bundle = ResultBundle {
        schema: scenario::SCHEMA_VERSION,
        certificate: cert,
        validation,
        check,
        timing: Timing {
            validate_ms,
            solve_ms,
            check_ms,
        },
    };
    write_out(output, &to_json(&bundle))?;
    let c = &bundle.certificate;
    eprintln!(
        "p = {:?}, p·η = {:.3e}, dist(η, Y) = {:.3e} <= δ = {:.3e}, t = {:.3e} < m = {:.3e}",
        c.price.as_slice(),
        c.metrics.p_dot_eta,
        c.metrics.dist_eta_to_y,
        c.delta,
        c.t,
        c.m_const
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "independent check failed: {}",
            failed.join("; ")
        )))
    }
}

/// Accepts either a bare certificate or a result bundle.
fn load_certificate(path: &Path) -> Result<ApproximateEquilibrium, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.into(), e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    let cert = value.get("certificate").cloned().unwrap_or(value);
    serde_json::from_value(cert).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

fn check(scenario: &Path, certificate: &Path) -> Result<(), CliError> {
    let econ = Scenario::load(scenario)?.economy()?;
    let cert = load_certificate(certificate)?;
    let report = check_equilibrium(&econ, &cert);
    let mut text = String::new();
    for c in &report.clauses {
        text.push_str(&format!("{c}\n"));
    }
    write_out(None, &text)?;
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "certificate check failed: {}",
            failed.join(", ")
        )))
    }
}

fn sweep(
    path: &Path,
    eps0: f64,
    k: usize,
    seed: Option<u64>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    if k > MAX_SEQUENCE_LENGTH {
        return Err(CliError::Schema(format!(
            "k = {k} exceeds {MAX_SEQUENCE_LENGTH}"
        )));
    }
    let scenario = Scenario::load(path)?;
    let econ = scenario.economy()?;
    require_valid(&validate_economy(&econ))?;
    let seq = refine_sequence(&econ, eps0, k, seed.unwrap_or(scenario.solver.seed))
        .map_err(|e| CliError::Solver(e.to_string()))?;

    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n".to_string(), "epsilon".to_string()];
    header.extend((1..=econ.dim()).map(|i| format!("p_{i}")));
    header.extend(["p_dot_eta", "dist_eta_Y", "price_step"].map(String::from));
    let csv_err = |e: csv::Error| CliError::Io("<csv>".into(), e.into());
    wtr.write_record(&header).map_err(csv_err)?;
    for (n, (cert, eps)) in seq.certificates.iter().zip(&seq.epsilons).enumerate() {
        let mut row = vec![n.to_string(), eps.to_string()];
        row.extend(cert.price.iter().map(f64::to_string));
        row.push(cert.metrics.p_dot_eta.to_string());
        row.push(cert.metrics.dist_eta_to_y.to_string());
        row.push(match n {
            0 => String::new(),
            _ => seq.price_steps[n - 1].to_string(),
        });
        wtr.write_record(&row).map_err(csv_err)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| CliError::Io("<csv>".into(), e.into_error()))?;
    write_out(
        output,
        &String::from_utf8(bytes).expect("csv output is utf-8"),
    )?;
    match seq.failure {
        Some((n, e)) => Err(CliError::Solver(format!("stage {n}: {e}"))),
        None => Ok(()),
    }
}

fn ivt(coeffs: &[f64], epsilon: f64, modulus: Option<usize>) -> Result<(), CliError> {
    let f = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let r = approximate_zero(f, epsilon, modulus).map_err(|e| CliError::Solver(e.to_string()))?;
    write_out(None, &format!("{}\n", r.x))?;
    eprintln!(
        "|f(x)| = {:.3e} <= {epsilon:e}; grid size {}{}",
        r.value.abs(),
        r.modulus,
        if r.modulus_estimated {
            " (estimated by sampling)"
        } else {
            ""
        }
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { scenario } => validate(&scenario),
        Command::Solve {
            scenario,
            epsilon,
            seed,
            max_refine,
            output,
        } => solve(&scenario, epsilon, seed, max_refine, output.as_deref()),
        Command::Check {
            scenario,
            certificate,
        } => check(&scenario, &certificate),
        Command::Sweep {
            scenario,
            eps0,
            k,
            seed,
            output,
        } => sweep(&scenario, eps0, k, seed, output.as_deref()),
        Command::Ivt {
            function,
            epsilon,
            modulus,
        } => ivt(&function, epsilon, modulus),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EQUINOX_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

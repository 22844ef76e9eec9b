//! Command-line front end for L2+ induced-norm bounds.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use l2plus::conic::SolverOptions;
use l2plus::harmonic::{write_curve_csv, DEFAULT_MAX_HARMONICS};
use l2plus::io::{parse_matrix, read_system};
use l2plus::lti::{is_externally_positive_sampled, is_internally_positive, subtract};
use l2plus::report::{build_report, BoundsReport};
use l2plus::upper::{Multiplier, SweepResult, DEFAULT_ALPHAS, DEFAULT_MAX_DEGREE};
use l2plus::{
    delay_demo, hinf_norm, matrix_l2plus_bruteforce, matrix_l2plus_lower, sweep, upsilon_sequence, BruteforceOptions,
    Error, GridOptions, NormOrder, StateSpace, UpperOptions,
};

const EXIT_PARSE: u8 = 2;
const EXIT_UNSTABLE: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_OTHER: u8 = 1;

#[derive(Parser)]
#[command(name = "l2plus", version, about = "Bounds on the L2+ induced norm of stable LTI systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// L2 induced norm and its peak.
    Hinf { file: PathBuf },
    /// Upper and lower bounds with their relative gap.
    Certify {
        file: PathBuf,
        #[command(flatten)]
        opts: BoundOpts,
    },
    /// Upper bounds over a grid of filter poles and degrees.
    Upper {
        file: PathBuf,
        #[command(flatten)]
        opts: BoundOpts,
    },
    /// Harmonic lower bounds.
    Lower {
        file: PathBuf,
        #[command(flatten)]
        opts: BoundOpts,
        /// Write the `(omega, h_N)` curve at the largest order.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Bounds for the difference of two systems.
    Diff {
        file1: PathBuf,
        file2: PathBuf,
        #[command(flatten)]
        opts: BoundOpts,
    },
    /// Bounds for a constant matrix, given as a JSON file or literal.
    Matrix {
        matrix: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        random_starts: usize,
    },
    /// Gains of the delay system `1 - e^{-Ls}` for signed and nonnegative inputs.
    UniformDemo {
        /// 1, 2 or inf; all three when omitted.
        #[arg(long)]
        p: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        delay: f64,
        /// Sample step; defaults to `delay / 2000`.
        #[arg(long)]
        dt: Option<f64>,
        /// Simulated window, in multiples of the delay.
        #[arg(long, default_value_t = 200.0)]
        horizon: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Internal and sampled external positivity.
    Positivity { file: PathBuf },
}

#[derive(Args, Clone)]
struct BoundOpts {
    /// Comma-separated filter poles.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = DEFAULT_ALPHAS.to_vec())]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_DEGREE)]
    max_degree: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_HARMONICS)]
    max_harmonics: usize,
    #[arg(long, default_value_t = 1e-8)]
    solver_tol: f64,
    #[arg(long, default_value_t = 200)]
    grid_per_decade: usize,
    /// Add a PSD term to the multiplier.
    #[arg(long)]
    psd_multiplier: bool,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl BoundOpts {
    fn upper(&self) -> UpperOptions {
        let multiplier = if self.psd_multiplier { Multiplier::PsdPlusNonneg } else { Multiplier::Nonneg };
        UpperOptions { solver: SolverOptions::with_tol(self.solver_tol), multiplier }
    }

    fn grid(&self) -> GridOptions {
        GridOptions { per_decade: self.grid_per_decade, ..Default::default() }
    }

    fn validate(&self) -> Result<(), Failure> {
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return Err(Failure::usage(format!("--solver-tol must lie in (0, 1), got {}", self.solver_tol)));
        }
        if self.grid_per_decade == 0 || self.max_harmonics == 0 {
            return Err(Failure::usage("--grid-per-decade and --max-harmonics must be positive"));
        }
        if self.alpha.is_empty() {
            return Err(Failure::usage("--alpha needs at least one pole"));
        }
        Ok(())
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_PARSE, message: message.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: EXIT_OTHER, message: format!("{}: {e}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnstableSystem(_) => EXIT_UNSTABLE,
            Error::Infeasible | Error::NumericalFailure(_) | Error::SingularResolvent(_) => EXIT_SOLVER,
            _ => EXIT_PARSE,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult = Result<(), Failure>;

fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        String::new()
    }
}

fn bounds_csv(report: &BoundsReport, upper: bool, lower: bool) -> String {
    let mut s = String::from("bound,alpha,N,value,omega,status\n");
    if upper {
        for r in &report.upper_bounds {
            let _ = writeln!(s, "upper,{},{},{},,{:?}", num(r.alpha), r.degree, num(r.gamma), r.status);
        }
    }
    if lower {
        for r in &report.lower_bounds {
            let omega = if r.omega_arg.is_finite() { num(r.omega_arg) } else { "inf".into() };
            let _ = writeln!(s, "lower,,{},{},{},", r.n, num(r.upsilon), omega);
        }
    }
    s
}

fn emit(report: &BoundsReport, opts: &BoundOpts, upper: bool, lower: bool) -> CliResult {
    if upper {
        for r in &report.upper_bounds {
            println!("upper alpha={:<6} N={:<3} gamma={:<12} {:?}", r.alpha, r.degree, fmt6(r.gamma), r.status);
        }
    }
    if lower {
        for r in &report.lower_bounds {
            println!("lower N={:<4} upsilon={:.6} omega={}", r.n, r.upsilon, fmt6(r.omega_arg));
        }
    }
    println!("{}", report.summary());
    for v in report.invariant_violations() {
        eprintln!("warning: {v}");
    }
    if let Some(p) = &opts.out {
        write_text(p, &(report.to_json() + "\n"))?;
    }
    if let Some(p) = &opts.csv {
        write_text(p, &bounds_csv(report, upper, lower))?;
    }
    Ok(())
}

fn fmt6(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        x.to_string()
    }
}

/// Runs the requested parts; skipped parts stay empty in the report.
fn bounds(sys: &StateSpace, opts: &BoundOpts, upper: bool, lower: bool) -> CliResult {
    opts.validate()?;
    sys.ensure_stable()?;
    let (l2, peak) = hinf_norm(sys, 1e-9)?;
    let up = if upper {
        sweep(sys, &opts.alpha, opts.max_degree, &opts.upper())?
    } else {
        SweepResult { cells: Vec::new() }
    };
    let low = if lower { upsilon_sequence(sys, opts.max_harmonics, &opts.grid())? } else { Vec::new() };
    let report = build_report(sys, l2, &peak, &up, &low)?;
    emit(&report, opts, upper, lower)
}

fn cmd_hinf(file: &Path) -> CliResult {
    let sys = read_system(file)?;
    sys.ensure_stable()?;
    let (norm, peak) = hinf_norm(&sys, 1e-9)?;
    let summary = l2plus::report::PeakSummary::from_peak(&peak);
    println!("l2_norm {norm:.6} at omega {} ({})", fmt6(summary.omega), summary.kind);
    let v: Vec<String> = peak.v.iter().map(|z| format!("{:.6}{:+.6}j", z.re, z.im)).collect();
    println!("v [{}]", v.join(", "));
    Ok(())
}

fn cmd_matrix(arg: &str, seed: u64, random_starts: usize) -> CliResult {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).map_err(|e| Failure::io(Path::new(arg), e))?
    } else {
        arg.to_string()
    };
    let m = parse_matrix(&text)?;
    let lower = matrix_l2plus_lower(&m)?;
    println!("l2_norm {:.9}", m.singular_values().max());
    println!("lower {lower:.9}");
    match matrix_l2plus_bruteforce(&m, &BruteforceOptions { random_starts, seed }) {
        Ok(b) => println!("oracle {b:.9}"),
        Err(Error::TooManyColumns { .. }) => println!("oracle skipped (more than 6 columns)"),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn cmd_uniform_demo(
    p: Option<&str>,
    delay: f64,
    dt: Option<f64>,
    horizon: f64,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> CliResult {
    let orders = match p {
        Some(s) => vec![NormOrder::parse(s)?],
        None => vec![NormOrder::One, NormOrder::Two, NormOrder::Infinity],
    };
    let dt = dt.unwrap_or(delay / 2000.0);
    let mut rows = Vec::new();
    for order in orders {
        let d = delay_demo(delay, order, dt, horizon * delay)?;
        println!(
            "p={:<4} signed {:.6}  nonnegative {:.6}  ratio {:.6}  (constant {:.6})",
            order.label(),
            d.achieved_norm,
            d.achieved_plus_norm,
            d.ratio,
            order.uniform_constant()
        );
        rows.push(d);
    }
    if let Some(path) = csv {
        let mut s = String::from("p,signed,nonnegative,ratio,constant\n");
        for d in &rows {
            let _ = writeln!(s, "{p},{},{},{},{}", num(d.achieved_norm), num(d.achieved_plus_norm), num(d.ratio), num(d.p.uniform_constant()), p = d.p.label());
        }
        write_text(path, &s)?;
    }
    if let Some(path) = out {
        write_text(path, &(serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"))?;
    }
    Ok(())
}

fn cmd_positivity(file: &Path) -> CliResult {
    let sys = read_system(file)?;
    println!("internally positive: {}", is_internally_positive(&sys));
    sys.ensure_stable()?;
    let horizon = if sys.is_static() { 1.0 } else { 30.0 / -sys.spectral_abscissa() };
    let ext = is_externally_positive_sampled(&sys, horizon, horizon / 20000.0)?;
    println!("externally positive (sampled on [0, {horizon:.3}]): {ext}");
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Hinf { file } => cmd_hinf(&file),
        Command::Certify { file, opts } => bounds(&read_system(&file)?, &opts, true, true),
        Command::Upper { file, opts } => bounds(&read_system(&file)?, &opts, true, false),
        Command::Lower { file, opts, curve } => {
            let sys = read_system(&file)?;
            bounds(&sys, &opts, false, true)?;
            if let Some(path) = curve {
                write_curve_csv(&sys, opts.max_harmonics, &opts.grid(), create(&path)?)?;
            }
            Ok(())
        }
        Command::Diff { file1, file2, opts } => {
            let (g1, g2) = (read_system(&file1)?, read_system(&file2)?);
            let name = format!("{}-{}", g1.name().unwrap_or("G1"), g2.name().unwrap_or("G2"));
            bounds(&subtract(&g1, &g2)?.with_name(name), &opts, true, true)
        }
        Command::Matrix { matrix, seed, random_starts } => cmd_matrix(&matrix, seed, random_starts),
        Command::UniformDemo { p, delay, dt, horizon, csv, out } => {
            cmd_uniform_demo(p.as_deref(), delay, dt, horizon, csv.as_deref(), out.as_deref())
        }
        Command::Positivity { file } => cmd_positivity(&file),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use quadsolve::report::{self, Report};
use quadsolve::triangular::simultaneous_triangularize;
use quadsolve::{decide, parse_system, Decision, MatrixC, SystemSpec, Tolerances};

#[derive(Parser)]
#[command(name = "quadsolve", version, about = "Solvability by quadratures for linear systems dy/dz = B(z) y")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every singular point, check exponent relations and decide solvability.
    Analyze(Common),
    /// Decide solvability only.
    Decide(Common),
    /// Look for a constant gauge making every coefficient of B upper-triangular.
    Triangularize(Common),
    /// Monodromy matrices by numerical continuation around each finite point.
    Monodromy(Common),
    /// Formal normal form at each irregular non-resonant point.
    Formal(Common),
    /// Fundamental matrix by quadratures for a triangular(izable) system.
    Solve(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Common {
    /// Input system document (JSON).
    system: PathBuf,
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    tol_eig: f64,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    tol_rank: f64,
    #[arg(long, default_value_t = 1e-11, value_parser = positive)]
    rtol_ode: f64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    rat_denominator_bound: u64,
    #[arg(long, default_value_t = 8)]
    truncation_order: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err("must be a positive finite number".into()),
        Err(e) => Err(e.to_string()),
    }
}

impl Common {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            eig: self.tol_eig,
            rank: self.tol_rank,
            rtol_ode: self.rtol_ode,
            rat_denominator_bound: self.rat_denominator_bound,
            truncation_order: self.truncation_order,
        }
    }

    fn load(&self) -> Result<SystemSpec> {
        let text = std::fs::read_to_string(&self.system).with_context(|| format!("reading {}", self.system.display()))?;
        Ok(parse_system(&text)?)
    }
}

/// Exit status: 0 decision or result reached, 1 inconclusive, 2 parse or
/// input error, 3 unsupported configuration, 4 numerical failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    match err.downcast_ref::<quadsolve::Error>() {
        Some(e) if e.is_parse() => 2,
        Some(e) if e.is_numerical() => 4,
        _ => 3,
    }
}

fn emit(report: &Report, format: Format) {
    match format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => print!("{}", report::render_text(report)),
    }
}

fn decision_code(d: Decision) -> u8 {
    match d {
        Decision::Inconclusive => 1,
        _ => 0,
    }
}

fn run(cmd: &Command) -> Result<u8> {
    let (name, args) = match cmd {
        Command::Analyze(a) => ("analyze", a),
        Command::Decide(a) => ("decide", a),
        Command::Triangularize(a) => ("triangularize", a),
        Command::Monodromy(a) => ("monodromy", a),
        Command::Formal(a) => ("formal", a),
        Command::Solve(a) => ("solve", a),
    };
    let spec = args.load()?;
    let tol = args.tolerances();
    let mut rep = Report::new(name, &spec, &tol)?;
    let code = match cmd {
        Command::Analyze(_) => {
            let (full, unsupported) = report::analyze(&spec, &tol)?;
            rep = full;
            if let Some(e) = unsupported {
                emit(&rep, args.format);
                return Err(e.into());
            }
            decision_code(rep.decision.as_ref().expect("decided").decision)
        }
        Command::Decide(_) => {
            let d = decide(&spec, &tol)?;
            let code = decision_code(d.decision);
            rep.decision = Some(d);
            code
        }
        Command::Triangularize(_) => {
            let mut mats = spec.coefficient_matrices();
            if mats.is_empty() {
                mats.push(MatrixC::zeros(spec.dimension(), spec.dimension()));
            }
            rep.triangularization = Some(simultaneous_triangularize(&mats, tol.rank)?);
            0
        }
        Command::Monodromy(_) => {
            rep.monodromy = Some(report::monodromy_report(&spec, &tol)?);
            0
        }
        Command::Formal(_) => {
            rep.formal = report::formal_reports(&spec, &tol)?;
            0
        }
        Command::Solve(_) => {
            let sol = report::solution_report(&spec, &tol)?;
            let ok = sol.check.holds();
            rep.solution = Some(sol);
            if ok {
                0
            } else {
                4
            }
        }
    };
    emit(&rep, args.format);
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fractail::{run, run_suite, Scenario, SUITES};
use fractail_core::{ml_eval, MlParams};
use fractail_oracle::MlOracle;

/// Spectral solving, long-time asymptotics and source recovery for
/// time-fractional diffusion-wave equations.
#[derive(Parser)]
#[command(name = "fractail", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a scenario file.
    Run {
        scenario: PathBuf,
        /// Also write SVG plots.
        #[arg(long)]
        plots: bool,
        /// Output directory; overrides `output.dir` in the scenario.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite: mlf, forward, asymptotic, inverse, scalar,
    /// contrast or all.
    Verify { suite: String },
    /// Evaluate E_{α,β}(x).
    Mlf {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Compare against the arbitrary-precision reference.
        #[arg(long)]
        check: bool,
    },
}

const CHECK_TOLERANCE: f64 = 1e-10;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { scenario, plots, out } => run_command(scenario, plots, out),
        Command::Verify { suite } => verify(&suite),
        Command::Mlf { alpha, beta, x, check } => mlf(alpha, beta, x, check),
    }
}

fn run_command(path: PathBuf, plots: bool, out: Option<PathBuf>) -> ExitCode {
    let (scenario, text) = match Scenario::load(&path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let dir = out.or_else(|| scenario.output.dir.clone()).unwrap_or_else(|| {
        let stem = path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from("fractail-out").join(stem)
    });
    match run(&scenario, &text, &dir, plots) {
        Ok(report) => {
            print!("{}", report.render());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn verify(suite: &str) -> ExitCode {
    let Some(outcomes) = run_suite(suite) else {
        eprintln!("error: unknown suite `{suite}`; expected one of {}", SUITES.join(", "));
        return ExitCode::from(2);
    };
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn mlf(alpha: f64, beta: f64, x: f64, check: bool) -> ExitCode {
    let params = match MlParams::new(alpha, beta) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let value = ml_eval(params, x);
    println!("E({alpha}, {beta})({x}) = {value:.17e}");
    if !check {
        return ExitCode::SUCCESS;
    }
    let reference = MlOracle::new(alpha, beta).and_then(|mut o| o.eval(x));
    match reference {
        Ok(r) => {
            let err = if r.value == 0.0 { value.abs() } else { ((value - r.value) / r.value).abs() };
            println!("reference = {:.17e}", r.value);
            println!("relative error = {err:.3e} ({})", if err <= CHECK_TOLERANCE { "PASS" } else { "FAIL" });
            if err <= CHECK_TOLERANCE {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: reference evaluation failed: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Acceptance suite: every criterion at its stated tolerance and runtime
//! budget, one line each.

use std::process::ExitCode;

use fractail::suites::{run_suite, CriterionOutcome};

fn main() -> ExitCode {
    let outcomes: Vec<CriterionOutcome> = run_suite("all").expect("the full suite exists");
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

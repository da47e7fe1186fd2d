//! Acceptance suite as a plain binary so every criterion line is printed
//! under `cargo test`.

use std::process::ExitCode;

use minkdiff::acceptance::{run, AcceptanceOptions};

fn main() -> ExitCode {
    let report = run(&AcceptanceOptions::default());
    for c in &report {
        println!("{}", c.line());
    }
    let failed: Vec<&str> = report.iter().filter(|c| c.gating && !c.pass).map(|c| c.id.as_str()).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", report.iter().filter(|c| c.gating).count());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}

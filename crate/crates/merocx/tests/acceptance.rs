//! One line per acceptance criterion; exits nonzero if any fails.

use std::process::ExitCode;

fn main() -> ExitCode {
    merocx::scenario::init_threads();
    let dir = tempfile::tempdir().expect("temp dir");
    let lines = match merocx::acceptance::run(dir.path()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("acceptance suite aborted: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    for l in &lines {
        println!("{l}");
    }
    let failed = lines.iter().filter(|l| !l.ok).count();
    println!("{} of {} criteria pass", lines.len() - failed, lines.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}

//! Binary entry point; all behavior lives in the library's cli module.

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(bb84sim::cli::run())
}

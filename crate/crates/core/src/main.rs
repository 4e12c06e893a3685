use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    rdslab::cli::dispatch(rdslab::cli::Cli::parse())
}

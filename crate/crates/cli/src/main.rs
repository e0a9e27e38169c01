use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    hodge_cli::run(hodge_cli::Cli::parse())
}

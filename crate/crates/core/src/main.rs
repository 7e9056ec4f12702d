use clap::Parser;
use heavyset::cli::{run, Cli};

fn main() -> std::process::ExitCode {
    run(Cli::parse())
}

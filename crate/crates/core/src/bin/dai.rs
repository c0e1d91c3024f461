use clap::Parser;
use dai::cli::{run, Cli, RunContext};

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli, RunContext::from_env()) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

use std::process::ExitCode;

use clap::Parser;
use mavem::cli::{run, Args};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let config = args.to_config();
    match run(&config) {
        Ok(outcome) => {
            print!("{}", outcome.table);
            if outcome.converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: at least one solve did not converge");
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

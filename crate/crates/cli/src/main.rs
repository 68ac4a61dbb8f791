mod commands;
mod config;
mod failure;
mod output;
mod svg;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use config::{resolve, Cli};
use failure::Failure;

fn fail(f: Failure) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&f).expect("error serializes"));
    ExitCode::from(f.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return fail(Failure::config(e.kind().to_string()));
        }
    };
    let env_out = std::env::var_os("SOS_LAB_OUT").map(Into::into);
    let config = match resolve(&cli, env_out) {
        Ok(c) => c,
        Err(f) => return fail(f),
    };
    if let Some(threads) = config.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            return fail(Failure::config(format!("--threads: {e}")));
        }
    }
    match commands::run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}

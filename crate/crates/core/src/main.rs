use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use qcurv::cli::{resolve, run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = match resolve(cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg).with_context(|| format!("writing artifacts to {}", cfg.out_dir.display())) {
        Ok(outcome) => {
            let r = &outcome.report;
            match &r.message {
                Some(m) => eprintln!("{}: {:?} ({})", r.command, r.status, m),
                None => eprintln!("{}: {:?}", r.command, r.status),
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

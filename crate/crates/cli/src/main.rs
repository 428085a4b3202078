mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use oadesign::Budget;

use args::{Cli, Command};
use commands::Outcome;

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(commands::UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let budget = Budget::from_env();
    match &cli.command {
        Command::OaBuild(a) => commands::oa_build(a, &budget),
        Command::DesignBuild(a) => commands::design_build(a, &budget),
        Command::Verify(a) => commands::verify(a, &budget),
        Command::Embed(a) => commands::embed(a, &budget),
        Command::GroupCheck(a) => commands::group_check(a, &budget),
        Command::Repro(a) => commands::repro(a, &budget),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            let refused = e
                .downcast_ref::<oadesign::Error>()
                .is_some_and(oadesign::Error::is_refusal);
            ExitCode::from(if refused { 3 } else { 1 })
        }
    }
}

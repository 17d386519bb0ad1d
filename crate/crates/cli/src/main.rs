mod args;
mod commands;
mod manifest;
mod settings;

use std::fmt;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Parser;
use log::error;

use args::{Cli, Command};
use manifest::RunManifest;

/// Bad flags or settings; exits with status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<clap::Error>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<glace::Error>() {
            return match e {
                glace::Error::Config(_) => EXIT_USAGE,
                e if e.is_numerical() => EXIT_NUMERICAL,
                _ => EXIT_INPUT,
            };
        }
    }
    EXIT_INPUT
}

fn replay(cmd: &args::ReplayCmd) -> Result<()> {
    let manifest = RunManifest::read(&cmd.manifest)?;
    if manifest.command == "replay" {
        bail!(UsageError("a replay manifest cannot be replayed".into()));
    }
    let changed = manifest.changed_inputs()?;
    if !changed.is_empty() {
        bail!("inputs changed since the recorded run: {}", changed.join(", "));
    }
    let argv = manifest.replay_args(cmd.out.as_deref());
    log::info!("replaying: {}", argv[1..].join(" "));
    let cli = Cli::try_parse_from(&argv).map_err(|e| UsageError(format!("manifest does not form a valid command: {e}")))?;
    dispatch(&cli.command)
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Train(c) => commands::train(c),
        Command::EvalLp(c) => commands::eval_lp(c),
        Command::EvalNc(c) => commands::eval_nc(c),
        Command::EvalInductive(c) => commands::eval_inductive(c),
        Command::Export(c) => commands::export(c),
        Command::Replay(c) => replay(c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

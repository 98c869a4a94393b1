use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use super::commands::{
    cmd_evaluate, cmd_generate, cmd_solve_dlts, cmd_solve_exact, cmd_train, cmd_tune, EvaluateArgs,
    GenerateArgs, SolveDltsArgs, SolveExactArgs, TrainArgs, TuneArgs,
};
use super::files::read_manifest;
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "cpmp-dlts",
    version,
    about = "Learned tree search for container pre-marshalling"
)]
pub struct Cli {
    /// TOML file whose keys override the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for per-instance parallelism (0 = one per CPU).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate random instances.
    Generate(GenerateArgs),
    /// Label instances with the exact solver.
    SolveExact(SolveExactArgs),
    /// Train a policy or value network.
    Train(TrainArgs),
    /// Solve instances with network-guided search.
    SolveDlts(SolveDltsArgs),
    /// Grid-search search settings on validation instances.
    Tune(TuneArgs),
    /// Gap table of DLTS results against reference lengths.
    Evaluate(EvaluateArgs),
    /// Repeat the command recorded in a run manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
    },
}

/// Replaces fields of the subcommand's arguments with the keys of a TOML
/// table. Unknown keys are rejected.
pub(crate) fn apply_config(command: Command, config: &str, origin: &Path) -> Result<Command> {
    let table: toml::Table =
        toml::from_str(config).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))?;
    let mut value = serde_json::to_value(&command).map_err(|e| Error::Config(e.to_string()))?;
    let args = value
        .as_object_mut()
        .and_then(|o| o.values_mut().next())
        .and_then(|v| v.as_object_mut())
        .ok_or_else(|| Error::Config("this command takes no configuration file".into()))?;
    for (key, v) in table {
        let field = key.replace('-', "_");
        if !args.contains_key(&field) {
            return Err(Error::Config(format!(
                "{}: unknown key {key:?}",
                origin.display()
            )));
        }
        args.insert(
            field,
            serde_json::to_value(v).map_err(|e| Error::Config(e.to_string()))?,
        );
    }
    serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))
}

fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::SolveExact(a) => cmd_solve_exact(a),
        Command::Train(a) => cmd_train(a),
        Command::SolveDlts(a) => cmd_solve_dlts(a),
        Command::Tune(a) => cmd_tune(a).map(|(_, s)| s),
        Command::Evaluate(a) => cmd_evaluate(a).map(|(_, s)| s),
        Command::Rerun { manifest } => {
            let manifest = read_manifest(manifest)?;
            let recorded: Command = serde_json::from_value(serde_json::json!({
                manifest.command.clone(): manifest.args
            }))
            .map_err(|e| Error::Config(format!("manifest arguments: {e}")))?;
            if matches!(recorded, Command::Rerun { .. }) {
                return Err(Error::Config("manifest records a rerun".into()));
            }
            execute(&recorded)
        }
    }
}

/// Parses arguments, applies any config file and runs the command. Returns
/// the summary to print.
pub fn run(cli: Cli) -> Result<String> {
    if cli.threads > 0 {
        // fails only if a pool already exists, which then stays in use
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let command = match &cli.config {
        Some(path) => apply_config(cli.command, &fs::read_to_string(path)?, path)?,
        None => cli.command,
    };
    execute(&command)
}

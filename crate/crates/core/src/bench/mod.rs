//! Command implementations behind the `cpmp-dlts` binary: instance
//! generation, oracle labelling, training, DLTS runs, grid tuning and gap
//! evaluation. Every command leaves a JSON run manifest next to its outputs.

mod cli;
mod commands;
mod files;

pub use cli::{run, Cli, Command};
pub use commands::{
    cmd_evaluate, cmd_generate, cmd_solve_dlts, cmd_solve_exact, cmd_train, cmd_tune,
    read_gap_table, ClassSpec, EvaluateArgs, GapRow, GenerateArgs, GridSpec, SearchFlags,
    SolveDltsArgs, SolveExactArgs, TrainArgs, TuneArgs,
};
pub use files::{
    load_instances, read_manifest, read_oracle_csv, read_results_csv, OracleRow, ResultRow,
    RunManifest, EVAL_SCHEMA, LEADERBOARD_SCHEMA, ORACLE_SCHEMA, RESULTS_SCHEMA,
};

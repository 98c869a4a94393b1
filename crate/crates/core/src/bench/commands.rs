use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::files::{
    load_instances, read_csv, read_oracle_csv, read_results_csv, sha256_hex, sidecar, write_csv,
    OracleRow, ResultRow, RunManifest, EVAL_SCHEMA, LEADERBOARD_SCHEMA, ORACLE_SCHEMA,
    RESULTS_SCHEMA,
};
use crate::error::{Error, Result};
use crate::model::{
    generate_instance, read_solution, render_instance, render_solution, write_instance,
    write_solution, GroupClass, Instance, INSTANCE_EXT, SOLUTION_EXT,
};
use crate::nn::{load_weights, save_weights, AdamConfig, Architecture, Head, Network};
use crate::oracle::batch_solve;
use crate::search::{search, Models, MpVariant, SearchConfig, Strategy, ValueModel};
use crate::train::{
    build_dataset, gap_percent, policy_pairs, train_observed, validate_dlts, value_pairs, Label,
    TrainConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum ClassSpec {
    #[value(name = "G1", alias = "g1")]
    G1,
    #[value(name = "G2", alias = "g2")]
    G2,
    #[value(name = "G3", alias = "g3")]
    G3,
    /// G1, G2 and G3 in turn.
    #[value(name = "G123", alias = "g123")]
    G123,
}

impl ClassSpec {
    fn class_of(self, index: usize) -> GroupClass {
        match self {
            ClassSpec::G1 => GroupClass::G1,
            ClassSpec::G2 => GroupClass::G2,
            ClassSpec::G3 => GroupClass::G3,
            ClassSpec::G123 => GroupClass::ALL[index % 3],
        }
    }
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("arguments serialise to JSON")
}

fn seconds(d: Duration, reproducible: bool) -> f64 {
    if reproducible {
        0.0
    } else {
        d.as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 4)]
    pub stacks: usize,
    #[arg(long, default_value_t = 5)]
    pub tiers: usize,
    #[arg(long, value_enum, default_value_t = ClassSpec::G1)]
    pub class: ClassSpec,
    #[arg(long)]
    pub count: usize,
    /// Containers per instance [default: stacks * (tiers - 2)]
    #[arg(long)]
    pub fill: Option<usize>,
    /// Instance `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<String> {
    let fill = args
        .fill
        .unwrap_or(args.stacks * args.tiers.saturating_sub(2));
    fs::create_dir_all(&args.out)?;
    let mut manifest = RunManifest::new("generate", json(args));
    manifest.seeds.push(args.seed);
    for i in 0..args.count {
        let inst = generate_instance(
            args.stacks,
            args.tiers,
            args.class.class_of(i),
            fill,
            args.seed.wrapping_add(i as u64),
        )?;
        let path = args.out.join(format!("{}.{INSTANCE_EXT}", inst.id));
        write_instance(&inst, &path)?;
        manifest.output(&path)?;
    }
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(format!(
        "wrote {} instances to {}",
        args.count,
        args.out.display()
    ))
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveExactArgs {
    /// Instance files or directories.
    #[arg(long = "instances", num_args = 1.., required = true)]
    pub instances: Vec<PathBuf>,
    /// Seconds per instance; the fallback heuristic runs after a timeout.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Output directory for solutions, `oracle.csv` and the manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Write 0 for wall-clock columns so reruns are byte-identical.
    #[arg(long)]
    pub reproducible: bool,
}

pub fn cmd_solve_exact(args: &SolveExactArgs) -> Result<String> {
    let instances = load_instances(&args.instances)?;
    let limit = args.time_limit.map(Duration::from_secs_f64);
    fs::create_dir_all(&args.out)?;
    let mut manifest = RunManifest::new("solve-exact", json(args));
    manifest.inputs = args.instances.clone();
    let results = batch_solve(&instances, limit, 0);
    let mut rows = Vec::with_capacity(instances.len());
    for (inst, res) in instances.iter().zip(&results) {
        if let Some(sol) = &res.solution {
            let path = args.out.join(format!("{}.{SOLUTION_EXT}", inst.id));
            write_solution(&inst.id, sol, &path)?;
            manifest.output(&path)?;
        }
        rows.push(OracleRow {
            id: inst.id.clone(),
            length: res.length(),
            proven: res.proven_optimal,
            nodes: res.nodes_opened,
            time: seconds(res.wall_time, args.reproducible),
        });
    }
    let csv = args.out.join("oracle.csv");
    write_csv(&csv, ORACLE_SCHEMA, &rows)?;
    manifest.output(&csv)?;
    manifest.write(&args.out.join("manifest.json"))?;
    let proven = rows.iter().filter(|r| r.proven).count();
    Ok(format!(
        "solved {} instances ({proven} proven optimal)",
        rows.len()
    ))
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Instance files or directories.
    #[arg(long = "instances", num_args = 1.., required = true)]
    pub instances: Vec<PathBuf>,
    /// Directory written by `solve-exact`.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value = "policy")]
    pub head: Head,
    /// Locally connected per-stack layers after the tier scaling.
    #[arg(long, default_value_t = 2)]
    pub swl: usize,
    /// Dense layers, output layer included.
    #[arg(long, default_value_t = 3)]
    pub nswl: usize,
    /// Units per stack in each per-stack layer.
    #[arg(long, default_value_t = 16)]
    pub local_width: usize,
    /// Units in each hidden dense layer.
    #[arg(long, default_value_t = 64)]
    pub dense_width: usize,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub patience: usize,
    #[arg(long, default_value_t = 64)]
    pub minibatch: usize,
    #[arg(long, default_value_t = 0.001)]
    pub learning_rate: f64,
    /// Seeds weight initialisation and minibatch shuffling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub split_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Also save the network after every `n`-th epoch next to the output.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Weights file to write.
    #[arg(long)]
    pub out: PathBuf,
}

fn load_labels(instances: &[Instance], dir: &Path) -> Result<Vec<Label>> {
    let proven: HashMap<String, bool> = match read_oracle_csv(dir.join("oracle.csv")) {
        Ok(rows) => rows.into_iter().map(|r| (r.id, r.proven)).collect(),
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => HashMap::new(),
        Err(e) => return Err(e),
    };
    instances
        .iter()
        .map(|inst| {
            let path = dir.join(format!("{}.{SOLUTION_EXT}", inst.id));
            if !path.exists() {
                return Ok(Label::default());
            }
            let (id, solution) = read_solution(&path)?;
            if id != inst.id {
                return Err(Error::InvalidSolution(format!(
                    "{} belongs to {id}, not {}",
                    path.display(),
                    inst.id
                )));
            }
            Ok(Label {
                solution: Some(solution),
                proven: proven.get(&inst.id).copied().unwrap_or(false),
            })
        })
        .collect()
}

pub fn cmd_train(args: &TrainArgs) -> Result<String> {
    let instances = load_instances(&args.instances)?;
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = load_labels(&instances, &args.labels)?;
    let dataset = build_dataset(&instances, &labels, args.split_ratio, args.split_seed)?;
    let arch = Architecture::uniform(args.swl, args.local_width, args.nswl, args.dense_width)?;
    let network = Network::new(
        dataset.stacks,
        dataset.tiers,
        args.head,
        dataset.scale,
        &arch,
        args.seed,
    )?;
    let parameters = network.parameter_count();

    let mut digest = String::new();
    for (inst, label) in instances.iter().zip(&labels) {
        digest.push_str(&render_instance(&inst.bay));
        if let Some(sol) = &label.solution {
            digest.push_str(&render_solution(&inst.id, sol));
        }
    }
    let config = TrainConfig {
        epochs: args.epochs,
        patience: args.patience,
        minibatch: args.minibatch,
        adam: AdamConfig {
            learning_rate: args.learning_rate,
            ..AdamConfig::default()
        },
        seed: args.seed,
    };
    let (train_set, validation) = match args.head {
        Head::Policy => (
            policy_pairs(&dataset.train.policy),
            policy_pairs(&dataset.validation.policy),
        ),
        Head::Value => (
            value_pairs(&dataset.train.value),
            value_pairs(&dataset.validation.value),
        ),
    };
    let mut manifest = RunManifest::new("train", json(args));
    manifest.seeds = vec![args.seed, args.split_seed];
    manifest.inputs = args.instances.clone();
    manifest.inputs.push(args.labels.clone());

    let mut checkpoints = Vec::new();
    let mut checkpoint_error = None;
    let (best, report) =
        train_observed(network, &train_set, &validation, &config, |record, net| {
            if let Some(every) = args.checkpoint_every.filter(|&n| n > 0) {
                if record.epoch % every == 0 && checkpoint_error.is_none() {
                    let path = sidecar(&args.out, &format!(".epoch{}", record.epoch));
                    match save_weights(net, &path) {
                        Ok(()) => checkpoints.push(path),
                        Err(e) => checkpoint_error = Some(e),
                    }
                }
            }
        })?;
    if let Some(e) = checkpoint_error {
        return Err(e);
    }
    save_weights(&best, &args.out)?;
    manifest.output(&args.out)?;
    for path in &checkpoints {
        manifest.output(path)?;
    }
    let report_path = sidecar(&args.out, ".report.csv");
    report.write_csv(std::io::BufWriter::new(fs::File::create(&report_path)?))?;
    manifest.output(&report_path)?;

    let notes = [
        ("parameter_count", json(&parameters)),
        ("dataset_sha256", json(&sha256_hex(digest.as_bytes()))),
        ("train_ids", json(&dataset.train.ids)),
        ("validation_ids", json(&dataset.validation.ids)),
        ("skipped_instances", json(&dataset.skipped)),
        ("best_epoch", json(&report.best_epoch)),
        ("stopped_epoch", json(&report.stopped_epoch)),
    ];
    manifest.notes = notes.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    manifest.write(&sidecar(&args.out, ".manifest.json"))?;

    let best_record = report.best();
    let metric = match args.head {
        Head::Policy => format!("accuracy {:.4}", best_record.val_metric),
        Head::Value => format!("MAE {:.4}", best_record.val_metric),
    };
    Ok(format!(
        "parameters: {parameters}\n{} network: best epoch {} of {}, validation loss {:.6}, {metric}",
        args.head, report.best_epoch, report.stopped_epoch, best_record.val_loss
    ))
}

/// Search configuration flags shared by `solve-dlts` and `tune`.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SearchFlags {
    #[arg(long, default_value = "dfs")]
    pub strategy: Strategy,
    /// Branch pruning function.
    #[arg(long, default_value = "log")]
    pub prune: MpVariant,
    #[arg(long, default_value_t = 0.4)]
    pub p: f64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 0.9)]
    pub d: f64,
    /// Keep the initial maximum depth instead of tightening it to each new
    /// best solution.
    #[arg(long)]
    pub fixed_md: bool,
    /// Bin discrepancies by probability (LDS).
    #[arg(long)]
    pub binning: bool,
    #[arg(long, default_value_t = 3)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub z: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Seconds per instance.
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
    /// Run each search until its pruned tree is exhausted.
    #[arg(long)]
    pub no_time_limit: bool,
    #[arg(long)]
    pub md0: Option<usize>,
}

impl SearchFlags {
    pub fn to_config(&self) -> SearchConfig {
        SearchConfig {
            strategy: self.strategy,
            k: self.k,
            d: self.d,
            p: self.p,
            mp: self.prune,
            reactive_md: !self.fixed_md,
            binning: self.binning,
            bins: self.bins,
            z: self.z,
            alpha: self.alpha,
            gamma: self.gamma,
            time_limit: (!self.no_time_limit).then_some(self.time_limit),
            md0: self.md0,
        }
    }
}

fn load_nets(policy: &Path, value: Option<&Path>) -> Result<(Network, Option<Network>)> {
    let policy = load_weights(policy)?;
    if policy.head() != Head::Policy {
        return Err(Error::Config("--policy must be a policy network".into()));
    }
    let value = value.map(load_weights).transpose()?;
    if let Some(v) = &value {
        if v.head() != Head::Value {
            return Err(Error::Config("--value must be a value network".into()));
        }
        v.check_dims(policy.stacks(), policy.tiers())?;
    }
    Ok((policy, value))
}

fn check_instances(instances: &[Instance], policy: &Network) -> Result<()> {
    for inst in instances {
        policy
            .check_dims(inst.bay.stacks(), inst.bay.tiers())
            .map_err(|e| Error::ShapeMismatch(format!("{}: {e}", inst.id)))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveDltsArgs {
    /// Instance files or directories.
    #[arg(long = "instances", num_args = 1.., required = true)]
    pub instances: Vec<PathBuf>,
    #[arg(long)]
    pub policy: PathBuf,
    /// Without a value network no bounds are computed.
    #[arg(long)]
    pub value: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub search: SearchFlags,
    /// Results CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for solution files.
    #[arg(long)]
    pub solutions: Option<PathBuf>,
    /// Write 0 for wall-clock columns so reruns are byte-identical.
    #[arg(long)]
    pub reproducible: bool,
}

pub fn cmd_solve_dlts(args: &SolveDltsArgs) -> Result<String> {
    let config = args.search.to_config();
    config.validate()?;
    if config.strategy == Strategy::Wbs && args.value.is_none() {
        return Err(Error::Config("weighted beam search needs --value".into()));
    }
    let (policy, value) = load_nets(&args.policy, args.value.as_deref())?;
    let instances = load_instances(&args.instances)?;
    check_instances(&instances, &policy)?;
    let models = Models::new(&policy, value.as_ref().map(|v| v as &dyn ValueModel));
    let results = instances
        .par_iter()
        .map(|inst| search(&inst.bay, models, &config))
        .collect::<Result<Vec<_>>>()?;

    let mut manifest = RunManifest::new("solve-dlts", json(args));
    manifest.inputs = args.instances.clone();
    manifest.inputs.push(args.policy.clone());
    manifest.inputs.extend(args.value.clone());
    if let Some(dir) = &args.solutions {
        fs::create_dir_all(dir)?;
    }
    let mut rows = Vec::with_capacity(instances.len());
    for (inst, res) in instances.iter().zip(&results) {
        if let (Some(dir), Some(sol)) = (&args.solutions, &res.solution) {
            let path = dir.join(format!("{}.{SOLUTION_EXT}", inst.id));
            write_solution(&inst.id, sol, &path)?;
            manifest.output(&path)?;
        }
        rows.push(ResultRow {
            id: inst.id.clone(),
            class: inst.class_label(),
            moves: res.ub(),
            nodes: res.nodes_opened,
            policy_queries: res.policy_queries,
            value_queries: res.value_queries,
            time: seconds(res.wall_time, args.reproducible),
            solved: res.solution.is_some(),
        });
    }
    write_csv(&args.out, RESULTS_SCHEMA, &rows)?;
    manifest.output(&args.out)?;
    manifest.write(&sidecar(&args.out, ".manifest.json"))?;
    let solved = rows.iter().filter(|r| r.solved).count();
    Ok(format!("solved {solved} of {} instances", rows.len()))
}

/// Values tried by `tune`; every combination is one grid point.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GridSpec {
    #[arg(long, value_delimiter = ',', default_values = ["dfs", "lds", "wbs"])]
    pub strategies: Vec<Strategy>,
    #[arg(long, value_delimiter = ',', default_values = ["constant", "quadratic", "log"])]
    pub prunes: Vec<MpVariant>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])]
    pub ps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4])]
    pub ks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.75, 0.9, 1.0])]
    pub ds: Vec<f64>,
}

impl GridSpec {
    /// Grid points over `base`. Without a value network WBS is dropped and
    /// `k`, `d` collapse to their first value; WBS ignores `k`.
    pub fn points(&self, base: &SearchConfig, has_value: bool) -> Vec<SearchConfig> {
        let mut out = Vec::new();
        for &strategy in &self.strategies {
            if strategy == Strategy::Wbs && !has_value {
                continue;
            }
            let ks = if strategy == Strategy::Wbs || !has_value {
                &self.ks[..1]
            } else {
                &self.ks[..]
            };
            let ds = if has_value {
                &self.ds[..]
            } else {
                &self.ds[..1]
            };
            for &mp in &self.prunes {
                for &p in &self.ps {
                    for &k in ks {
                        for &d in ds {
                            out.push(SearchConfig {
                                strategy,
                                mp,
                                p,
                                k,
                                d,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TuneArgs {
    /// Validation instance files or directories.
    #[arg(long = "instances", num_args = 1.., required = true)]
    pub instances: Vec<PathBuf>,
    /// `oracle.csv` with reference lengths.
    #[arg(long)]
    pub oracle: PathBuf,
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub value: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridSpec,
    /// Settings not varied by the grid.
    #[command(flatten)]
    #[serde(flatten)]
    pub search: SearchFlags,
    /// Leaderboard CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the winning configuration [default: <out>.best.toml]
    #[arg(long)]
    pub best: Option<PathBuf>,
    /// Write 0 for wall-clock columns so reruns are byte-identical.
    #[arg(long)]
    pub reproducible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LeaderboardRow {
    rank: usize,
    strategy: Strategy,
    prune: MpVariant,
    p: f64,
    k: usize,
    d: f64,
    gap_percent: f64,
    unsolved: usize,
    mean_time: f64,
    nodes: u64,
}

fn reference_lengths(path: &Path) -> Result<HashMap<String, usize>> {
    Ok(read_oracle_csv(path)?
        .into_iter()
        .filter_map(|r| r.length.map(|l| (r.id, l)))
        .collect())
}

/// The winning point as a `--config` file for `solve-dlts`. Time keys are
/// left out so the caller's limit applies.
fn tuned_flags_toml(best: &SearchConfig, base: &SearchFlags) -> Result<String> {
    let flags = SearchFlags {
        strategy: best.strategy,
        prune: best.mp,
        p: best.p,
        k: best.k,
        d: best.d,
        ..base.clone()
    };
    let mut table = toml::Table::try_from(&flags).map_err(|e| Error::Config(e.to_string()))?;
    table.remove("time_limit");
    table.remove("no_time_limit");
    toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))
}

/// Ranks every grid point by gap (any unsolved instance counts as an
/// infinite gap), then mean time, then grid order. Returns the winner.
pub fn cmd_tune(args: &TuneArgs) -> Result<(SearchConfig, String)> {
    let base = args.search.to_config();
    let (policy, value) = load_nets(&args.policy, args.value.as_deref())?;
    let instances = load_instances(&args.instances)?;
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_instances(&instances, &policy)?;
    let optimal = reference_lengths(&args.oracle)?;
    let points = args.grid.points(&base, value.is_some());
    if points.is_empty() {
        return Err(Error::Config("the tuning grid is empty".into()));
    }
    let value_ref = value.as_ref().map(|v| v as &dyn ValueModel);
    let mut scored = Vec::with_capacity(points.len());
    for (index, config) in points.into_iter().enumerate() {
        config.validate()?;
        let report = validate_dlts(&policy, value_ref, &instances, &optimal, &config)?;
        let rank_gap = if report.unsolved.is_empty() {
            report.gap_percent
        } else {
            f64::INFINITY
        };
        let time = seconds(report.mean_time, args.reproducible);
        let nodes = report.outcomes.iter().map(|o| o.nodes_opened).sum();
        scored.push((
            rank_gap,
            time,
            index,
            config,
            report.gap_percent,
            report.unsolved.len(),
            nodes,
        ));
    }
    scored.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let rows: Vec<LeaderboardRow> = scored
        .iter()
        .enumerate()
        .map(|(i, s)| LeaderboardRow {
            rank: i + 1,
            strategy: s.3.strategy,
            prune: s.3.mp,
            p: s.3.p,
            k: s.3.k,
            d: s.3.d,
            gap_percent: s.4,
            unsolved: s.5,
            mean_time: s.1,
            nodes: s.6,
        })
        .collect();
    write_csv(&args.out, LEADERBOARD_SCHEMA, &rows)?;
    let best = scored[0].3.clone();
    let best_path = args
        .best
        .clone()
        .unwrap_or_else(|| sidecar(&args.out, ".best.toml"));
    fs::write(&best_path, tuned_flags_toml(&best, &args.search)?)?;

    let mut manifest = RunManifest::new("tune", json(args));
    manifest.inputs = args.instances.clone();
    manifest
        .inputs
        .extend([args.oracle.clone(), args.policy.clone()]);
    manifest.inputs.extend(args.value.clone());
    manifest.output(&args.out)?;
    manifest.output(&best_path)?;
    manifest.write(&sidecar(&args.out, ".manifest.json"))?;
    let top = &rows[0];
    let summary = format!(
        "best of {} points: {} {} p={} k={} d={} gap {:.3}% ({} unsolved)",
        rows.len(),
        top.strategy,
        top.prune,
        top.p,
        top.k,
        top.d,
        top.gap_percent,
        top.unsolved
    );
    Ok((best, summary))
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Results CSV from `solve-dlts`.
    #[arg(long)]
    pub results: PathBuf,
    /// `oracle.csv` from `solve-exact`.
    #[arg(long)]
    pub oracle: PathBuf,
    /// Gap table CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub group: String,
    pub instances: usize,
    pub unsolved: usize,
    pub dlts_moves: usize,
    pub optimal_moves: usize,
    pub gap_percent: f64,
    pub mean_time: f64,
}

fn gap_row(group: String, rows: &[(&ResultRow, usize)]) -> GapRow {
    let solved: Vec<_> = rows.iter().filter(|(r, _)| r.solved).collect();
    let dlts = solved.iter().map(|(r, _)| r.moves.unwrap_or(0)).sum();
    let opt = solved.iter().map(|(_, o)| o).sum();
    let mean_time = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|(r, _)| r.time).sum::<f64>() / rows.len() as f64
    };
    GapRow {
        group,
        instances: rows.len(),
        unsolved: rows.len() - solved.len(),
        dlts_moves: dlts,
        optimal_moves: opt,
        gap_percent: gap_percent(dlts, opt),
        mean_time,
    }
}

/// Gap table with one row per instance group plus an `all` row.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(Vec<GapRow>, String)> {
    let results = read_results_csv(&args.results)?;
    let optimal = reference_lengths(&args.oracle)?;
    let mut groups: BTreeMap<String, Vec<(&ResultRow, usize)>> = BTreeMap::new();
    let mut all = Vec::with_capacity(results.len());
    for row in &results {
        let opt = *optimal
            .get(&row.id)
            .ok_or_else(|| Error::MissingReference(row.id.clone()))?;
        groups
            .entry(row.class.clone())
            .or_default()
            .push((row, opt));
        all.push((row, opt));
    }
    let mut table: Vec<GapRow> = groups
        .into_iter()
        .map(|(g, rows)| gap_row(g, &rows))
        .collect();
    table.push(gap_row("all".into(), &all));
    write_csv(&args.out, EVAL_SCHEMA, &table)?;

    let mut manifest = RunManifest::new("evaluate", json(args));
    manifest.inputs = vec![args.results.clone(), args.oracle.clone()];
    manifest.output(&args.out)?;
    manifest.write(&sidecar(&args.out, ".manifest.json"))?;

    let mut text = format!(
        "{:<8} {:>9} {:>8} {:>8} {:>10}\n",
        "group", "instances", "unsolved", "gap (%)", "time (s)"
    );
    for r in &table {
        text.push_str(&format!(
            "{:<8} {:>9} {:>8} {:>8.3} {:>10.3}\n",
            r.group, r.instances, r.unsolved, r.gap_percent, r.mean_time
        ));
    }
    Ok((table, text.trim_end().to_string()))
}

/// Reads a gap table written by `evaluate`.
pub fn read_gap_table(path: impl AsRef<Path>) -> Result<Vec<GapRow>> {
    read_csv(path.as_ref(), EVAL_SCHEMA)
}

//! `ldts` command-line interface.
//!
//! Exit codes: 0 on success, 1 on runtime or I/O failure, 2 on usage errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::data::{generate_synthetic, load_dataset, save_dataset, SynthConfig};
use crate::error::{LdtsError, Result};
use crate::pacing::{pacing_fraction, PacingConfig, PacingKind};
use crate::trainer::{train, write_telemetry, PreparedData, Strategy, TrainConfig, TrainOutcome};

#[derive(Debug, Parser)]
#[command(
    name = "ldts",
    version,
    about = "Loss-decrease-aware curriculum training"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Random seed (dataset seed for `generate`, training seed for `train`).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Omit the timestamp comment line from results.csv.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// Flat `key=value` file of flag defaults; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset directory.
    Generate(GenerateArgs),
    /// Train one strategy on a dataset.
    Train(TrainArgs),
    /// Run a strategy × seed grid and summarise it.
    Compare(CompareArgs),
    /// Print the pacing schedule as `epoch,fraction` CSV.
    PacingTable(PacingArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Fraction of train labels to corrupt.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 2)]
    pub aux_types: usize,
    /// Nodes per auxiliary type (0 = max(classes, n/4)).
    #[arg(long, default_value_t = 0)]
    pub aux_nodes: usize,
    #[arg(long, default_value_t = 3)]
    pub edges_per_node: usize,
    #[arg(long, default_value_t = 0.7)]
    pub homophily: f64,
    #[arg(long, default_value_t = 0.6)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    pub val_frac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Plain,
    #[value(alias = "absolute")]
    Clgnn,
    Ldts,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Plain => Strategy::Plain,
            StrategyArg::Clgnn => Strategy::AbsoluteLossCurriculum,
            StrategyArg::Ldts => Strategy::LossDecreaseCurriculum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Linear,
    Root,
    #[value(alias = "geometric")]
    Geom,
}

impl From<KindArg> for PacingKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Linear => PacingKind::Linear,
            KindArg::Root => PacingKind::Root,
            KindArg::Geom => PacingKind::Geometric,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Hyperparams {
    #[arg(long, value_enum, default_value_t = KindArg::Linear)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0.25)]
    pub lambda0: f64,
    /// Epoch at which the schedule reaches the full training set.
    #[arg(long = "T", default_value_t = 100)]
    pub saturation: usize,
    #[arg(long, default_value_t = 0.2)]
    pub lr: f64,
    #[arg(long, default_value_t = 400)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub patience: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
}

impl Hyperparams {
    fn train_config(&self, strategy: Strategy, seed: u64) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            strategy,
            pacing: PacingConfig::new(self.kind.into(), self.lambda0, self.saturation)?,
            lr: self.lr,
            max_epochs: self.max_epochs,
            patience: self.patience,
            hidden_dim: self.hidden,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub strategy: StrategyArg,
    #[command(flatten)]
    pub hyper: Hyperparams,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [StrategyArg::Plain, StrategyArg::Clgnn, StrategyArg::Ldts])]
    pub strategies: Vec<StrategyArg>,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub hyper: Hyperparams,
}

#[derive(Debug, Args)]
pub struct PacingArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub lambda0: f64,
    #[arg(long = "T")]
    pub saturation: usize,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(&cli, a),
        Command::Train(a) => cmd_train(&cli, a),
        Command::Compare(a) => cmd_compare(&cli, a),
        Command::PacingTable(a) => cmd_pacing_table(a),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = Cli::command()
                .error(clap::error::ErrorKind::MissingRequiredArgument, msg)
                .print();
            2
        }
        Err(CliError::Config(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(LdtsError),
    Runtime(LdtsError),
}

impl From<LdtsError> for CliError {
    fn from(e: LdtsError) -> Self {
        CliError::Runtime(e)
    }
}

fn config_error(e: LdtsError) -> CliError {
    match e {
        LdtsError::Config(_) => CliError::Config(e),
        other => CliError::Runtime(other),
    }
}

/// Inserts `--key=value` tokens from a `--config` file right after the
/// subcommand name, so that flags given on the command line override them.
fn expand_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let mut path = None;
    for (i, arg) in args.iter().enumerate() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let mut extra = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), lineno + 1))?;
        let (key, value) = (key.trim().trim_start_matches("--"), value.trim());
        match value {
            "true" => extra.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => extra.push(OsString::from(format!("--{key}={value}"))),
        }
    }
    let subcommands = ["generate", "train", "compare", "pacing-table"];
    let pos = args
        .iter()
        .position(|a| subcommands.contains(&a.to_string_lossy().as_ref()))
        .map_or(args.len(), |p| p + 1);
    let mut out = args[..pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos..]);
    Ok(out)
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs) -> std::result::Result<(), CliError> {
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| CliError::Usage("`generate` requires --out <DIR>".into()))?;
    let cfg = SynthConfig {
        n_target: a.n,
        class_count: a.classes,
        feature_dim: a.dim,
        cluster_separation: a.separation,
        noise_fraction: a.noise,
        aux_types: a.aux_types,
        aux_nodes_per_type: a.aux_nodes,
        edges_per_node: a.edges_per_node,
        homophily: a.homophily,
        train_fraction: a.train_frac,
        val_fraction: a.val_frac,
        seed: cli.seed,
    };
    let ds = generate_synthetic(&cfg).map_err(config_error)?;
    save_dataset(&ds, out)?;
    let noisy = ds
        .noisy
        .as_ref()
        .map_or(0, |f| f.iter().filter(|x| **x).count());
    println!(
        "wrote {} nodes, {} classes, {} relations, {} noisy train labels to {}",
        ds.node_count(),
        ds.class_count,
        ds.relations.len(),
        noisy,
        out.display()
    );
    Ok(())
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| LdtsError::io(&dir, e))?;
    Ok(dir)
}

fn load_prepared(dir: &Path) -> Result<PreparedData> {
    let ds = load_dataset(dir)?;
    PreparedData::from_dataset(&ds)
}

/// One line of results.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub strategy: Strategy,
    pub seed: u64,
    pub kind: PacingKind,
    pub lambda0: f64,
    pub saturation: usize,
    pub lr: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val: f64,
    pub test_at_best: f64,
}

pub const RESULTS_HEADER: &str =
    "strategy,seed,kind,lambda0,T,lr,best_epoch,epochs_run,best_val,test_at_best";

impl RunSummary {
    fn new(cfg: &TrainConfig, outcome: &TrainOutcome) -> Self {
        let best = outcome.best_report();
        RunSummary {
            strategy: cfg.strategy,
            seed: cfg.seed,
            kind: cfg.pacing.kind(),
            lambda0: cfg.pacing.lambda0(),
            saturation: cfg.pacing.saturation_epoch(),
            lr: cfg.lr,
            best_epoch: outcome.best_epoch,
            epochs_run: outcome.reports.len(),
            best_val: best.val_accuracy,
            test_at_best: best.test_accuracy,
        }
    }

    fn key(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.strategy, self.seed, self.kind, self.lambda0, self.saturation, self.lr
        )
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.key(),
            self.best_epoch,
            self.epochs_run,
            self.best_val,
            self.test_at_best
        )
    }
}

fn timestamp_line() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("# generated_unix={secs}\n")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| LdtsError::io(path, e))
}

fn run_one(
    data: &PreparedData,
    cfg: &TrainConfig,
    out: &Path,
) -> Result<(RunSummary, TrainOutcome)> {
    let outcome = train(cfg, data)?;
    let stem = format!("{}_seed{}", cfg.strategy, cfg.seed);
    write_telemetry(&out.join(format!("telemetry_{stem}.csv")), &outcome.reports)?;
    outcome
        .params
        .save(&out.join(format!("model_{stem}.bin")))?;
    Ok((RunSummary::new(cfg, &outcome), outcome))
}

fn cmd_train(cli: &Cli, a: &TrainArgs) -> std::result::Result<(), CliError> {
    let cfg = a
        .hyper
        .train_config(a.strategy.into(), cli.seed)
        .map_err(config_error)?;
    let data = load_prepared(&a.data)?;
    let out = out_dir(cli)?;
    let (summary, _) = run_one(&data, &cfg, &out)?;

    // replace any earlier line for the same configuration, append otherwise
    let results = out.join("results.csv");
    let mut rows: Vec<String> = match fs::read_to_string(&results) {
        Ok(text) => text
            .lines()
            .filter(|l| !l.starts_with('#') && *l != RESULTS_HEADER && !l.is_empty())
            .map(str::to_string)
            .collect(),
        Err(_) => Vec::new(),
    };
    let key = format!("{},", summary.key());
    match rows.iter().position(|r| r.starts_with(&key)) {
        Some(i) => rows[i] = summary.csv_row(),
        None => rows.push(summary.csv_row()),
    }
    let mut text = String::new();
    if !cli.no_timestamp {
        text.push_str(&timestamp_line());
    }
    text.push_str(RESULTS_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    write_file(&results, &text)?;
    println!("val={} test={}", summary.best_val, summary.test_at_best);
    Ok(())
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `strategy, valid, test` table with `mean ± std` cells.
pub fn summary_table(rows: &[RunSummary], strategies: &[Strategy]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10}{:<20}{:<20}", "strategy", "valid", "test");
    for &s in strategies {
        let val: Vec<f64> = rows
            .iter()
            .filter(|r| r.strategy == s)
            .map(|r| r.best_val)
            .collect();
        let test: Vec<f64> = rows
            .iter()
            .filter(|r| r.strategy == s)
            .map(|r| r.test_at_best)
            .collect();
        if val.is_empty() {
            continue;
        }
        let (vm, vs) = mean_std(&val);
        let (tm, ts) = mean_std(&test);
        let _ = writeln!(
            out,
            "{:<10}{:<20}{:<20}",
            s.as_str(),
            format!("{vm:.4} ± {vs:.4}"),
            format!("{tm:.4} ± {ts:.4}")
        );
    }
    out
}

fn cmd_compare(cli: &Cli, a: &CompareArgs) -> std::result::Result<(), CliError> {
    if a.strategies.is_empty() || a.seeds.is_empty() {
        return Err(CliError::Usage(
            "need at least one strategy and one seed".into(),
        ));
    }
    let mut strategies: Vec<Strategy> = Vec::new();
    for s in &a.strategies {
        let s = Strategy::from(*s);
        if !strategies.contains(&s) {
            strategies.push(s);
        }
    }
    let grid: Vec<TrainConfig> = strategies
        .iter()
        .flat_map(|&s| a.seeds.iter().map(move |&seed| (s, seed)))
        .map(|(s, seed)| a.hyper.train_config(s, seed))
        .collect::<Result<_>>()
        .map_err(config_error)?;
    let data = load_prepared(&a.data)?;
    let out = out_dir(cli)?;

    // identical (strategy, seed) pairs write identical per-run files, so
    // parallel duplicates are harmless
    let rows: Vec<RunSummary> = grid
        .par_iter()
        .map(|cfg| run_one(&data, cfg, &out).map(|(s, _)| s))
        .collect::<Result<_>>()?;

    let mut text = String::new();
    if !cli.no_timestamp {
        text.push_str(&timestamp_line());
    }
    text.push_str(RESULTS_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    write_file(&out.join("results.csv"), &text)?;

    let table = summary_table(&rows, &strategies);
    write_file(&out.join("summary.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_pacing_table(a: &PacingArgs) -> std::result::Result<(), CliError> {
    let cfg = PacingConfig::new(a.kind.into(), a.lambda0, a.saturation).map_err(config_error)?;
    let mut out = String::from("epoch,fraction\n");
    for t in 0..=cfg.saturation_epoch() {
        let _ = writeln!(out, "{t},{}", pacing_fraction(&cfg, t));
    }
    print!("{out}");
    Ok(())
}

//! Command-line front end: JSON config parsing with whole-file validation,
//! one subcommand per experiment, and deterministic atomic file outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, split, synth_generate, write_csv, Dataset, SynthSpec};
use crate::experiments::{
    black_swan_surface, checkpoint_pool, decouple_experiment, donor_orders, manipulate_sweep,
    mitigation_compare, prediction_change_tracking, run_parallel, seeds_for, single_run_proxy,
    suffix_finetune, uncertainty_profile, DecoupleMode, ExperimentReport, NamedTable, PostOrder,
    RunSeeds, Setup, SuffixVariant,
};
use crate::metrics::MetricRecord;
use crate::nn::{DataSplits, LossConfig, Retention, TrainConfig};
use crate::stats::{MetricKind, Trajectory};

/// Exit code 1: the config or flags are invalid (all violations listed).
/// Exit code 2: a runtime failure after validation passed.
#[derive(Debug)]
pub enum CliError {
    Validation(Vec<String>),
    Runtime(String),
}

impl CliError {
    fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

macro_rules! rt {
    ($expr:expr) => {
        $expr.map_err(CliError::runtime)?
    };
}

#[derive(Debug, Parser)]
#[command(name = "fairlab", version, about = "Fairness-variance laboratory for small classifiers")]
pub struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Scale preset overriding epochs/window/runs.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Max worker threads for run-level parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    pub master_seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 150 epochs, record window [80, 150], 10 runs.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    BothRandom,
    FixedReshuffle,
    FixedWeightInit,
}

impl From<ModeArg> for DecoupleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::BothRandom => DecoupleMode::BothRandom,
            ModeArg::FixedReshuffle => DecoupleMode::FixedReshuffle,
            ModeArg::FixedWeightInit => DecoupleMode::FixedWeightInit,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the configured synthetic dataset to data.csv.
    Generate,
    /// Train one or more runs and emit their trajectories.
    Train {
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Decouple weight-init randomness from reshuffle randomness.
    Decouple {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Track cumulative per-subgroup prediction changes over the window.
    Changes,
    /// Per-subgroup MC-dropout uncertainty profile of a trained model.
    Uncertainty,
    /// Suffix fine-tuning sweep over b common final batches.
    Suffix,
    /// Subgroup-accuracy manipulation via ratio-controlled orders.
    Manipulate,
    /// KS comparison: across-run finals vs one run's window.
    Proxy,
    /// Black-swan quality surface over (epochs kept, runs sampled).
    Blackswan,
    /// Mitigation grid: {baseline, reweighing, eo loss} x post orders.
    Mitigate,
    /// Metrics of a predictions CSV (columns: pred, label, sensitive).
    Metrics {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "pred")]
        pred_column: String,
        #[arg(long, default_value = "label")]
        label_column: String,
        #[arg(long, default_value = "sensitive")]
        sensitive_column: String,
    },
}

/// Loss selection in configs; reweighing weights are derived from the
/// training split at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossChoice {
    PlainCe,
    Reweighing,
    CePlusEo { lambda: f64 },
}

impl Default for LossChoice {
    fn default() -> Self {
        LossChoice::PlainCe
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SynthSpec),
    Csv {
        path: PathBuf,
        label_column: String,
        sensitive_column: String,
    },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SynthSpec::default())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            ratios: [0.7, 0.1, 0.2],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout_rate: f64,
    pub loss: LossChoice,
    pub record_window: (usize, usize),
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            hidden_sizes: d.hidden_sizes,
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            epochs: d.epochs,
            dropout_rate: d.dropout_rate,
            loss: LossChoice::PlainCe,
            record_window: d.record_window,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub n_runs: usize,
    pub mode: DecoupleMode,
    pub b_values: Vec<usize>,
    pub ratio_values: Vec<f64>,
    /// None: the minority-positive sensitive group.
    pub varied_group: Option<u8>,
    pub t_max: usize,
    pub s_max: usize,
    pub repeats: usize,
    pub passes: usize,
    pub n_checkpoints: usize,
    pub pool_runs: usize,
    pub suffix_variant: SuffixVariant,
    pub lambda: f64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            n_runs: 10,
            mode: DecoupleMode::BothRandom,
            b_values: vec![0, 1, 2, 5, 10, 20, 50],
            ratio_values: vec![0.125, 1.0 / 3.0, 1.0, 3.0, 8.0],
            varied_group: None,
            t_max: 10,
            s_max: 5,
            repeats: 3,
            passes: 1000,
            n_checkpoints: 40,
            pool_runs: 8,
            suffix_variant: SuffixVariant::LastBatches,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub dataset: DatasetSource,
    pub split: SplitSection,
    pub train: TrainSection,
    pub experiment: ExperimentParams,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Validation(problems)) => {
            for p in &problems {
                eprintln!("config error: {p}");
            }
            1
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfigFile, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Validation(vec![format!("cannot read {}: {e}", path.display())])
            })?;
            serde_json::from_str::<RunConfigFile>(&text)
                .map_err(|e| CliError::Validation(vec![format!("invalid config: {e}")]))?
        }
        None => RunConfigFile::default(),
    };
    if let Some(Preset::Desk) = cli.preset {
        config.train.epochs = 150;
        config.train.record_window = (80, 150);
        config.experiment.n_runs = 10;
    }
    if let Some(seed) = cli.master_seed {
        config.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.clone());
    }
    Ok(config)
}

fn output_dir(config: &RunConfigFile) -> PathBuf {
    config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_dataset(config: &RunConfigFile) -> Result<Dataset, CliError> {
    match &config.dataset {
        DatasetSource::Synthetic(spec) => synth_generate(spec).map_err(CliError::runtime),
        DatasetSource::Csv {
            path,
            label_column,
            sensitive_column,
        } => load_csv(path, label_column, sensitive_column).map_err(CliError::runtime),
    }
}

fn make_splits(config: &RunConfigFile, dataset: &Dataset) -> Result<DataSplits, CliError> {
    let (train, val, test) = rt!(split(dataset, config.split.ratios, config.split.seed));
    Ok(DataSplits { train, val, test })
}

/// Resolves the config's loss choice against the training split.
fn resolve_loss(choice: &LossChoice, train: &Dataset) -> Result<LossConfig, CliError> {
    Ok(match choice {
        LossChoice::PlainCe => LossConfig::PlainCe,
        LossChoice::Reweighing => LossConfig::WeightedCe {
            weights: rt!(crate::data::reweighing_weights(train)),
        },
        LossChoice::CePlusEo { lambda } => LossConfig::CePlusEo { lambda: *lambda },
    })
}

fn base_train_config(config: &RunConfigFile, train: &Dataset) -> Result<TrainConfig, CliError> {
    let t = &config.train;
    let (w, s) = seeds_for(config.master_seed, 0);
    Ok(TrainConfig {
        hidden_sizes: t.hidden_sizes.clone(),
        learning_rate: t.learning_rate,
        batch_size: t.batch_size,
        epochs: t.epochs,
        dropout_rate: t.dropout_rate,
        weight_seed: w,
        shuffle_seed: s,
        loss: resolve_loss(&t.loss, train)?,
        record_window: t.record_window,
    })
}

/// Every violated precondition across the config, reported at once.
fn validate(config: &RunConfigFile, command: &Command, train_size: usize) -> Result<(), CliError> {
    let mut problems = Vec::new();
    let ratios = config.split.ratios;
    if ratios.iter().any(|&r| r <= 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        problems.push(format!(
            "split ratios {ratios:?} must be positive and sum to 1"
        ));
    }
    // the seed fields do not affect validity; use a throwaway config
    let probe = TrainConfig {
        hidden_sizes: config.train.hidden_sizes.clone(),
        learning_rate: config.train.learning_rate,
        batch_size: config.train.batch_size,
        epochs: config.train.epochs,
        dropout_rate: config.train.dropout_rate,
        loss: LossConfig::PlainCe,
        record_window: config.train.record_window,
        ..TrainConfig::default()
    };
    if let Err(e) = probe.validate(train_size) {
        problems.push(e.to_string());
    }
    if let LossChoice::CePlusEo { lambda } = config.train.loss {
        if !(lambda >= 0.0) {
            problems.push(format!("loss lambda {lambda} must be nonnegative"));
        }
    }
    let exp = &config.experiment;
    match command {
        Command::Generate => {
            if matches!(config.dataset, DatasetSource::Csv { .. }) {
                problems.push("generate requires a synthetic dataset source".into());
            }
        }
        Command::Decouple { runs, .. } => {
            if runs.unwrap_or(exp.n_runs) < 2 {
                problems.push("decouple needs n_runs >= 2".into());
            }
        }
        Command::Train { runs } => {
            if runs.unwrap_or(1) < 1 {
                problems.push("train needs runs >= 1".into());
            }
        }
        Command::Uncertainty => {
            if !(config.train.dropout_rate > 0.0) {
                problems.push("uncertainty needs dropout_rate > 0".into());
            }
            if exp.passes < 2 {
                problems.push("uncertainty needs passes >= 2".into());
            }
        }
        Command::Suffix => {
            if exp.b_values.is_empty() {
                problems.push("suffix needs nonempty b_values".into());
            }
            let per_epoch = train_size.div_ceil(config.train.batch_size.max(1));
            if let Some(&bad) = exp.b_values.iter().find(|&&b| b > per_epoch) {
                problems.push(format!("b value {bad} exceeds {per_epoch} batches per epoch"));
            }
            if exp.n_checkpoints == 0 || exp.pool_runs == 0 {
                problems.push("suffix needs n_checkpoints >= 1 and pool_runs >= 1".into());
            }
        }
        Command::Manipulate => {
            if exp.ratio_values.is_empty() || exp.ratio_values.iter().any(|&r| !(r > 0.0)) {
                problems.push("manipulate needs positive ratio_values".into());
            }
            if let Some(g) = exp.varied_group {
                if g > 1 {
                    problems.push(format!("varied_group must be 0 or 1, got {g}"));
                }
            }
            if exp.n_checkpoints == 0 || exp.pool_runs == 0 {
                problems.push("manipulate needs n_checkpoints >= 1 and pool_runs >= 1".into());
            }
        }
        Command::Proxy => {
            if exp.n_runs < 5 {
                problems.push("proxy needs n_runs >= 5".into());
            }
            let (t1, t2) = config.train.record_window;
            if t2.saturating_sub(t1) + 1 < 5 {
                problems.push("proxy needs a record window of at least 5 epochs".into());
            }
        }
        Command::Blackswan => {
            if exp.t_max < 1 || exp.s_max < 1 || exp.repeats < 1 {
                problems.push("blackswan needs t_max, s_max, repeats >= 1".into());
            }
            if exp.t_max > config.train.epochs {
                problems.push(format!(
                    "t_max {} exceeds {} training epochs",
                    exp.t_max, config.train.epochs
                ));
            }
        }
        Command::Mitigate => {
            if exp.n_runs < 3 {
                problems.push("mitigate needs n_runs >= 3".into());
            }
            if !(exp.lambda >= 0.0) {
                problems.push(format!("lambda {} must be nonnegative", exp.lambda));
            }
        }
        Command::Changes | Command::Metrics { .. } => {}
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(problems))
    }
}

/// Write-temp-then-rename so outputs are never observed half-written.
fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    rt!(fs::write(&tmp, contents));
    rt!(fs::rename(&tmp, path));
    Ok(())
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s =
        String::from("epoch,f1,avg_odds,eopp,dp,acc,acc_a0y1,acc_a0y0,acc_a1y1,acc_a1y0\n");
    for r in &traj.records {
        let _ = writeln!(
            s,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.epoch,
            r.f1,
            r.avg_odds,
            r.eopp,
            r.dp,
            r.accuracy,
            r.subgroup_acc[0],
            r.subgroup_acc[3],
            r.subgroup_acc[1],
            r.subgroup_acc[2],
        );
    }
    s
}

fn table_csv(table: &NamedTable) -> String {
    let mut s = table.columns.join(",");
    s.push('\n');
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn write_report(dir: &Path, report: &ExperimentReport) -> Result<(), CliError> {
    rt!(fs::create_dir_all(dir));
    let json = rt!(serde_json::to_string_pretty(report));
    atomic_write(&dir.join("report.json"), &(json + "\n"))?;
    for table in &report.tables {
        atomic_write(&dir.join(format!("{}.csv", table.name)), &table_csv(table))?;
    }
    for traj in &report.trajectories {
        atomic_write(
            &dir.join(format!("trajectory_{}.csv", traj.run_id)),
            &trajectory_csv(traj),
        )?;
    }
    Ok(())
}

fn config_value(config: &RunConfigFile) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(config).map_err(CliError::runtime)
}

fn schedule_seeds(master: u64, n: usize) -> Vec<RunSeeds> {
    (0..n)
        .map(|i| {
            let (w, s) = seeds_for(master, i);
            RunSeeds {
                run_id: i,
                weight_seed: w,
                shuffle_seed: s,
            }
        })
        .collect()
}

fn configs_for(base: &TrainConfig, master: u64, n: usize) -> Vec<TrainConfig> {
    (0..n)
        .map(|i| {
            let (w, s) = seeds_for(master, i);
            TrainConfig {
                weight_seed: w,
                shuffle_seed: s,
                ..base.clone()
            }
        })
        .collect()
}

fn minority_positive_group(train: &Dataset) -> u8 {
    let counts = train.subgroup_counts();
    // canonical order: index 0 is (0,1), index 1 is (1,1)
    u8::from(counts[1] < counts[0])
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        // best effort: the global pool may already exist in-process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let config = load_config(&cli)?;
    let dir = output_dir(&config);

    if let Command::Metrics {
        input,
        pred_column,
        label_column,
        sensitive_column,
    } = &cli.command
    {
        return cmd_metrics(&config, &dir, input, pred_column, label_column, sensitive_column);
    }

    let dataset = load_dataset(&config)?;
    if let Command::Generate = cli.command {
        validate(&config, &cli.command, dataset.n())?;
        rt!(fs::create_dir_all(&dir));
        let tmp = dir.join("data.csv.tmp");
        rt!(write_csv(&dataset, &tmp));
        rt!(fs::rename(&tmp, dir.join("data.csv")));
        println!("wrote {} rows to {}", dataset.n(), dir.join("data.csv").display());
        return Ok(());
    }

    let splits = make_splits(&config, &dataset)?;
    validate(&config, &cli.command, splits.train.n())?;
    let base = base_train_config(&config, &splits.train)?;
    rt!(base.validate(splits.train.n()));
    let master = config.master_seed;
    let exp = config.experiment.clone();

    let mut report = ExperimentReport::new(command_name(&cli.command), master, config_value(&config)?);
    match &cli.command {
        Command::Train { runs } => {
            let n = runs.unwrap_or(1);
            let configs = configs_for(&base, master, n);
            let outputs = rt!(run_parallel(&splits, &configs, Retention::None));
            report.seeds = schedule_seeds(master, n);
            let mut finals = NamedTable::new(
                "finals",
                &["run_id", "f1", "avg_odds", "eopp", "dp", "acc"],
            );
            for out in &outputs {
                let r = out.trajectory.final_record().ok_or_else(|| {
                    CliError::Runtime("training produced no epochs".into())
                })?;
                finals.push(vec![
                    out.trajectory.run_id as f64,
                    r.f1,
                    r.avg_odds,
                    r.eopp,
                    r.dp,
                    r.accuracy,
                ]);
            }
            report.tables.push(finals);
            report.trajectories = outputs.into_iter().map(|o| o.trajectory).collect();
        }
        Command::Decouple { mode, runs } => {
            let mode = mode.map_or(exp.mode, DecoupleMode::from);
            let n = runs.unwrap_or(exp.n_runs);
            let result = rt!(decouple_experiment(&splits, &base, n, mode, master));
            report.seeds = result.seeds.clone();
            report.tables = result.tables();
            report.trajectories = result.trajectories;
        }
        Command::Changes => {
            let configs = configs_for(&base, master, 1);
            let outputs = rt!(run_parallel(&splits, &configs, Retention::Window));
            report.seeds = schedule_seeds(master, 1);
            let tracking = rt!(prediction_change_tracking(
                &outputs[0].checkpoints,
                &splits.test
            ));
            report.tables = tracking.tables();
        }
        Command::Uncertainty => {
            let configs = configs_for(&base, master, 1);
            let outputs = rt!(run_parallel(&splits, &configs, Retention::None));
            report.seeds = schedule_seeds(master, 1);
            let profile = rt!(uncertainty_profile(
                &outputs[0].model,
                &splits.test,
                exp.passes,
                base.dropout_rate,
                master,
            ));
            report.tables = profile.tables();
        }
        Command::Suffix => {
            let reference = rt!(run_parallel(
                &splits,
                &configs_for(&base, master, 1),
                Retention::None
            ));
            let (best, worst, best_epoch, worst_epoch) = rt!(donor_orders(
                splits.train.n(),
                reference[0].trajectory.shuffle_seed,
                &reference[0].val_avg_odds,
            ));
            let pool = rt!(checkpoint_pool(
                &splits,
                &base,
                exp.pool_runs,
                exp.n_checkpoints,
                master,
            ));
            report.seeds = schedule_seeds(master, exp.pool_runs);
            for (donor, order, epoch) in
                [("suffix_best", &best, best_epoch), ("suffix_worst", &worst, worst_epoch)]
            {
                let sweep = rt!(suffix_finetune(
                    &splits,
                    &pool,
                    order,
                    &exp.b_values,
                    &base,
                    exp.suffix_variant,
                ));
                let mut tables = sweep.tables();
                tables[0].name = donor.to_string();
                report.tables.append(&mut tables);
                let mut donors = NamedTable::new(&format!("{donor}_epoch"), &["epoch"]);
                donors.push(vec![epoch as f64]);
                report.tables.push(donors);
            }
        }
        Command::Manipulate => {
            let pool = rt!(checkpoint_pool(
                &splits,
                &base,
                exp.pool_runs,
                exp.n_checkpoints,
                master,
            ));
            report.seeds = schedule_seeds(master, exp.pool_runs);
            let varied = exp
                .varied_group
                .unwrap_or_else(|| minority_positive_group(&splits.train));
            let sweep = rt!(manipulate_sweep(
                &splits,
                &pool,
                &exp.ratio_values,
                varied,
                &base,
                master,
            ));
            report.tables = sweep.tables();
        }
        Command::Proxy => {
            let configs = configs_for(&base, master, exp.n_runs);
            let outputs = rt!(run_parallel(&splits, &configs, Retention::None));
            report.seeds = schedule_seeds(master, exp.n_runs);
            let finals: Vec<f64> = outputs
                .iter()
                .map(|o| {
                    o.trajectory
                        .final_record()
                        .map(|r| r.avg_odds)
                        .ok_or_else(|| CliError::Runtime("empty trajectory".into()))
                })
                .collect::<Result<_, _>>()?;
            let (t1, t2) = base.record_window;
            let window = rt!(outputs[0].trajectory.window(t1, t2, MetricKind::AvgOdds));
            let result = rt!(single_run_proxy(&finals, &window));
            report.tables = result.tables();
            println!("KS D = {:.6}, p = {:.6}", result.ks_d, result.p_value);
        }
        Command::Blackswan => {
            let surface = rt!(black_swan_surface(
                &splits,
                &base,
                exp.t_max,
                exp.s_max,
                exp.repeats,
                master,
            ));
            report.seeds = schedule_seeds(master, exp.s_max * exp.repeats);
            report.tables = surface.tables();
        }
        Command::Mitigate => {
            let setups = [
                Setup::Baseline,
                Setup::Reweighing,
                Setup::EoLoss { lambda: exp.lambda },
            ];
            let posts = [PostOrder::None, PostOrder::Equal, PostOrder::Adv];
            let result = rt!(mitigation_compare(
                &splits,
                &base,
                &setups,
                &posts,
                exp.n_runs,
                master,
            ));
            report.seeds = result.seeds.clone();
            report.tables = result.tables();
        }
        Command::Generate | Command::Metrics { .. } => unreachable!("handled above"),
    }
    write_report(&dir, &report)?;
    println!("wrote report to {}", dir.join("report.json").display());
    Ok(())
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Generate => "generate",
        Command::Train { .. } => "train",
        Command::Decouple { .. } => "decouple",
        Command::Changes => "changes",
        Command::Uncertainty => "uncertainty",
        Command::Suffix => "suffix",
        Command::Manipulate => "manipulate",
        Command::Proxy => "proxy",
        Command::Blackswan => "blackswan",
        Command::Mitigate => "mitigate",
        Command::Metrics { .. } => "metrics",
    }
}

fn cmd_metrics(
    config: &RunConfigFile,
    dir: &Path,
    input: &Path,
    pred_column: &str,
    label_column: &str,
    sensitive_column: &str,
) -> Result<(), CliError> {
    let mut reader = rt!(csv::Reader::from_path(input));
    let headers: Vec<String> = rt!(reader.headers()).iter().map(str::to_string).collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Validation(vec![format!("missing column '{name}'")]))
    };
    let (pi, li, si) = (col(pred_column)?, col(label_column)?, col(sensitive_column)?);
    let parse = |field: &str, row: usize, name: &str| -> Result<u8, CliError> {
        match field.trim() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(CliError::Runtime(format!(
                "row {row}, column {name}: expected 0 or 1, got '{other}'"
            ))),
        }
    };
    let mut preds = Vec::new();
    let mut labels = Vec::new();
    let mut sensitive = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = rt!(record);
        preds.push(parse(&record[pi], r + 1, pred_column)?);
        labels.push(parse(&record[li], r + 1, label_column)?);
        sensitive.push(parse(&record[si], r + 1, sensitive_column)?);
    }
    let rec = rt!(MetricRecord::compute(1, &preds, &labels, &sensitive));
    println!(
        "f1 = {:.6}, avg_odds = {:.6}, eopp = {:.6}, dp = {:.6}, acc = {:.6}",
        rec.f1, rec.avg_odds, rec.eopp, rec.dp, rec.accuracy
    );
    let mut report = ExperimentReport::new("metrics", config.master_seed, config_value(config)?);
    let mut table = NamedTable::new("metrics", &["f1", "avg_odds", "eopp", "dp", "acc"]);
    table.push(vec![rec.f1, rec.avg_odds, rec.eopp, rec.dp, rec.accuracy]);
    report.tables.push(table);
    write_report(dir, &report)
}

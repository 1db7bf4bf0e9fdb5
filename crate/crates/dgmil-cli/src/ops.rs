//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ArgMatches;
use serde::Serialize;
use sha2::{Digest, Sha256};

use dgmil::bundle::{ModelBundle, RoundLogEntry};
use dgmil::data::{BagLabel, Dataset, InstanceLabel};
use dgmil::error::{Error, Result};
use dgmil::io::{read_feature_file, write_atomic, write_feature_file};
use dgmil::metrics::{evaluate, Evaluation, MetricsReport, ThresholdSource};
use dgmil::refinement::{refine, RefineConfig, TrainHyper};
use dgmil::synthetic::{generate, SyntheticConfig};
use dgmil::ExecMode;

use crate::cfg::{resolve, resolve_opt, FileConfig};
use crate::{AblateArgs, Cli, Command, EvalArgs, GenerateArgs, InspectArgs, TrainArgs};

const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Globals after precedence resolution.
struct Globals {
    seed: u64,
    mode: ExecMode,
    quiet: bool,
}

pub fn dispatch(cli: &Cli, matches: &ArgMatches) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    let (_, sub) = matches
        .subcommand()
        .expect("clap enforces a subcommand");
    let mode_cli: ExecMode = cli.mode.parse()?;
    let globals = Globals {
        seed: resolve(sub, &file, "seed", cli.seed)?,
        mode: resolve(sub, &file, "mode", mode_cli)?,
        quiet: resolve(sub, &file, "quiet", cli.quiet)?,
    };
    match &cli.command {
        Command::Generate(args) => run_generate(args, sub, &file, &globals),
        Command::Train(args) => run_train(args, sub, &file, &globals),
        Command::Eval(args) => run_eval(args, sub, &file, &globals),
        Command::Ablate(args) => run_ablate(args, sub, &file, &globals),
        Command::Inspect(args) => run_inspect(args, &file),
    }
}

fn required(path: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.ok_or_else(|| Error::Config(format!("--{flag} is required (flag or config key)")))
}

fn json_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(value).expect("serializable record");
    bytes.push(b'\n');
    bytes
}

// ---------------------------------------------------------------- generate

#[derive(Serialize)]
struct GeneratedFile {
    path: String,
    sha256: String,
    n_instances: usize,
    n_bags: usize,
    n_positive_bags: usize,
}

#[derive(Serialize)]
struct Manifest {
    artifact_version: String,
    command: String,
    mode: ExecMode,
    config: SyntheticConfig,
    train: GeneratedFile,
    test: GeneratedFile,
}

fn describe_written(path: &Path, dataset: &Dataset) -> Result<GeneratedFile> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(GeneratedFile {
        path: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string()),
        sha256: hex::encode(Sha256::digest(&bytes)),
        n_instances: dataset.instances.len(),
        n_bags: dataset.bags.len(),
        n_positive_bags: dataset.bags.positive_count(),
    })
}

fn run_generate(
    args: &GenerateArgs,
    sub: &ArgMatches,
    file: &FileConfig,
    globals: &Globals,
) -> Result<()> {
    let config = SyntheticConfig {
        dim: resolve(sub, file, "dim", args.dim)?,
        phenotypes: resolve(sub, file, "phenotypes", args.phenotypes)?,
        neg_bags: resolve(sub, file, "neg_bags", args.neg_bags)?,
        pos_bags: resolve(sub, file, "pos_bags", args.pos_bags)?,
        bag_size: resolve(sub, file, "bag_size", args.bag_size)?,
        witness_rate: resolve(sub, file, "witness_rate", args.witness_rate)?,
        separation: resolve(sub, file, "separation", args.separation)?,
        entangle: resolve(sub, file, "entangle", args.entangle)?,
        distractor_dims: resolve(sub, file, "distractor_dims", args.distractor_dims)?,
        seed: globals.seed,
    };
    let out_dir = required(resolve_opt(sub, file, "out_dir", args.out_dir.clone())?, "out-dir")?;
    file.check_fully_used()?;
    config.validate()?;

    let split = generate(&config)?;
    fs::create_dir_all(&out_dir).map_err(|source| Error::Io {
        path: out_dir.clone(),
        source,
    })?;
    let train_path = out_dir.join("train.dgmf");
    let test_path = out_dir.join("test.dgmf");
    write_feature_file(&split.train.instances, &split.train.bags, &train_path)?;
    write_feature_file(&split.test.instances, &split.test.bags, &test_path)?;

    let manifest = Manifest {
        artifact_version: ARTIFACT_VERSION.to_string(),
        command: "generate".to_string(),
        mode: globals.mode,
        config,
        train: describe_written(&train_path, &split.train)?,
        test: describe_written(&test_path, &split.test)?,
    };
    write_atomic(out_dir.join("manifest.json"), &json_line(&manifest))?;
    if !globals.quiet {
        eprintln!(
            "generated {} train / {} test instances ({} bags each) into {}",
            split.train.instances.len(),
            split.test.instances.len(),
            split.train.bags.len(),
            out_dir.display()
        );
    }
    Ok(())
}

// ------------------------------------------------------------------- train

fn refine_config_from(
    args_clusters: usize,
    args_ratio: f64,
    args_max_rounds: usize,
    args_epochs: usize,
    args_lr: f64,
    globals: &Globals,
) -> RefineConfig {
    RefineConfig {
        clusters: args_clusters,
        ratio: args_ratio,
        max_rounds: args_max_rounds,
        train: TrainHyper {
            max_epochs: args_epochs,
            learning_rate: args_lr,
            ..TrainHyper::default()
        },
        seed: globals.seed,
        mode: globals.mode,
    }
}

fn default_log_path(bundle_path: &Path) -> PathBuf {
    let mut os = bundle_path.as_os_str().to_owned();
    os.push(".rounds.jsonl");
    PathBuf::from(os)
}

fn run_train(
    args: &TrainArgs,
    sub: &ArgMatches,
    file: &FileConfig,
    globals: &Globals,
) -> Result<()> {
    let train_path = required(resolve_opt(sub, file, "train", args.train.clone())?, "train")?;
    let out_path = required(resolve_opt(sub, file, "out", args.out.clone())?, "out")?;
    let log_path = resolve_opt(sub, file, "log", args.log.clone())?
        .unwrap_or_else(|| default_log_path(&out_path));
    let config = refine_config_from(
        resolve(sub, file, "clusters", args.clusters)?,
        resolve(sub, file, "ratio", args.ratio)?,
        resolve(sub, file, "max_rounds", args.max_rounds)?,
        resolve(sub, file, "epochs", args.epochs)?,
        resolve(sub, file, "lr", args.lr)?,
        globals,
    );
    file.check_fully_used()?;

    let dataset = read_feature_file(&train_path)?;
    let state = refine(&dataset.instances, &dataset.bags, &config)?;
    let bundle = ModelBundle::from_state(&state, &dataset.bags, &config)?;
    bundle.save(&out_path)?;

    let mut log_bytes = Vec::new();
    for record in &state.rounds {
        log_bytes.extend_from_slice(&json_line(&RoundLogEntry::from_record(record)));
    }
    write_atomic(&log_path, &log_bytes)?;

    if !globals.quiet {
        for record in &state.rounds {
            let entry = RoundLogEntry::from_record(record);
            eprintln!(
                "round {:>2}: selected {}+{} extremes, {} epochs, loss {:.4}, train inst AUC {}",
                entry.round,
                entry.pos_selected,
                entry.neg_selected,
                entry.epochs_run,
                entry.final_loss,
                entry
                    .train_instance_auc
                    .map(|a| format!("{a:.4}"))
                    .unwrap_or_else(|| "n/a".to_string())
            );
        }
        eprintln!(
            "trained {} round(s), converged={}, final train inst AUC {}, bundle {}",
            state.rounds.len(),
            state.converged,
            state
                .final_instance_auc
                .map(|a| format!("{a:.4}"))
                .unwrap_or_else(|| "n/a".to_string()),
            out_path.display()
        );
    }
    Ok(())
}

// -------------------------------------------------------------------- eval

#[derive(Serialize)]
struct EvalRecord {
    artifact_version: String,
    command: String,
    bundle: String,
    test: String,
    mode: ExecMode,
    config: RefineConfig,
    metrics: MetricsReport,
}

fn curves_csv(eval: &Evaluation) -> String {
    let mut out = String::from("curve,x,y,threshold\n");
    for (fpr, tpr, thr) in &eval.roc_points {
        out.push_str(&format!("roc,{fpr},{tpr},{thr}\n"));
    }
    if let Some(froc) = &eval.froc {
        for (fp_per_bag, sensitivity) in &froc.points {
            out.push_str(&format!("froc,{fp_per_bag},{sensitivity},\n"));
        }
    }
    out
}

fn run_eval(args: &EvalArgs, sub: &ArgMatches, file: &FileConfig, globals: &Globals) -> Result<()> {
    let bundle_path = required(resolve_opt(sub, file, "bundle", args.bundle.clone())?, "bundle")?;
    let test_path = required(resolve_opt(sub, file, "test", args.test.clone())?, "test")?;
    let report_path = required(resolve_opt(sub, file, "report", args.report.clone())?, "report")?;
    let curves_path = resolve_opt(sub, file, "curves", args.curves.clone())?;
    file.check_fully_used()?;

    let bundle = ModelBundle::load(&bundle_path)?;
    let test = read_feature_file(&test_path)?;
    let eval = evaluate(&bundle, &test, ThresholdSource::Bundle, globals.mode)?;
    if eval.report.instance_auc.is_none() {
        eprintln!(
            "warning: {} carries no usable instance labels; instance-level metrics omitted",
            test_path.display()
        );
    }

    let record = EvalRecord {
        artifact_version: ARTIFACT_VERSION.to_string(),
        command: "eval".to_string(),
        bundle: bundle_path.display().to_string(),
        test: test_path.display().to_string(),
        mode: globals.mode,
        config: bundle.config.clone(),
        metrics: eval.report.clone(),
    };
    write_atomic(&report_path, &json_line(&record))?;
    if let Some(curves_path) = curves_path {
        write_atomic(&curves_path, curves_csv(&eval).as_bytes())?;
    }
    if !globals.quiet {
        eprintln!(
            "bag AUC {:.4}, accuracy {:.4}{} -> {}",
            eval.report.bag_auc,
            eval.report.bag_accuracy,
            eval.report
                .instance_auc
                .map(|a| format!(", instance AUC {a:.4}"))
                .unwrap_or_default(),
            report_path.display()
        );
    }
    Ok(())
}

// ------------------------------------------------------------------ ablate

#[derive(Debug, Clone, Copy, PartialEq)]
enum Axis {
    Ratio,
    Clusters,
}

impl Axis {
    fn parse(s: &str) -> Result<Axis> {
        match s {
            "ratio" => Ok(Axis::Ratio),
            "clusters" => Ok(Axis::Clusters),
            other => Err(Error::Config(format!(
                "unknown ablation axis `{other}` (expected `ratio` or `clusters`)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum GridValue {
    Ratio(f64),
    Clusters(usize),
}

impl std::fmt::Display for GridValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridValue::Ratio(r) => write!(f, "{r}"),
            GridValue::Clusters(c) => write!(f, "{c}"),
        }
    }
}

fn parse_grid(axis: Axis, raw: Option<&str>) -> Result<Vec<GridValue>> {
    let values: Vec<GridValue> = match raw {
        None => match axis {
            Axis::Ratio => [0.01, 0.05, 0.10, 0.20, 0.30]
                .iter()
                .map(|&r| GridValue::Ratio(r))
                .collect(),
            Axis::Clusters => [1usize, 2, 5, 10, 20, 50]
                .iter()
                .map(|&c| GridValue::Clusters(c))
                .collect(),
        },
        Some(text) => {
            let mut out = Vec::new();
            for piece in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                out.push(match axis {
                    Axis::Ratio => GridValue::Ratio(piece.parse().map_err(|_| {
                        Error::Config(format!("bad ratio grid value `{piece}`"))
                    })?),
                    Axis::Clusters => GridValue::Clusters(piece.parse().map_err(|_| {
                        Error::Config(format!("bad cluster grid value `{piece}`"))
                    })?),
                });
            }
            out
        }
    };
    if values.is_empty() {
        return Err(Error::Config("ablation grid has no values".into()));
    }
    for v in &values {
        match v {
            GridValue::Ratio(r) if !(*r > 0.0 && *r <= 0.5) => {
                return Err(Error::Config(format!(
                    "ratio grid value {r} outside (0, 0.5]"
                )));
            }
            GridValue::Clusters(0) => {
                return Err(Error::Config("cluster grid value 0 is invalid".into()));
            }
            _ => {}
        }
    }
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            if values[i] == values[j] {
                return Err(Error::Config(format!(
                    "duplicate grid value {}",
                    values[i]
                )));
            }
        }
    }
    Ok(values)
}

#[derive(Serialize)]
struct AblateRow {
    value: String,
    seed: u64,
    status: String,
    error: Option<String>,
    rounds_run: Option<usize>,
    converged: Option<bool>,
    instance_auc: Option<f64>,
    bag_auc: Option<f64>,
    froc_score: Option<f64>,
    bag_accuracy: Option<f64>,
}

#[derive(Serialize)]
struct AblateDoc {
    artifact_version: String,
    command: String,
    axis: String,
    train: String,
    test: String,
    seed: u64,
    mode: ExecMode,
    fixed_clusters: usize,
    fixed_ratio: f64,
    max_rounds: usize,
    epochs: usize,
    lr: f64,
    rows: Vec<AblateRow>,
}

fn csv_field_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn run_ablate(
    args: &AblateArgs,
    sub: &ArgMatches,
    file: &FileConfig,
    globals: &Globals,
) -> Result<()> {
    let train_path = required(resolve_opt(sub, file, "train", args.train.clone())?, "train")?;
    let test_path = required(resolve_opt(sub, file, "test", args.test.clone())?, "test")?;
    let out_csv = required(resolve_opt(sub, file, "out_csv", args.out_csv.clone())?, "out-csv")?;
    let out_json = required(
        resolve_opt(sub, file, "out_json", args.out_json.clone())?,
        "out-json",
    )?;
    let axis_raw = resolve_opt(sub, file, "axis", args.axis.clone())?
        .ok_or_else(|| Error::Config("--axis is required (flag or config key)".into()))?;
    let axis = Axis::parse(&axis_raw)?;
    let values_raw = resolve_opt(sub, file, "values", args.values.clone())?;
    let values = parse_grid(axis, values_raw.as_deref())?;
    let base = refine_config_from(
        resolve(sub, file, "clusters", args.clusters)?,
        resolve(sub, file, "ratio", args.ratio)?,
        resolve(sub, file, "max_rounds", args.max_rounds)?,
        resolve(sub, file, "epochs", args.epochs)?,
        resolve(sub, file, "lr", args.lr)?,
        globals,
    );
    file.check_fully_used()?;

    let train = read_feature_file(&train_path)?;
    let test = read_feature_file(&test_path)?;

    let mut rows = Vec::with_capacity(values.len());
    for (i, value) in values.iter().enumerate() {
        let cell_seed = globals.seed.wrapping_add(i as u64 + 1);
        let mut config = base.clone();
        config.seed = cell_seed;
        match value {
            GridValue::Ratio(r) => config.ratio = *r,
            GridValue::Clusters(c) => config.clusters = *c,
        }
        let outcome = refine(&train.instances, &train.bags, &config)
            .and_then(|state| {
                let bundle = ModelBundle::from_state(&state, &train.bags, &config)?;
                let eval = evaluate(&bundle, &test, ThresholdSource::Bundle, globals.mode)?;
                Ok((state, eval))
            });
        let row = match outcome {
            Ok((state, eval)) => AblateRow {
                value: value.to_string(),
                seed: cell_seed,
                status: "ok".to_string(),
                error: None,
                rounds_run: Some(state.rounds.len()),
                converged: Some(state.converged),
                instance_auc: eval.report.instance_auc,
                bag_auc: Some(eval.report.bag_auc),
                froc_score: eval.report.froc_score,
                bag_accuracy: Some(eval.report.bag_accuracy),
            },
            Err(e) => AblateRow {
                value: value.to_string(),
                seed: cell_seed,
                status: "error".to_string(),
                error: Some(e.to_string()),
                rounds_run: None,
                converged: None,
                instance_auc: None,
                bag_auc: None,
                froc_score: None,
                bag_accuracy: None,
            },
        };
        if !globals.quiet {
            eprintln!(
                "{axis_raw:?} cell {}/{}: value {} -> {}{}",
                i + 1,
                values.len(),
                row.value,
                row.status,
                row.instance_auc
                    .map(|a| format!(" (instance AUC {a:.4})"))
                    .unwrap_or_default()
            );
        }
        rows.push(row);
    }

    let mut csv = String::from(
        "axis,value,seed,status,instance_auc,bag_auc,froc_score,bag_accuracy,rounds_run,converged,error\n",
    );
    let axis_name = match axis {
        Axis::Ratio => "ratio",
        Axis::Clusters => "clusters",
    };
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            axis_name,
            row.value,
            row.seed,
            row.status,
            csv_field_opt(&row.instance_auc),
            csv_field_opt(&row.bag_auc),
            csv_field_opt(&row.froc_score),
            csv_field_opt(&row.bag_accuracy),
            csv_field_opt(&row.rounds_run),
            csv_field_opt(&row.converged),
            row.error.as_deref().map(csv_quote).unwrap_or_default(),
        ));
    }
    write_atomic(&out_csv, csv.as_bytes())?;

    let doc = AblateDoc {
        artifact_version: ARTIFACT_VERSION.to_string(),
        command: "ablate".to_string(),
        axis: axis_name.to_string(),
        train: train_path.display().to_string(),
        test: test_path.display().to_string(),
        seed: globals.seed,
        mode: globals.mode,
        fixed_clusters: base.clusters,
        fixed_ratio: base.ratio,
        max_rounds: base.max_rounds,
        epochs: base.train.max_epochs,
        lr: base.train.learning_rate,
        rows,
    };
    write_atomic(&out_json, &json_line(&doc))?;
    Ok(())
}

// ----------------------------------------------------------------- inspect

fn run_inspect(args: &InspectArgs, file: &FileConfig) -> Result<()> {
    file.check_fully_used()?;
    let path = &args.path;
    let head = fs::read(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let is_bundle = head
        .iter()
        .find(|b| !b.is_ascii_whitespace())
        .map(|&b| b == b'{')
        .unwrap_or(false);
    if is_bundle {
        let bundle = ModelBundle::load(path)?;
        println!("model bundle {}", path.display());
        println!("  artifact version: {}", bundle.artifact_version);
        println!("  dim: {}", bundle.dim());
        println!("  clusters: {}", bundle.cluster_model.cluster_count());
        println!("  projections: {}", bundle.projections.len());
        println!("  rounds run: {}", bundle.rounds_run);
        println!("  converged: {}", bundle.converged);
        println!("  threshold: {}", bundle.threshold);
        println!("  anchors: ({}, {})", bundle.anchors.0, bundle.anchors.1);
        println!(
            "  config: clusters={} ratio={} max_rounds={} epochs={} lr={} seed={} mode={}",
            bundle.config.clusters,
            bundle.config.ratio,
            bundle.config.max_rounds,
            bundle.config.train.max_epochs,
            bundle.config.train.learning_rate,
            bundle.config.seed,
            bundle.config.mode
        );
        if let Some(auc) = bundle.train_instance_auc {
            println!("  train instance AUC: {auc:.4}");
        }
        if let Some(auc) = bundle.train_bag_auc {
            println!("  train bag AUC: {auc:.4}");
        }
    } else {
        let dataset = read_feature_file(path)?;
        let inst = &dataset.instances;
        let labeled_pos = inst
            .labels
            .iter()
            .filter(|&&l| l == InstanceLabel::Positive)
            .count();
        let labeled_neg = inst
            .labels
            .iter()
            .filter(|&&l| l == InstanceLabel::Negative)
            .count();
        let unknown = inst.len() - labeled_pos - labeled_neg;
        println!("dataset {}", path.display());
        println!("  instances: {}", inst.len());
        println!("  dim: {}", inst.dim());
        println!(
            "  bags: {} ({} positive, {} negative)",
            dataset.bags.len(),
            dataset.bags.positive_count(),
            dataset.bags.negative_count()
        );
        println!(
            "  instance labels: {labeled_pos} positive, {labeled_neg} negative, {unknown} unknown"
        );
        let sizes: Vec<usize> = dataset.bags.bags.iter().map(|b| b.instances.len()).collect();
        println!(
            "  bag sizes: min {}, max {}",
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap()
        );
        let witness_counts: Vec<usize> = dataset
            .bags
            .bags
            .iter()
            .filter(|b| b.label == BagLabel::Positive)
            .map(|b| {
                b.instances
                    .iter()
                    .filter(|&&i| inst.labels[i] == InstanceLabel::Positive)
                    .count()
            })
            .collect();
        if !witness_counts.is_empty() && unknown < inst.len() {
            println!(
                "  witnesses per positive bag: min {}, max {}",
                witness_counts.iter().min().unwrap(),
                witness_counts.iter().max().unwrap()
            );
        }
    }
    Ok(())
}

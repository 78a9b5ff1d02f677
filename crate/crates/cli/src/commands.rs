//! Argument definitions and the four subcommands.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperclust::config::ModelConfig;
use hyperclust::decomp::{estimate_k, k_from_spectrum, KMode};
use hyperclust::eval::clustering_error;
use hyperclust::hypergraph::{load_hypergraph, write_hypergraph, LoadedHypergraph};
use hyperclust::model::{beta_q, information_loss, sample_hdcbm};
use hyperclust::pipeline::{detect, lifted_tensor_score, stacked_score, Detection, Method, Partition};
use hyperclust::Hypergraph;
use serde_json::{json, Value};

use crate::experiment::{format_table, run_bench, write_bench, DetectSpec, ExperimentConfig, InitKind};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "hyperclust", version, about = "Community detection on uniform hypergraphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample hypergraphs from a model config.
    Simulate(SimulateArgs),
    /// Detect communities in a hyperedge-list file.
    Detect(DetectArgs),
    /// Run a simulation sweep and tabulate clustering errors.
    Bench(BenchArgs),
    /// Report the leading spectrum, the estimated K and information-loss indices.
    Spectrum(SpectrumArgs),
}

/// Overrides shared by `detect` and `bench`.
#[derive(Debug, Default, Args)]
pub struct DetectFlags {
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Width of the weight interval for the randomized projection init.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "cap-t")]
    pub cap_t: Option<f64>,
    #[arg(long = "t-max")]
    pub t_max: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

impl DetectFlags {
    fn apply(&self, spec: &mut DetectSpec) {
        if self.init.is_some() {
            spec.init = self.init;
        }
        if let Some(e) = self.eps {
            spec.eps = e;
        }
        if self.delta.is_some() {
            spec.delta = self.delta;
        }
        if self.cap_t.is_some() {
            spec.cap_t = self.cap_t;
        }
        if self.t_max.is_some() {
            spec.t_max = self.t_max;
        }
        if let Some(r) = self.restarts {
            spec.restarts = r;
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model config, or an experiment config whose first setting is used.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum MixedMode {
    /// Pad lower-order hyperedges with dummy nodes.
    #[default]
    Lift,
    /// Concatenate per-order embeddings.
    Stack,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "tensor-score")]
    pub method: Method,
    #[command(flatten)]
    pub flags: DetectFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ground-truth labels; adds the clustering error to the diagnostics.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// How to treat files that mix hyperedge orders (tensor-score only).
    #[arg(long, value_enum, default_value_t)]
    pub mixed: MixedMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub flags: DetectFlags,
    /// Output directory; defaults to the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum KModeArg {
    AsWritten,
    #[default]
    Gap,
}

impl From<KModeArg> for KMode {
    fn from(k: KModeArg) -> Self {
        match k {
            KModeArg::AsWritten => KMode::AsWritten,
            KModeArg::Gap => KMode::Gap,
        }
    }
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of singular values `r` to examine.
    #[arg(long)]
    pub k: usize,
    #[arg(long = "k-mode", value_enum, default_value_t)]
    pub k_mode: KModeArg,
    /// Overrides the model seed when sampling from a config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Detect(a) => cmd_detect(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Spectrum(a) => cmd_spectrum(&a),
    }
}

/// Reads a model config, accepting an experiment config in its place.
pub fn load_model_config(path: &Path) -> Result<(ModelConfig, Option<ExperimentConfig>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if value.get("model").is_some() {
        let exp = ExperimentConfig::from_path(path)?;
        let first = exp.settings()?.swap_remove(0);
        return Ok((first.model, Some(exp)));
    }
    let model = serde_json::from_value(value).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok((model, None))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_labels(path: &Path, labels: &[usize]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

/// Replicate `r` uses seed `seed + r`; with several replicates the file
/// names carry the seed.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (model, exp) = load_model_config(&args.config)?;
    let replicates = args
        .replicates
        .or(exp.as_ref().map(|e| e.replicates))
        .unwrap_or(1);
    if replicates == 0 {
        return Err(CliError::Usage("replicates must be at least 1".into()));
    }
    let base = args.seed.unwrap_or(model.seed);
    fs::create_dir_all(&args.out)?;
    let mut files = Vec::new();
    for r in 0..replicates {
        let seed = base.wrapping_add(r as u64);
        let params = model.with_seed(seed).build()?;
        let h = sample_hdcbm(&params, seed)?;
        if h.is_empty() {
            log::warn!("replicate {r} (seed {seed}) has no hyperedges");
        }
        let suffix = if replicates == 1 { String::new() } else { format!("-{seed}") };
        let edges = format!("edges{suffix}.txt");
        let labels = format!("labels{suffix}.txt");
        write_hypergraph(&h, BufWriter::new(File::create(args.out.join(&edges))?))?;
        write_labels(&args.out.join(&labels), params.labels())?;
        files.push(json!({"seed": seed, "edges": edges, "labels": labels, "num_edges": h.num_edges()}));
    }
    let manifest = json!({
        "n": model.n,
        "m": model.m,
        "K": model.k,
        "seed": base,
        "replicates": files,
        "model": model,
    });
    write_json(&args.out.join("manifest.json"), &manifest)
}

fn run_detection(h: LoadedHypergraph, args: &DetectArgs, spec: &DetectSpec) -> Result<Detection, CliError> {
    let opts = spec.options(args.k, args.seed);
    match h {
        LoadedHypergraph::Uniform(h) => Ok(detect(&h, args.method, &opts)?),
        LoadedHypergraph::Mixed(mixed) => {
            if args.method != Method::TensorScore {
                return Err(CliError::Usage(format!(
                    "{} needs a uniform hypergraph; only tensor-score handles mixed orders",
                    args.method
                )));
            }
            Ok(match args.mixed {
                MixedMode::Lift => lifted_tensor_score(&mixed, mixed.max_order(), &opts)?,
                MixedMode::Stack => stacked_score(&mixed.split_by_order(), &opts)?,
            })
        }
    }
}

pub fn cmd_detect(args: &DetectArgs) -> Result<(), CliError> {
    let h = load_hypergraph(&args.edges, None)?;
    let n = h.n();
    if args.k < 2 || args.k > n {
        return Err(CliError::Usage(format!("--k must lie in [2, n={n}], got {}", args.k)));
    }
    let m = match &h {
        LoadedHypergraph::Uniform(h) => h.order(),
        LoadedHypergraph::Mixed(h) => h.max_order(),
    };
    let mut spec = DetectSpec::default();
    args.flags.apply(&mut spec);
    let found = run_detection(h, args, &spec)?;
    fs::create_dir_all(&args.out)?;
    write_labels(&args.out.join("labels.txt"), found.partition.labels())?;
    let mut report = json!({
        "n": n,
        "m": m,
        "K": args.k,
        "seed": args.seed,
        "diagnostics": found.diagnostics,
    });
    if let Some(path) = &args.labels {
        let truth = Partition::read(BufReader::new(File::open(path)?))?;
        report["error"] = serde_json::to_value(clustering_error(found.partition.labels(), truth.labels())?)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    write_json(&args.out.join("diagnostics.json"), &report)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    args.flags.apply(&mut cfg.detect);
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set \"output\"".into()))?;
    let outcome = run_bench(&cfg)?;
    write_bench(&outcome, &out)?;
    print!("{}", format_table(&outcome, &cfg.methods));
    Ok(())
}

fn spectrum_report(h: &Hypergraph, r: usize, mode: KMode) -> Result<Value, CliError> {
    if r < 2 || r > h.n() {
        return Err(CliError::Usage(format!("--k must lie in [2, n={}], got {r}", h.n())));
    }
    let est = estimate_k(h, r, mode)?;
    let as_written = k_from_spectrum(&est.singular_values, h.n(), KMode::AsWritten)?;
    let gap = k_from_spectrum(&est.singular_values, h.n(), KMode::Gap)?;
    Ok(json!({
        "n": h.n(),
        "m": h.order(),
        "r": r,
        "num_edges": h.num_edges(),
        "singular_values": est.singular_values,
        "threshold": est.threshold,
        "k_mode": mode.to_string(),
        "k_hat": est.k_hat,
        "k_hat_as_written": as_written,
        "k_hat_gap": gap,
    }))
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let mode = KMode::from(args.k_mode);
    let report = match (&args.edges, &args.config) {
        (Some(path), _) => {
            let h = load_hypergraph(path, None)?.into_uniform()?;
            spectrum_report(&h, args.k, mode)?
        }
        (None, Some(path)) => {
            let (model, _) = load_model_config(path)?;
            let model = model.with_seed(args.seed.unwrap_or(model.seed));
            let params = model.build()?;
            let info = information_loss(&params);
            let h = sample_hdcbm(&params, model.seed)?;
            let mut report = spectrum_report(&h, args.k, mode)?;
            report["seed"] = json!(model.seed);
            report["if_h"] = json!(info.if_h);
            report["if_g"] = json!(info.if_g);
            report["beta_q"] = json!(beta_q(&params));
            report
        }
        (None, None) => return Err(CliError::Usage("pass --edges or --config".into())),
    };
    match &args.out {
        Some(path) => write_json(path, &report),
        None => {
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?);
            Ok(())
        }
    }
}

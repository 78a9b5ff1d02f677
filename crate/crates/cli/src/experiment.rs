//! Experiment configs and the benchmark runner behind `bench`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hyperclust::config::{derive_seed, ModelConfig};
use hyperclust::eval::{clustering_error, summarize};
use hyperclust::model::sample_hdcbm;
use hyperclust::pipeline::{detect, DetectOptions, Init, Method};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Initialization names accepted in configs and on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    DiagRemovedHosvd,
    RandomizedProjection,
    Hosvd,
    Nhcut,
}

fn default_eps() -> f64 {
    0.1
}

fn default_restarts() -> usize {
    20
}

/// Overrides for [`DetectOptions`]; unset fields keep the library defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectSpec {
    #[serde(default)]
    pub init: Option<InitKind>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub cap_t: Option<f64>,
    #[serde(default)]
    pub t_max: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

impl Default for DetectSpec {
    fn default() -> Self {
        Self {
            init: None,
            eps: default_eps(),
            delta: None,
            cap_t: None,
            t_max: None,
            tol: None,
            restarts: default_restarts(),
        }
    }
}

impl DetectSpec {
    pub fn options(&self, k: usize, seed: u64) -> DetectOptions {
        let mut opts = DetectOptions::new(k).with_seed(seed);
        opts.init = match self.init.unwrap_or(InitKind::DiagRemovedHosvd) {
            InitKind::DiagRemovedHosvd => Init::DiagRemovedHosvd,
            InitKind::RandomizedProjection => Init::RandomizedProjection { eps: self.eps, seed },
            InitKind::Hosvd => Init::Hosvd,
            InitKind::Nhcut => Init::Nhcut,
        };
        opts.delta = self.delta;
        opts.cap_t = self.cap_t;
        if let Some(t) = self.t_max {
            opts.t_max = t;
        }
        if let Some(t) = self.tol {
            opts.tol = t;
        }
        opts.restarts = self.restarts;
        opts
    }
}

fn one() -> usize {
    1
}

/// A sweep over model settings, methods and replicates.
///
/// `settings` entries are JSON objects with an `id`; their other fields are
/// merged recursively over `model`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub model: Value,
    #[serde(default)]
    pub settings: Vec<Value>,
    pub methods: Vec<Method>,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub detect: DetectSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Setting {
    pub id: String,
    pub model: ModelConfig,
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (key, v) in p {
                match b.get_mut(key) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(key.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

fn config_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| config_error(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| config_error(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.replicates == 0 {
            return Err(CliError::Usage("replicates must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::Usage("config lists no methods".into()));
        }
        self.settings().map(|_| ())
    }

    pub fn settings(&self) -> Result<Vec<Setting>, CliError> {
        let parse = |id: String, v: Value| {
            let model: ModelConfig =
                serde_json::from_value(v).map_err(|e| CliError::Usage(format!("setting {id}: {e}")))?;
            Ok(Setting { id, model })
        };
        if self.settings.is_empty() {
            return Ok(vec![parse("default".into(), self.model.clone())?]);
        }
        self.settings
            .iter()
            .map(|s| {
                let mut patch = s.clone();
                let id = patch
                    .as_object_mut()
                    .and_then(|o| o.remove("id"))
                    .and_then(|v| match v {
                        Value::String(s) => Some(s),
                        Value::Null => None,
                        other => Some(other.to_string()),
                    })
                    .ok_or_else(|| CliError::Usage("every setting needs an \"id\"".into()))?;
                let mut model = self.model.clone();
                merge(&mut model, &patch);
                parse(id, model)
            })
            .collect()
    }
}

/// One line of the per-replicate table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub setting_id: String,
    pub method: String,
    pub replicate: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub error_count: Option<usize>,
    pub error_rate: f64,
    pub runtime_ms: u128,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub setting_id: String,
    pub method: String,
    pub replicates: usize,
    pub failures: usize,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub min_rate: f64,
    pub max_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub aggregate: Vec<AggregateRow>,
}

/// Runs every (setting, replicate) pair in the worker pool. Replicate `r`
/// of setting `s` uses seed `derive_seed(seed, [s, r])` for both the
/// degree parameters and the hypergraph, and the same seed for k-means, so
/// the result does not depend on scheduling.
pub fn run_bench(cfg: &ExperimentConfig) -> Result<BenchOutcome, CliError> {
    let settings = cfg.settings()?;
    let jobs: Vec<(usize, usize)> = (0..settings.len())
        .flat_map(|s| (0..cfg.replicates).map(move |r| (s, r)))
        .collect();
    let rows: Vec<Vec<BenchRow>> = jobs
        .par_iter()
        .map(|&(s, r)| run_replicate(cfg, &settings[s], s, r))
        .collect();
    let rows: Vec<BenchRow> = rows.into_iter().flatten().collect();
    let mut aggregate = Vec::new();
    for setting in &settings {
        for method in &cfg.methods {
            let name = method.to_string();
            let picked: Vec<&BenchRow> = rows
                .iter()
                .filter(|row| row.setting_id == setting.id && row.method == name)
                .collect();
            let rates: Vec<f64> = picked.iter().map(|r| r.error_rate).filter(|r| r.is_finite()).collect();
            let failures = picked.len() - rates.len();
            let summary = summarize(&rates).ok();
            aggregate.push(AggregateRow {
                setting_id: setting.id.clone(),
                method: name,
                replicates: picked.len(),
                failures,
                mean_rate: summary.map_or(f64::NAN, |s| s.mean),
                std_rate: summary.map_or(f64::NAN, |s| s.std),
                min_rate: summary.map_or(f64::NAN, |s| s.min),
                max_rate: summary.map_or(f64::NAN, |s| s.max),
            });
        }
    }
    Ok(BenchOutcome { rows, aggregate })
}

fn run_replicate(cfg: &ExperimentConfig, setting: &Setting, s: usize, r: usize) -> Vec<BenchRow> {
    let seed = derive_seed(cfg.seed, &[s as u64, r as u64]);
    let model = &setting.model;
    let row = |method: String| BenchRow {
        setting_id: setting.id.clone(),
        method,
        replicate: r,
        seed,
        n: model.n,
        m: model.m,
        k: model.k,
        error_count: None,
        error_rate: f64::NAN,
        runtime_ms: 0,
        reason: String::new(),
    };
    let sampled = model
        .with_seed(seed)
        .build()
        .and_then(|params| Ok((sample_hdcbm(&params, seed)?, params)));
    let (h, params) = match sampled {
        Ok(v) => v,
        Err(e) => {
            return cfg
                .methods
                .iter()
                .map(|m| BenchRow {
                    reason: format!("sampling: {e}"),
                    ..row(m.to_string())
                })
                .collect()
        }
    };
    let opts = cfg.detect.options(model.k, seed);
    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let result = detect(&h, method, &opts)
                .and_then(|d| clustering_error(d.partition.labels(), params.labels()));
            let runtime_ms = start.elapsed().as_millis();
            match result {
                Ok(report) => BenchRow {
                    error_count: Some(report.misclassified),
                    error_rate: report.rate,
                    runtime_ms,
                    ..row(method.to_string())
                },
                Err(e) => {
                    log::warn!("{} replicate {r} {method}: {e}", setting.id);
                    BenchRow {
                        runtime_ms,
                        reason: e.to_string(),
                        ..row(method.to_string())
                    }
                }
            }
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `results.csv` and `aggregate.csv` into `dir`.
pub fn write_bench(outcome: &BenchOutcome, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("results.csv"), &outcome.rows)?;
    write_csv(&dir.join("aggregate.csv"), &outcome.aggregate)
}

/// Mean error rates as a settings-by-methods table in percent, rounded to
/// one decimal.
pub fn format_table(outcome: &BenchOutcome, methods: &[Method]) -> String {
    let mut ids: Vec<&str> = Vec::new();
    for a in &outcome.aggregate {
        if !ids.contains(&a.setting_id.as_str()) {
            ids.push(&a.setting_id);
        }
    }
    let names: Vec<String> = methods.iter().map(ToString::to_string).collect();
    let width = names.iter().map(String::len).max().unwrap_or(0).max(8);
    let id_width = ids.iter().map(|s| s.len()).max().unwrap_or(0).max(7);
    let mut out = format!("{:id_width$}", "setting");
    for name in &names {
        out.push_str(&format!("  {name:>width$}"));
    }
    out.push('\n');
    for id in ids {
        out.push_str(&format!("{id:id_width$}"));
        for name in &names {
            let cell = outcome
                .aggregate
                .iter()
                .find(|a| a.setting_id == id && &a.method == name)
                .map_or(f64::NAN, |a| a.mean_rate);
            let text = if cell.is_finite() {
                format!("{:.1}%", cell * 100.0)
            } else {
                "NaN".to_string()
            };
            out.push_str(&format!("  {text:>width$}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn settings_merge_over_model() {
        let cfg: ExperimentConfig = serde_json::from_value(json!({
            "model": {"n": 10, "m": 3, "K": 2, "theta": {"kind": "constant", "value": 0.5},
                      "core": {"kind": "planted", "entries": {"111": 0.3, "222": 0.3, "122": 0.2}}},
            "settings": [{"id": "b", "core": {"entries": {"122": 0.5}}}],
            "methods": ["nhcut"]
        }))
        .unwrap();
        let s = cfg.settings().unwrap();
        assert_eq!(s[0].id, "b");
        let core = s[0].model.core.build(2, 3).unwrap();
        assert_eq!(core.get(&[0, 1, 1]), 0.5);
        assert_eq!(core.get(&[0, 0, 0]), 0.3);
    }

    #[test]
    fn setting_without_id_is_rejected() {
        let cfg: ExperimentConfig = serde_json::from_value(json!({
            "model": {"n": 10, "m": 2, "K": 2, "theta": {"kind": "constant", "value": 0.5},
                      "core": {"kind": "symmetric_sbm", "b": 0.1}},
            "settings": [{"n": 12}],
            "methods": ["nhcut"]
        }))
        .unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
    }
}

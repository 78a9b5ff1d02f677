//! Tensor-SCORE end to end: tuning, initialization, reg-HOOI, SCORE
//! embedding and k-means, plus the baseline detectors and the extensions
//! to hypergraphs with mixed hyperedge orders.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decomp::{
    diag_removed_hosvd_init, hosvd_init, hosvd_init_dense, randomized_projection_init, reg_hooi, HooiConfig,
    InitResult, TraceEntry, DEFAULT_TOL, DEFAULT_T_MAX,
};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, MixedHypergraph, Projection};
use crate::kmeans::kmeans;
use crate::linalg::{fix_signs, symmetric_top_eigen, EigenOrder, FactorMatrix};
use crate::model::{signal_tensor, HdcbmParams};
use crate::tensor::{DenseTensor, TensorOperator};

/// Below this, `xi_1(i)` counts as zero in the SCORE ratios.
const ZERO_LEADING: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tuning {
    pub delta: f64,
    pub cap_t: f64,
}

/// `delta = 2 sqrt(K) max_i L_i / ||L||_2` (clamped to 1) and
/// `T = sqrt(ln n)`, with `L` the node degrees.
pub fn default_tuning(h: &Hypergraph, k: usize) -> Result<Tuning> {
    if h.is_empty() {
        return Err(Error::EmptyNetwork("no hyperedges to derive tuning parameters from".into()));
    }
    let degrees = h.degrees();
    let max = degrees.iter().copied().fold(0.0, f64::max);
    let norm = degrees.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok(Tuning {
        delta: (2.0 * (k as f64).sqrt() * max / norm).min(1.0),
        cap_t: (h.n() as f64).ln().sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreEmbedding {
    /// `n x (K-1)` ratios `xi_{k+1}(i) / xi_1(i)` with row norms capped.
    pub rows: DMatrix<f64>,
    pub cap: f64,
    pub truncated_count: usize,
}

/// SCORE ratios of the factor columns against the leading column.
///
/// Column signs are normalized first (leading column with nonnegative sum,
/// others by their largest entry), so flipping any column of `xi` leaves
/// the result unchanged. Rows whose leading entry is numerically zero get
/// norm `cap` in the direction of the remaining entries.
pub fn score_embedding(xi: &FactorMatrix, cap: f64) -> Result<ScoreEmbedding> {
    score_ratios(xi.as_matrix(), cap)
}

/// [`score_embedding`] for any `n x K` matrix, orthonormal or not.
pub fn score_ratios(xi: &DMatrix<f64>, cap: f64) -> Result<ScoreEmbedding> {
    let k = xi.ncols();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("SCORE needs K >= 2, got {k}")));
    }
    if !(cap > 0.0) {
        return Err(Error::InvalidArgument(format!("cap T must be positive, got {cap}")));
    }
    let mut x = xi.clone();
    fix_signs(&mut x);
    if x.column(0).sum() < 0.0 {
        x.column_mut(0).neg_mut();
    }
    let n = x.nrows();
    let mut rows = DMatrix::zeros(n, k - 1);
    let mut truncated_count = 0;
    for i in 0..n {
        let lead = x[(i, 0)];
        let rest = x.view((i, 1), (1, k - 1));
        let mut row = if lead.abs() < ZERO_LEADING {
            let norm = rest.norm();
            truncated_count += 1;
            if norm == 0.0 {
                rest.scale(0.0)
            } else {
                rest.scale(cap.min(f64::MAX) / norm)
            }
        } else {
            rest.scale(1.0 / lead)
        };
        let norm = row.norm();
        if lead.abs() >= ZERO_LEADING && norm > cap {
            row *= cap / norm;
            truncated_count += 1;
        }
        rows.row_mut(i).copy_from(&row);
    }
    Ok(ScoreEmbedding {
        rows,
        cap,
        truncated_count,
    })
}

/// Hard community labels in `[0, K)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidArgument(format!("label {bad} out of range for K={k}")));
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// One label per line.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for l in &self.labels {
            writeln!(out, "{l}")?;
        }
        Ok(())
    }

    /// Reads one label per line; `K` is taken as the largest label plus one.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut labels = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            labels.push(t.parse::<usize>().map_err(|_| Error::MalformedInput {
                line: idx + 1,
                reason: format!("expected a label, found {t:?}"),
            })?);
        }
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        Self::new(labels, k)
    }
}

/// How the reg-HOOI iteration is started.
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    DiagRemovedHosvd,
    RandomizedProjection { eps: f64, seed: u64 },
    Hosvd,
    /// Leading eigenvectors of the normalized weighted projection.
    Nhcut,
    Explicit(FactorMatrix),
}

impl Init {
    pub fn name(&self) -> &'static str {
        match self {
            Init::DiagRemovedHosvd => "diag-removed-hosvd",
            Init::RandomizedProjection { .. } => "randomized-projection",
            Init::Hosvd => "hosvd",
            Init::Nhcut => "nhcut",
            Init::Explicit(_) => "explicit",
        }
    }

    fn compute(&self, h: &Hypergraph, k: usize) -> Result<InitResult> {
        match self {
            Init::DiagRemovedHosvd => diag_removed_hosvd_init(h, k),
            Init::RandomizedProjection { eps, seed } => randomized_projection_init(h, k, *eps, *seed),
            Init::Hosvd => hosvd_init(h, k),
            Init::Nhcut => Ok(nhcut_factor(h, k)?.0),
            Init::Explicit(f) => {
                if f.nrows() != h.n() || f.ncols() != k {
                    return Err(Error::DimensionMismatch(format!(
                        "explicit factor is {}x{}, expected {}x{k}",
                        f.nrows(),
                        f.ncols(),
                        h.n()
                    )));
                }
                Ok(InitResult {
                    factor: f.clone(),
                    spectrum: Vec::new(),
                    rank_deficient: false,
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectOptions {
    pub k: usize,
    pub init: Init,
    pub delta: Option<f64>,
    pub cap_t: Option<f64>,
    pub t_max: usize,
    pub tol: f64,
    pub record_trace: bool,
    pub restarts: usize,
    pub seed: u64,
}

impl DetectOptions {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            init: Init::DiagRemovedHosvd,
            delta: None,
            cap_t: None,
            t_max: DEFAULT_T_MAX,
            tol: DEFAULT_TOL,
            record_trace: false,
            restarts: 20,
            seed: 0,
        }
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!("K must be at least 2, got {}", self.k)));
        }
        if self.k > n {
            return Err(Error::RankTooLarge {
                requested: self.k,
                available: n,
            });
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub method: String,
    pub delta: Option<f64>,
    pub cap_t: Option<f64>,
    pub iterations: usize,
    pub truncated_count: usize,
    /// Singular values of the final contraction (or eigenvalues for
    /// projection baselines).
    pub spectrum: Vec<f64>,
    pub init_spectrum: Vec<f64>,
    pub rank_deficient: bool,
    pub kmeans_objective: f64,
    pub isolated_nodes: usize,
    /// Orders whose block was dropped by the stacked extension.
    pub dropped_orders: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub partition: Partition,
    pub diagnostics: Diagnostics,
}

fn cluster(points: &DMatrix<f64>, opts: &DetectOptions, mut diagnostics: Diagnostics) -> Result<Detection> {
    let res = kmeans(points, opts.k, opts.restarts, opts.seed).map_err(|e| e.at_stage("kmeans"))?;
    diagnostics.kmeans_objective = res.objective;
    Ok(Detection {
        partition: Partition::new(res.labels, opts.k)?,
        diagnostics,
    })
}

/// The SCORE embedding reached by reg-HOOI from `init` on any tensor.
fn embed_from<T: TensorOperator + ?Sized>(
    tensor: &T,
    init: InitResult,
    tuning: Tuning,
    opts: &DetectOptions,
) -> Result<(ScoreEmbedding, Diagnostics)> {
    let cfg = HooiConfig {
        k: opts.k,
        delta: tuning.delta,
        t_max: opts.t_max,
        tol: opts.tol,
        record_trace: opts.record_trace,
    };
    let fit = reg_hooi(tensor, &init.factor, &cfg, None).map_err(|e| e.at_stage("hooi"))?;
    let emb = score_embedding(&fit.factor, tuning.cap_t).map_err(|e| e.at_stage("score"))?;
    let diagnostics = Diagnostics {
        method: format!("tensor-score/{}", opts.init.name()),
        delta: Some(tuning.delta),
        cap_t: Some(tuning.cap_t),
        iterations: fit.iterations,
        truncated_count: emb.truncated_count,
        spectrum: fit.singular_values,
        init_spectrum: init.spectrum,
        rank_deficient: init.rank_deficient || fit.rank_deficient,
        trace: fit.trace,
        ..Diagnostics::default()
    };
    Ok((emb, diagnostics))
}

fn embed(h: &Hypergraph, opts: &DetectOptions) -> Result<(ScoreEmbedding, Diagnostics)> {
    opts.validate(h.n())?;
    let tuning = match (opts.delta, opts.cap_t) {
        (Some(delta), Some(cap_t)) => Tuning { delta, cap_t },
        (delta, cap_t) => {
            let d = default_tuning(h, opts.k).map_err(|e| e.at_stage("tuning"))?;
            Tuning {
                delta: delta.unwrap_or(d.delta),
                cap_t: cap_t.unwrap_or(d.cap_t),
            }
        }
    };
    let init = opts.init.compute(h, opts.k).map_err(|e| e.at_stage("init"))?;
    embed_from(h, init, tuning, opts)
}

/// Tensor-SCORE on a uniform hypergraph.
pub fn tensor_score(h: &Hypergraph, opts: &DetectOptions) -> Result<Detection> {
    let (emb, diagnostics) = embed(h, opts)?;
    cluster(&emb.rows, opts, diagnostics)
}

/// Tensor-SCORE on a dense tensor started from its HOSVD. Unless overridden,
/// the row cap is inactive (`delta = 1`) and `T` is infinite.
pub fn tensor_score_dense(t: &DenseTensor, opts: &DetectOptions) -> Result<Detection> {
    opts.validate(t.dim())?;
    let tuning = Tuning {
        delta: opts.delta.unwrap_or(1.0),
        cap_t: opts.cap_t.unwrap_or(f64::INFINITY),
    };
    let init = hosvd_init_dense(t, opts.k).map_err(|e| e.at_stage("init"))?;
    let (emb, mut diagnostics) = embed_from(t, init, tuning, opts)?;
    diagnostics.method = "tensor-score/dense".into();
    cluster(&emb.rows, opts, diagnostics)
}

/// Oracle Tensor-SCORE: the dense variant run on the signal tensor `Q`.
pub fn oracle_tensor_score(params: &HdcbmParams, restarts: usize, seed: u64) -> Result<Detection> {
    let q = signal_tensor(params, true)?;
    let mut opts = DetectOptions::new(params.k()).with_seed(seed);
    opts.restarts = restarts;
    opts.t_max = 1;
    tensor_score_dense(&q, &opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    BinaryProjectionScore,
    WeightedProjectionScore,
    /// SCORE on the incidence product `H H^T`: co-membership counts off the
    /// diagonal and each node's hyperedge count on it.
    IncidenceProjectionScore,
    Nhcut,
    HosvdKmeans,
}

/// Top-`K` eigenvectors of `D^{-1/2} W D^{-1/2}` for the weighted
/// projection `W`; isolated nodes get zero rows. Returns the factor and the
/// number of isolated nodes.
fn nhcut_factor(h: &Hypergraph, k: usize) -> Result<(InitResult, usize)> {
    let w = h.project_graph(Projection::Weighted);
    let scale: Vec<f64> = w
        .weighted_degrees()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let isolated = scale.iter().filter(|&&s| s == 0.0).count();
    let a = w.adjacency();
    let lap = DMatrix::from_fn(h.n(), h.n(), |i, j| scale[i] * a[(i, j)] * scale[j]);
    let eig = symmetric_top_eigen(&lap, k, EigenOrder::Largest)?;
    Ok((
        InitResult {
            rank_deficient: eig.rank_deficient(),
            factor: FactorMatrix::new_unchecked(eig.vectors),
            spectrum: eig.values,
        },
        isolated,
    ))
}

/// `H H^T` for the `n x |E|` incidence matrix `H`.
pub fn incidence_product(h: &Hypergraph) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(h.n(), h.n());
    for e in h.edges() {
        for &i in e {
            for &j in e {
                out[(i, j)] += 1.0;
            }
        }
    }
    out
}

/// Baseline detectors; `opts.init`, `delta` and `t_max` are ignored.
pub fn baseline_detect(h: &Hypergraph, method: Baseline, opts: &DetectOptions) -> Result<Detection> {
    opts.validate(h.n())?;
    let k = opts.k;
    let mut diagnostics = Diagnostics {
        method: method.to_string(),
        ..Diagnostics::default()
    };
    let points = match method {
        Baseline::BinaryProjectionScore | Baseline::WeightedProjectionScore | Baseline::IncidenceProjectionScore => {
            let adjacency = match method {
                Baseline::BinaryProjectionScore => h.project_graph(Projection::Binary).into_adjacency(),
                Baseline::WeightedProjectionScore => h.project_graph(Projection::Weighted).into_adjacency(),
                _ => incidence_product(h),
            };
            let eig = symmetric_top_eigen(&adjacency, k, EigenOrder::Magnitude).map_err(|e| e.at_stage("init"))?;
            let cap_t = opts.cap_t.unwrap_or_else(|| (h.n() as f64).ln().sqrt());
            diagnostics.rank_deficient = eig.rank_deficient();
            diagnostics.spectrum = eig.values;
            diagnostics.cap_t = Some(cap_t);
            let emb = score_embedding(&FactorMatrix::new_unchecked(eig.vectors), cap_t)
                .map_err(|e| e.at_stage("score"))?;
            diagnostics.truncated_count = emb.truncated_count;
            emb.rows
        }
        Baseline::Nhcut => {
            let (init, isolated) = nhcut_factor(h, k).map_err(|e| e.at_stage("init"))?;
            if isolated > 0 {
                log::warn!("{isolated} isolated nodes have zero rows in the normalized-cut embedding");
            }
            diagnostics.isolated_nodes = isolated;
            diagnostics.rank_deficient = init.rank_deficient;
            diagnostics.spectrum = init.spectrum;
            let mut x = init.factor.into_inner();
            for mut row in x.row_iter_mut() {
                let norm = row.norm();
                if norm > 0.0 {
                    row /= norm;
                }
            }
            x
        }
        Baseline::HosvdKmeans => {
            let init = hosvd_init(h, k).map_err(|e| e.at_stage("init"))?;
            diagnostics.rank_deficient = init.rank_deficient;
            diagnostics.spectrum = init.spectrum;
            init.factor.into_inner()
        }
    };
    cluster(&points, opts, diagnostics)
}

/// Any detector the command line can name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Tensor-SCORE with the initialization given by the options.
    TensorScore,
    TensorScoreNhcut,
    TensorScoreHosvd,
    Baseline(Baseline),
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::TensorScore,
        Method::TensorScoreNhcut,
        Method::TensorScoreHosvd,
        Method::Baseline(Baseline::BinaryProjectionScore),
        Method::Baseline(Baseline::WeightedProjectionScore),
        Method::Baseline(Baseline::IncidenceProjectionScore),
        Method::Baseline(Baseline::Nhcut),
        Method::Baseline(Baseline::HosvdKmeans),
    ];
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Baseline::BinaryProjectionScore => "binary-projection",
            Baseline::WeightedProjectionScore => "weighted-projection",
            Baseline::IncidenceProjectionScore => "incidence-projection",
            Baseline::Nhcut => "nhcut",
            Baseline::HosvdKmeans => "hosvd",
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::TensorScore => f.write_str("tensor-score"),
            Method::TensorScoreNhcut => f.write_str("tensor-score-nhcut"),
            Method::TensorScoreHosvd => f.write_str("tensor-score-hosvd"),
            Method::Baseline(b) => b.fmt(f),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| {
                let names: Vec<String> = Method::ALL.iter().map(ToString::to_string).collect();
                Error::InvalidArgument(format!("unknown method {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Runs `method`; the tensor-score variants with a fixed initialization
/// override `opts.init`.
pub fn detect(h: &Hypergraph, method: Method, opts: &DetectOptions) -> Result<Detection> {
    match method {
        Method::TensorScore => tensor_score(h, opts),
        Method::TensorScoreNhcut => tensor_score(h, &opts.clone().with_init(Init::Nhcut)),
        Method::TensorScoreHosvd => tensor_score(h, &opts.clone().with_init(Init::Hosvd)),
        Method::Baseline(b) => baseline_detect(h, b, opts),
    }
}

/// Per-order SCORE embeddings concatenated column-wise, clustered once.
/// Orders whose embedding fails are dropped with a warning.
pub fn stacked_score(hs: &[Hypergraph], opts: &DetectOptions) -> Result<Detection> {
    let n = match hs.first() {
        Some(h) => h.n(),
        None => return Err(Error::InvalidArgument("no hypergraphs to stack".into())),
    };
    if let Some(h) = hs.iter().find(|h| h.n() != n) {
        return Err(Error::DimensionMismatch(format!("hypergraphs on {} and {n} nodes", h.n())));
    }
    opts.validate(n)?;
    let mut blocks = Vec::new();
    let mut diagnostics = Diagnostics {
        method: format!("stacked-tensor-score/{}", opts.init.name()),
        ..Diagnostics::default()
    };
    for h in hs {
        let attempt = embed(h, opts).and_then(|(emb, d)| {
            if d.rank_deficient {
                Err(Error::DegenerateModel("rank-deficient decomposition".into()))
            } else {
                Ok((emb, d))
            }
        });
        match attempt {
            Ok((emb, d)) => {
                diagnostics.iterations = diagnostics.iterations.max(d.iterations);
                diagnostics.truncated_count += d.truncated_count;
                blocks.push(emb.rows);
            }
            Err(e) => {
                log::warn!("dropping order {} from the stacked embedding: {e}", h.order());
                diagnostics.dropped_orders.push(h.order());
            }
        }
    }
    if blocks.is_empty() {
        return Err(Error::EmptyNetwork("every order was dropped".into()));
    }
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut points = DMatrix::zeros(n, cols);
    let mut at = 0;
    for b in &blocks {
        points.view_mut((0, at), (n, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    cluster(&points, opts, diagnostics)
}

/// Pads every hyperedge of order `m < m0` with the dummy nodes
/// `n + m - 2, ..., n + m0 - 3` so all hyperedges have order `m0`. The
/// result lives on `n + m0 - 2` nodes.
pub fn dummy_node_lift(h: &MixedHypergraph, m0: usize) -> Result<Hypergraph> {
    if m0 < 2 {
        return Err(Error::InvalidArgument(format!("target order must be at least 2, got {m0}")));
    }
    if h.max_order() > m0 {
        return Err(Error::InvalidArgument(format!(
            "hyperedge of order {} exceeds the target order {m0}",
            h.max_order()
        )));
    }
    let n = h.n();
    let lifted = h.edges().iter().map(|e| {
        let mut edge = e.clone();
        edge.extend(n + e.len() - 2..n + m0 - 2);
        edge
    });
    Hypergraph::new(n + m0 - 2, m0, lifted)
}

/// Tensor-SCORE on the lifted hypergraph; rows of the dummy nodes are
/// discarded before k-means.
pub fn lifted_tensor_score(h: &MixedHypergraph, m0: usize, opts: &DetectOptions) -> Result<Detection> {
    let lifted = dummy_node_lift(h, m0)?;
    let (emb, mut diagnostics) = embed(&lifted, opts)?;
    diagnostics.method = format!("lifted-tensor-score/{}", opts.init.name());
    let rows = emb.rows.rows(0, h.n()).into_owned();
    cluster(&rows, opts, diagnostics)
}

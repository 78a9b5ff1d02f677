//! Spectral initializations and regularized higher-order orthogonal
//! iteration (reg-HOOI) for estimating the principal subspace of the
//! adjacency tensor.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::linalg::{subspace_distance, symmetric_top_eigen, truncated_svd, EigenOrder, FactorMatrix};
use crate::pipeline::default_tuning;
use crate::tensor::{contract_from_third, contract_to_matrix, cooccurrence_gram, DenseTensor, TensorOperator};

pub const DEFAULT_T_MAX: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct HooiConfig {
    pub k: usize,
    /// Row-norm cap applied before every contraction.
    pub delta: f64,
    pub t_max: usize,
    /// Stop once consecutive iterates are closer than this.
    pub tol: f64,
    pub record_trace: bool,
}

impl HooiConfig {
    pub fn new(k: usize, delta: f64) -> Self {
        Self {
            k,
            delta,
            t_max: DEFAULT_T_MAX,
            tol: DEFAULT_TOL,
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, 1], got {}", self.delta)));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidArgument("t_max must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be nonnegative, got {}", self.tol)));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("K must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the iteration trace. Iteration 0 describes the initial factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub subspace_change: Option<f64>,
    pub oracle_distance: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct HooiResult {
    pub factor: FactorMatrix,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    /// Singular values of the last contraction.
    pub singular_values: Vec<f64>,
    /// The iteration stopped early because a step lost rank.
    pub rank_deficient: bool,
}

impl HooiResult {
    /// CSV with header `iteration,subspace_change,oracle_distance`; missing
    /// values are left empty.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,subspace_change,oracle_distance\n");
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for t in &self.trace {
            out.push_str(&format!("{},{},{}\n", t.iteration, cell(t.subspace_change), cell(t.oracle_distance)));
        }
        out
    }
}

/// An initial factor together with the spectrum it came from.
#[derive(Clone, Debug)]
pub struct InitResult {
    pub factor: FactorMatrix,
    /// Eigenvalues (or singular values) backing each column.
    pub spectrum: Vec<f64>,
    /// The `K`-th value is numerically zero, so trailing columns were
    /// completed arbitrarily.
    pub rank_deficient: bool,
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::RankTooLarge {
            requested: k,
            available: n,
        });
    }
    Ok(())
}

fn from_symmetric(s: &DMatrix<f64>, k: usize, order: EigenOrder) -> Result<InitResult> {
    let eig = symmetric_top_eigen(s, k, order)?;
    let rank_deficient = eig.rank_deficient();
    if rank_deficient {
        log::warn!("initial matrix has numerical rank below {k}; padding the factor");
    }
    Ok(InitResult {
        factor: FactorMatrix::new_unchecked(eig.vectors),
        spectrum: eig.values,
        rank_deficient,
    })
}

/// HOSVD: top-`K` eigenvectors of `M_1(A) M_1(A)^T`, i.e. the left singular
/// vectors of the mode-1 unfolding.
pub fn hosvd_init(h: &Hypergraph, k: usize) -> Result<InitResult> {
    check_k(k, h.n())?;
    from_symmetric(&cooccurrence_gram(h, false), k, EigenOrder::Magnitude)
}

/// HOSVD with the diagonal of the Gram matrix removed; the result may be
/// indefinite, so eigenvectors are ranked by `|eigenvalue|`.
pub fn diag_removed_hosvd_init(h: &Hypergraph, k: usize) -> Result<InitResult> {
    check_k(k, h.n())?;
    from_symmetric(&cooccurrence_gram(h, true), k, EigenOrder::Magnitude)
}

/// Random weights `eta_i ~ Unif(1 - eps, 1 + eps)`.
pub fn projection_weights(n: usize, eps: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| 1.0 - eps + 2.0 * eps * rng.random::<f64>()).collect()
}

/// Randomized graph projection: top-`K` eigenvectors (by `|eigenvalue|`) of
/// `A x_3 eta^T .. x_m eta^T`. With `eps = 0` this is the weighted graph
/// projection.
pub fn randomized_projection_init(h: &Hypergraph, k: usize, eps: f64, seed: u64) -> Result<InitResult> {
    check_k(k, h.n())?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps must lie in [0, 1), got {eps}")));
    }
    let eta = projection_weights(h.n(), eps, seed);
    from_symmetric(&contract_to_matrix(h, &eta)?, k, EigenOrder::Magnitude)
}

/// HOSVD of a dense tensor through its explicit unfolding.
pub fn hosvd_init_dense(t: &DenseTensor, k: usize) -> Result<InitResult> {
    check_k(k, t.dim())?;
    let svd = truncated_svd(&t.mode1_unfolding(), k)?;
    let rank_deficient = svd.rank_deficient();
    Ok(InitResult {
        factor: FactorMatrix::new_unchecked(svd.u),
        spectrum: svd.s,
        rank_deficient,
    })
}

#[derive(Clone, Debug)]
pub struct Regularized {
    pub factor: FactorMatrix,
    /// Rows whose norm exceeded `delta`.
    pub truncated_rows: usize,
    pub rank_deficient: bool,
}

/// Caps every row norm at `delta`, then returns the top-`K` left singular
/// vectors of the capped matrix. Zero rows stay zero.
pub fn regularize_factor(x: &DMatrix<f64>, delta: f64) -> Result<Regularized> {
    let capped = cap_rows(x, delta);
    let truncated_rows = x
        .row_iter()
        .filter(|r| r.norm() > delta)
        .count();
    if capped.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("cannot regularize a zero matrix".into()));
    }
    let svd = truncated_svd(&capped, x.ncols())?;
    Ok(Regularized {
        rank_deficient: svd.rank_deficient(),
        factor: FactorMatrix::new_unchecked(svd.u),
        truncated_rows,
    })
}

/// `X(i,:) * min(delta, ||X(i,:)||) / ||X(i,:)||`, with `0/0` read as 0.
pub fn cap_rows(x: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm > delta {
            row *= delta / norm;
        }
    }
    out
}

/// reg-HOOI: alternate the row-norm regularization with a HOOI step
/// (`Xi^(t)` = top-`K` left singular vectors of `M_1(T x_2 Xi_*^T .. x_m Xi_*^T)`).
///
/// With an `oracle` factor the trace also records the distance to it.
pub fn reg_hooi<T: TensorOperator + ?Sized>(
    tensor: &T,
    init: &FactorMatrix,
    cfg: &HooiConfig,
    oracle: Option<&FactorMatrix>,
) -> Result<HooiResult> {
    cfg.validate()?;
    if init.nrows() != tensor.dim() || init.ncols() != cfg.k {
        return Err(Error::DimensionMismatch(format!(
            "initial factor is {}x{}, expected {}x{}",
            init.nrows(),
            init.ncols(),
            tensor.dim(),
            cfg.k
        )));
    }
    if let Some(o) = oracle {
        if o.nrows() != init.nrows() || o.ncols() != init.ncols() {
            return Err(Error::DimensionMismatch("oracle factor shape differs from the initial factor".into()));
        }
    }
    let oracle_distance = |f: &FactorMatrix| -> Result<Option<f64>> {
        oracle.map(|o| subspace_distance(f, o)).transpose()
    };

    let mut trace = Vec::new();
    if cfg.record_trace {
        trace.push(TraceEntry {
            iteration: 0,
            subspace_change: None,
            oracle_distance: oracle_distance(init)?,
        });
    }
    let mut current = init.clone();
    let mut singular_values = Vec::new();
    let mut iterations = 0;
    let mut rank_deficient = false;
    for t in 1..=cfg.t_max {
        let reg = regularize_factor(current.as_matrix(), cfg.delta)?;
        if reg.rank_deficient {
            log::warn!("regularized factor lost rank at iteration {t}; keeping the previous iterate");
            rank_deficient = true;
            break;
        }
        let unfolded = tensor.contract_all_but_one(reg.factor.as_matrix())?;
        let svd = truncated_svd(&unfolded, cfg.k)?;
        if svd.rank_deficient() {
            log::warn!("contraction lost rank at iteration {t}; keeping the previous iterate");
            rank_deficient = true;
            singular_values = svd.s;
            break;
        }
        let next = FactorMatrix::new_unchecked(svd.u);
        let change = subspace_distance(&next, &current)?;
        iterations = t;
        singular_values = svd.s;
        if cfg.record_trace {
            trace.push(TraceEntry {
                iteration: t,
                subspace_change: Some(change),
                oracle_distance: oracle_distance(&next)?,
            });
        }
        current = next;
        if change < cfg.tol {
            break;
        }
    }
    Ok(HooiResult {
        factor: current,
        iterations,
        trace,
        singular_values,
        rank_deficient,
    })
}

/// [`reg_hooi`] on a dense tensor, e.g. a noiseless signal tensor.
pub fn reg_hooi_dense(
    tensor: &DenseTensor,
    init: &FactorMatrix,
    cfg: &HooiConfig,
    oracle: Option<&FactorMatrix>,
) -> Result<HooiResult> {
    reg_hooi(tensor, init, cfg, oracle)
}

/// Rule used to read the number of communities off a spectrum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KMode {
    /// `max{k : s_k / s_{k-1} <= log log n}`, falling back to `r`.
    AsWritten,
    /// `max{k : s_{k-1} / s_k >= log log n} - 1`, falling back to `r`.
    #[default]
    Gap,
}

impl fmt::Display for KMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KMode::AsWritten => "as-written",
            KMode::Gap => "gap",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KEstimate {
    pub k_hat: usize,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
}

/// Applies the selection rule to nonincreasing `sigmas` (`r = sigmas.len()`).
pub fn k_from_spectrum(sigmas: &[f64], n: usize, mode: KMode) -> Result<usize> {
    let r = sigmas.len();
    if r < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 singular values, got {r}")));
    }
    let c = loglog_threshold(n)?;
    let hits = (2..=r).filter(|&k| {
        let (prev, cur) = (sigmas[k - 2], sigmas[k - 1]);
        match mode {
            KMode::AsWritten => cur <= c * prev,
            KMode::Gap => prev > 0.0 && prev >= c * cur,
        }
    });
    Ok(match (mode, hits.max()) {
        (KMode::AsWritten, Some(k)) => k,
        (KMode::Gap, Some(k)) => k - 1,
        (_, None) => r,
    })
}

fn loglog_threshold(n: usize) -> Result<f64> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!("K estimation needs n >= 16, got {n}")));
    }
    Ok((n as f64).ln().ln())
}

/// Estimates `K` from the top-`r` singular values of
/// `M_1(A x_3 Xi^T .. x_m Xi^T)`, where `Xi` is the reg-HOOI factor with
/// `K = r` started from diagonal-removed HOSVD. For graphs (`m = 2`) the
/// spectrum of `A Xi` is used.
pub fn estimate_k(h: &Hypergraph, r: usize, mode: KMode) -> Result<KEstimate> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("r must be at least 2, got {r}")));
    }
    let threshold = loglog_threshold(h.n())?;
    let init = diag_removed_hosvd_init(h, r)?;
    let tuning = default_tuning(h, r)?;
    let fit = reg_hooi(h, &init.factor, &HooiConfig::new(r, tuning.delta), None)?;
    let x = fit.factor.as_matrix();
    let reduced = if h.order() == 2 {
        contract_to_matrix(h, &vec![1.0; h.n()])? * x
    } else {
        contract_from_third(h, x)?
    };
    let sigmas = truncated_svd(&reduced, r)?.s;
    Ok(KEstimate {
        k_hat: k_from_spectrum(&sigmas, h.n(), mode)?,
        singular_values: sigmas,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_error;

    #[test]
    fn config_validation() {
        assert!(HooiConfig::new(2, 0.0).validate().is_err());
        assert!(HooiConfig::new(2, 1.5).validate().is_err());
        let mut c = HooiConfig::new(2, 0.5);
        c.t_max = 0;
        assert!(c.validate().is_err());
        assert!(HooiConfig::new(2, 1.0).validate().is_ok());
    }

    #[test]
    fn regularize_identity_when_rows_small() {
        let x = FactorMatrix::orthonormalize(&DMatrix::from_fn(6, 2, |i, j| ((i + 2 * j) as f64).cos())).unwrap();
        let max_row = x.row_norms().into_iter().fold(0.0, f64::max);
        let r = regularize_factor(x.as_matrix(), max_row + 1e-9).unwrap();
        assert_eq!(r.truncated_rows, 0);
        assert!(subspace_distance(&r.factor, &x).unwrap() < 1e-10);
    }

    #[test]
    fn regularize_single_column() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let r = regularize_factor(&x, 0.5).unwrap();
        assert_eq!(r.truncated_rows, 1);
        assert!((r.factor.as_matrix()[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(r.factor.as_matrix()[(1, 0)], 0.0);
    }

    #[test]
    fn capped_rows_respect_delta() {
        let x = DMatrix::from_fn(10, 3, |i, j| ((i * 7 + j * 3) as f64 * 0.3).sin());
        for row in cap_rows(&x, 0.4).row_iter() {
            assert!(row.norm() <= 0.4 + 1e-12);
        }
    }

    #[test]
    fn empty_hypergraph_flags_rank() {
        let h = Hypergraph::empty(5, 3).unwrap();
        let init = hosvd_init(&h, 2).unwrap();
        assert!(init.rank_deficient);
        assert!(orthonormality_error(init.factor.as_matrix()) < 1e-12);
        assert!(diag_removed_hosvd_init(&h, 2).unwrap().rank_deficient);
    }

    #[test]
    fn graph_hosvd_is_adjacency_eigenvectors() {
        let h = Hypergraph::new(5, 2, [[0, 1], [1, 2], [2, 3], [3, 4], [0, 4], [0, 2]]).unwrap();
        let init = hosvd_init(&h, 2).unwrap();
        let a = contract_to_matrix(&h, &[1.0; 5]).unwrap();
        let eig = symmetric_top_eigen(&a, 2, EigenOrder::Magnitude).unwrap();
        let expect = FactorMatrix::new(eig.vectors).unwrap();
        assert!(subspace_distance(&init.factor, &expect).unwrap() < 1e-9);
    }

    #[test]
    fn zero_eps_is_weighted_projection() {
        let h = Hypergraph::new(6, 3, [[0, 1, 2], [1, 2, 3], [3, 4, 5], [0, 4, 5], [0, 1, 5]]).unwrap();
        assert!(projection_weights(6, 0.0, 1).iter().all(|&v| v == 1.0));
        let init = randomized_projection_init(&h, 2, 0.0, 9).unwrap();
        let w = h.project_graph(crate::hypergraph::Projection::Weighted);
        let eig = symmetric_top_eigen(w.adjacency(), 2, EigenOrder::Magnitude).unwrap();
        assert!(subspace_distance(&init.factor, &FactorMatrix::new(eig.vectors).unwrap()).unwrap() < 1e-9);
        let a = randomized_projection_init(&h, 2, 0.3, 4).unwrap();
        let b = randomized_projection_init(&h, 2, 0.3, 4).unwrap();
        assert_eq!(a.factor, b.factor);
        assert!(randomized_projection_init(&h, 2, 1.0, 4).is_err());
    }

    #[test]
    fn spectrum_rules() {
        let s = [10.0, 8.0, 0.5, 0.4, 0.3];
        assert_eq!(k_from_spectrum(&s, 1000, KMode::Gap).unwrap(), 2);
        assert_eq!(k_from_spectrum(&s, 1000, KMode::AsWritten).unwrap(), 5);
        assert_eq!(k_from_spectrum(&[1.0, 0.9, 0.8, 0.7], 1000, KMode::Gap).unwrap(), 4);
        assert!(k_from_spectrum(&s, 15, KMode::Gap).is_err());
    }

    #[test]
    fn single_step_when_t_max_one() {
        let h = Hypergraph::new(6, 3, [[0, 1, 2], [0, 1, 3], [2, 3, 4], [3, 4, 5], [0, 4, 5], [1, 2, 5], [0, 2, 5]]).unwrap();
        let init = hosvd_init(&h, 2).unwrap();
        let mut cfg = HooiConfig::new(2, 1.0);
        cfg.t_max = 1;
        cfg.record_trace = true;
        let res = reg_hooi(&h, &init.factor, &cfg, None).unwrap();
        assert_eq!(res.iterations, 1);
        assert_eq!(res.trace.len(), 2);
        // one step by hand: delta = 1 leaves orthonormal rows intact
        let m = h.contract_all_but_one(init.factor.as_matrix()).unwrap();
        let manual = FactorMatrix::new(truncated_svd(&m, 2).unwrap().u).unwrap();
        assert!(subspace_distance(&manual, &res.factor).unwrap() < 1e-10);
        assert!(res.trace_csv().starts_with("iteration,subspace_change,oracle_distance\n0,,\n1,"));
    }
}

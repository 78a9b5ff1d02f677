//! The hypergraph degree-corrected block model (hDCBM).
//!
//! A hyperedge on distinct nodes `i_1 < .. < i_m` appears independently with
//! probability `P(k_1, .., k_m) * theta_{i_1} * .. * theta_{i_m}`, where `k_j`
//! is the community of `i_j`. The signal tensor `Q = [P; Theta Pi, .., Theta Pi]`
//! agrees with `E[A]` off the diagonal and has a rank-`K` Tucker structure,
//! which [`oracle_eigens`] exploits to get its spectrum in `K`-dimensional
//! arithmetic.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::linalg::{fix_signs, truncated_svd, FactorMatrix};
use crate::tensor::{permutations, unfold_small, DenseTensor, TensorOperator};

/// Supersymmetric `K x .. x K` core tensor with `m` modes.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreTensor {
    k: usize,
    m: usize,
    values: Vec<f64>,
}

impl CoreTensor {
    /// Takes all `K^m` entries, first index slowest; rejects non-symmetric input.
    pub fn new(k: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || m < 2 {
            return Err(Error::InvalidModel(format!("core needs K >= 1 and m >= 2, got K={k}, m={m}")));
        }
        if values.len() != k.pow(m as u32) {
            return Err(Error::InvalidModel(format!(
                "core with K={k}, m={m} needs {} entries, got {}",
                k.pow(m as u32),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidModel("core entries must be finite and nonnegative".into()));
        }
        let core = Self { k, m, values };
        let perms = permutations(m);
        for lin in 0..core.values.len() {
            let idx = core.index_of(lin);
            for p in &perms {
                let q: Vec<usize> = p.iter().map(|&j| idx[j]).collect();
                if (core.get(&q) - core.values[lin]).abs() > 1e-12 {
                    return Err(Error::InvalidModel(format!("core is not symmetric at {idx:?} vs {q:?}")));
                }
            }
        }
        if core.values.iter().any(|&v| v > 1.0) {
            log::warn!("core tensor has entries above 1");
        }
        Ok(core)
    }

    /// Builds a symmetric core from a function of the sorted index tuple.
    pub fn from_multiset(k: usize, m: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let values = (0..k.pow(m as u32))
            .map(|lin| {
                let mut idx = index_of(lin, k, m);
                idx.sort_unstable();
                f(&idx)
            })
            .collect();
        Self::new(k, m, values)
    }

    /// `1` on the super-diagonal and `b` everywhere else.
    pub fn symmetric_sbm(k: usize, m: usize, b: f64) -> Result<Self> {
        Self::from_multiset(k, m, |idx| if idx.iter().all(|&c| c == idx[0]) { 1.0 } else { b })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[idx.iter().fold(0, |acc, &i| acc * self.k + i)]
    }

    fn index_of(&self, lin: usize) -> Vec<usize> {
        index_of(lin, self.k, self.m)
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn index_of(mut lin: usize, k: usize, m: usize) -> Vec<usize> {
    let mut idx = vec![0; m];
    for slot in idx.iter_mut().rev() {
        *slot = lin % k;
        lin /= k;
    }
    idx
}

/// Full hDCBM parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct HdcbmParams {
    labels: Vec<usize>,
    theta: Vec<f64>,
    core: CoreTensor,
}

impl HdcbmParams {
    pub fn new(labels: Vec<usize>, theta: Vec<f64>, core: CoreTensor) -> Result<Self> {
        let k = core.k();
        if labels.len() != theta.len() {
            return Err(Error::InvalidModel(format!(
                "{} labels but {} degree parameters",
                labels.len(),
                theta.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidModel(format!("label {bad} outside 0..{k}")));
        }
        if let Some(bad) = theta.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidModel(format!("degree parameter {bad} is not positive")));
        }
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidModel(format!("community {empty} is empty")));
        }
        if labels.len() < core.order() {
            return Err(Error::InvalidModel(format!(
                "{} nodes cannot carry order-{} hyperedges",
                labels.len(),
                core.order()
            )));
        }
        Ok(Self { labels, theta, core })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn order(&self) -> usize {
        self.core.order()
    }

    pub fn k(&self) -> usize {
        self.core.k()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn core(&self) -> &CoreTensor {
        &self.core
    }

    pub fn theta_norm(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum::<f64>().sqrt()
    }

    /// Per-community `(sum theta, sum theta^2, max theta)`.
    fn community_stats(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let k = self.k();
        let mut mass = vec![0.0; k];
        let mut sq = vec![0.0; k];
        let mut max = vec![0.0f64; k];
        for (&l, &t) in self.labels.iter().zip(&self.theta) {
            mass[l] += t;
            sq[l] += t * t;
            max[l] = max[l].max(t);
        }
        (mass, sq, max)
    }

    /// `d_k = ||theta||^{-1} (sum_{i in V_k} theta_i^2)^{1/2}`.
    pub fn d(&self) -> Vec<f64> {
        let norm = self.theta_norm();
        self.community_stats().1.iter().map(|s| s.sqrt() / norm).collect()
    }

    /// `P* = P x_1 D x_2 .. x_m D` as a function on index tuples.
    fn scaled_core(&self) -> impl Fn(&[usize]) -> f64 + '_ {
        let d = self.d();
        move |idx: &[usize]| self.core.get(idx) * idx.iter().map(|&c| d[c]).product::<f64>()
    }

    /// Rescales so that `P(k, .., k) = 1` for every community by moving the
    /// diagonal mass into `theta`. Fails if a diagonal core entry is zero.
    pub fn identifiable(&self) -> Result<Self> {
        let (k, m) = (self.k(), self.order());
        let scale: Vec<f64> = (0..k)
            .map(|c| self.core.get(&vec![c; m]).powf(1.0 / m as f64))
            .collect();
        if scale.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidModel("a diagonal core entry is zero".into()));
        }
        let core = CoreTensor::new(
            k,
            m,
            (0..k.pow(m as u32))
                .map(|lin| {
                    let idx = index_of(lin, k, m);
                    self.core.get(&idx) / idx.iter().map(|&c| scale[c]).product::<f64>()
                })
                .collect(),
        )?;
        let theta = self.labels.iter().zip(&self.theta).map(|(&l, &t)| t * scale[l]).collect();
        Self::new(self.labels.clone(), theta, core)
    }

    fn probability(&self, nodes: &[usize], core_index: usize, theta_prod: f64) -> Result<f64> {
        let p = self.core.values[core_index] * theta_prod;
        if p > 1.0 + 1e-12 {
            let class: Vec<usize> = nodes.iter().map(|&i| self.labels[i] + 1).collect();
            return Err(Error::InvalidModel(format!(
                "hyperedge probability {p:.6} exceeds 1 for community class {class:?} (nodes {nodes:?})"
            )));
        }
        Ok(p)
    }

    /// Visits every sorted node tuple starting at `first` with its
    /// probability, in lexicographic order.
    fn for_each_tuple_from(&self, first: usize, mut f: impl FnMut(&[usize], f64)) -> Result<()> {
        let m = self.order();
        let mut nodes = vec![0usize; m];
        nodes[0] = first;
        let base = self.labels[first];
        self.walk(&mut nodes, 1, base, self.theta[first], &mut f)
    }

    fn walk(
        &self,
        nodes: &mut Vec<usize>,
        depth: usize,
        core_index: usize,
        theta_prod: f64,
        f: &mut impl FnMut(&[usize], f64),
    ) -> Result<()> {
        let m = self.order();
        if depth == m {
            let p = self.probability(nodes, core_index, theta_prod)?;
            f(nodes, p);
            return Ok(());
        }
        let n = self.n();
        let start = nodes[depth - 1] + 1;
        // leave room for the remaining slots
        let end = n - (m - depth - 1);
        for i in start..end {
            nodes[depth] = i;
            self.walk(
                nodes,
                depth + 1,
                core_index * self.k() + self.labels[i],
                theta_prod * self.theta[i],
                f,
            )?;
        }
        Ok(())
    }

    fn first_nodes(&self) -> std::ops::Range<usize> {
        0..self.n() + 1 - self.order()
    }

    /// `sum` and `sum p(1-p)` of the hyperedge probabilities over all sorted
    /// tuples: the mean and variance of the hyperedge count.
    pub fn edge_count_moments(&self) -> Result<(f64, f64)> {
        let parts = self
            .first_nodes()
            .into_par_iter()
            .map(|first| {
                let mut mean = 0.0;
                let mut var = 0.0;
                self.for_each_tuple_from(first, |_, p| {
                    mean += p;
                    var += p * (1.0 - p);
                })?;
                Ok((mean, var))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1)))
    }
}

/// Samples a hypergraph from the model.
///
/// Every sorted tuple `i_1 < .. < i_m` gets one uniform draw. Draws for
/// tuples sharing a first node come from one ChaCha stream keyed by
/// `(seed, i_1)`, so the output does not depend on thread scheduling.
pub fn sample_hdcbm(params: &HdcbmParams, seed: u64) -> Result<Hypergraph> {
    let m = params.order();
    let chunks = params
        .first_nodes()
        .into_par_iter()
        .map(|first| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(first as u64);
            let mut edges = Vec::new();
            params.for_each_tuple_from(first, |nodes, p| {
                let u: f64 = rng.random();
                if u < p {
                    edges.extend_from_slice(nodes);
                }
            })?;
            Ok(edges)
        })
        .collect::<Result<Vec<_>>>()?;
    let flat: Vec<usize> = chunks.concat();
    Hypergraph::new(params.n(), m, flat.chunks_exact(m))
}

/// Dense `Q` (or `E[A]` when `include_diagonal` is false).
pub fn signal_tensor(params: &HdcbmParams, include_diagonal: bool) -> Result<DenseTensor> {
    let labels = params.labels();
    let theta = params.theta();
    let mut buf = Vec::with_capacity(params.order());
    let mut q = DenseTensor::from_fn(params.n(), params.order(), |idx| {
        buf.clear();
        buf.extend(idx.iter().map(|&i| labels[i]));
        params.core().get(&buf) * idx.iter().map(|&i| theta[i]).product::<f64>()
    })?;
    if !include_diagonal {
        q.remove_diagonal();
    }
    Ok(q)
}

/// Singular structure of `M_1(Q)` obtained through the `K x K^{m-1}` matrix
/// `G = M_1(P x_1 D .. x_m D)`.
#[derive(Clone, Debug)]
pub struct OracleEigens {
    pub d: Vec<f64>,
    pub g: DMatrix<f64>,
    /// Singular values of `G`, nonincreasing.
    pub kappas: Vec<f64>,
    /// Left singular vectors of `G` as columns.
    pub u: DMatrix<f64>,
    /// Singular values of `M_1(Q)`: `kappa_k ||theta||^m`.
    pub lambdas: Vec<f64>,
    /// `||theta||^{-1} Theta Pi D^{-1} U`.
    pub xi: FactorMatrix,
}

const DEGENERATE_TOL: f64 = 1e-12;

pub fn oracle_eigens(params: &HdcbmParams) -> Result<OracleEigens> {
    let (k, m) = (params.k(), params.order());
    let d = params.d();
    let g = unfold_small(k, m, params.scaled_core());
    let svd = truncated_svd(&g, k)?;
    if svd.s[k - 1] <= DEGENERATE_TOL {
        return Err(Error::DegenerateModel(format!(
            "core matrix G has rank below {k} (smallest singular value {:e})",
            svd.s[k - 1]
        )));
    }
    let norm = params.theta_norm();
    let mut xi = DMatrix::zeros(params.n(), k);
    for (i, (&l, &t)) in params.labels().iter().zip(params.theta()).enumerate() {
        for c in 0..k {
            xi[(i, c)] = t * svd.u[(l, c)] / (d[l] * norm);
        }
    }
    // keep u and xi on the same sign convention
    let mut u = svd.u.clone();
    let before = xi.clone();
    fix_signs(&mut xi);
    for c in 0..k {
        if xi.column(c).dot(&before.column(c)) < 0.0 {
            u.column_mut(c).neg_mut();
        }
    }
    let lambdas = svd.s.iter().map(|s| s * norm.powi(m as i32)).collect();
    Ok(OracleEigens {
        d,
        g,
        kappas: svd.s,
        u,
        lambdas,
        xi: FactorMatrix::new(xi)?,
    })
}

/// Extreme-singular-value ratios of the signal before and after graph
/// projection. Both use the `K` nonzero singular values (rank `K` signals).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfoLossReport {
    /// `s_K / s_1` of `M_1(Q)`.
    pub if_h: f64,
    /// `s_K / s_1` of `Omega = Q x_3 1^T .. x_m 1^T`.
    pub if_g: f64,
}

fn extreme_ratio(s: &[f64]) -> f64 {
    match (s.first(), s.last()) {
        (Some(&first), Some(&last)) if first > 0.0 => (last / first).clamp(0.0, 1.0),
        _ => 0.0,
    }
}

fn singular_values_small(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Information-loss indices from `K`-dimensional reductions: `M_1(Q)` shares
/// its nonzero spectrum with `||theta||^m G`, and `Omega = Theta Pi W Pi^T Theta`
/// with `W = P x_3 w .. x_m w`, `w_s = sum_{i in V_s} theta_i`, shares its
/// spectrum with `C^{1/2} W C^{1/2}`, `C = diag(sum_{i in V_k} theta_i^2)`.
pub fn information_loss(params: &HdcbmParams) -> InfoLossReport {
    let (k, m) = (params.k(), params.order());
    let g = unfold_small(k, m, params.scaled_core());
    let if_h = extreme_ratio(&singular_values_small(&g)[..k]);
    if m == 2 {
        return InfoLossReport { if_h, if_g: if_h };
    }
    let (mass, sq, _) = params.community_stats();
    let mut reduced = DMatrix::zeros(k, k);
    let mut idx = vec![0usize; m];
    for lin in 0..k.pow(m as u32) {
        for (slot, v) in idx.iter_mut().zip(index_of(lin, k, m)) {
            *slot = v;
        }
        let w: f64 = idx[2..].iter().map(|&s| mass[s]).product();
        reduced[(idx[0], idx[1])] += params.core().get(&idx) * w;
    }
    for a in 0..k {
        for b in 0..k {
            reduced[(a, b)] *= (sq[a] * sq[b]).sqrt();
        }
    }
    let if_g = extreme_ratio(&singular_values_small(&reduced)[..k]);
    InfoLossReport { if_h, if_g }
}

/// Same indices from the dense signal tensor; small `n` only.
pub fn information_loss_dense(params: &HdcbmParams) -> Result<InfoLossReport> {
    let k = params.k();
    let q = signal_tensor(params, true)?;
    let if_h = extreme_ratio(&truncated_svd(&q.mode1_unfolding(), k)?.s);
    let omega = q.contract_to_matrix(&vec![1.0; params.n()])?;
    let if_g = extreme_ratio(&truncated_svd(&omega, k)?.s);
    Ok(InfoLossReport { if_h, if_g })
}

/// `beta(Q) = max_{i_1..i_{m-1}} sum_{i_m} Q(i_1, .., i_m)`, diagonal included.
///
/// The inner sum over `i_m` collapses to community masses, and the outer max
/// picks the largest `theta` in each community of the prefix.
pub fn beta_q(params: &HdcbmParams) -> f64 {
    let (k, m) = (params.k(), params.order());
    let (mass, _, max_theta) = params.community_stats();
    let mut best: f64 = 0.0;
    for lin in 0..k.pow((m - 1) as u32) {
        let prefix = index_of(lin, k, m - 1);
        let mut idx = prefix.clone();
        idx.push(0);
        let row: f64 = (0..k)
            .map(|s| {
                idx[m - 1] = s;
                params.core().get(&idx) * mass[s]
            })
            .sum();
        let scale: f64 = prefix.iter().map(|&c| max_theta[c]).product();
        best = best.max(scale * row);
    }
    best
}

/// `lambda_min(P* x_3 v^T .. x_m v^T) / ||v||^{m-2}` with `P* = P x_1 D .. x_m D`.
pub fn tilde_lambda_min(params: &HdcbmParams, v: &[f64]) -> Result<f64> {
    let (k, m) = (params.k(), params.order());
    if v.len() != k {
        return Err(Error::DimensionMismatch(format!("vector of length {} for K={k}", v.len())));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("v must be nonzero".into()));
    }
    let scaled = params.scaled_core();
    let mut b = DMatrix::<f64>::zeros(k, k);
    for lin in 0..k.pow(m as u32) {
        let idx = index_of(lin, k, m);
        let w: f64 = idx[2..].iter().map(|&c| v[c]).product();
        b[(idx[0], idx[1])] += scaled(&idx) * w;
    }
    let eig = SymmetricEigen::new(b);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min / norm.powi(m as i32 - 2))
}

/// `s_K(M_1(P*))`, the bound in the companion inequality of [`tilde_lambda_min`].
pub fn scaled_core_smin(params: &HdcbmParams) -> f64 {
    let g = unfold_small(params.k(), params.order(), params.scaled_core());
    *singular_values_small(&g)[..params.k()].last().unwrap()
}

impl TensorOperator for HdcbmParams {
    fn dim(&self) -> usize {
        self.n()
    }

    fn order(&self) -> usize {
        HdcbmParams::order(self)
    }

    /// Contraction of `Q` itself (diagonal included) in `O(nK^m)` using the
    /// Tucker structure: `M_1(Q x_2 X^T ..) = Theta Pi M_1(P) (Y (x) .. (x) Y)^T`
    /// with `Y = X^T Theta Pi`.
    fn contract_all_but_one(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, model has {} nodes",
                x.nrows(),
                self.n()
            )));
        }
        let (k, m, r) = (self.k(), HdcbmParams::order(self), x.ncols());
        // y[c][j] = sum_{i in V_c} theta_i x(i, j)
        let mut y = DMatrix::<f64>::zeros(k, r);
        for (i, (&l, &t)) in self.labels.iter().zip(&self.theta).enumerate() {
            for j in 0..r {
                y[(l, j)] += t * x[(i, j)];
            }
        }
        let width = r.pow((m - 1) as u32);
        let mut small = DMatrix::zeros(k, width);
        for lin in 0..k.pow(m as u32) {
            let idx = index_of(lin, k, m);
            let p = self.core.get(&idx);
            if p == 0.0 {
                continue;
            }
            for col in 0..width {
                let js = index_of_rev(col, r, m - 1);
                let w: f64 = idx[1..].iter().zip(&js).map(|(&c, &j)| y[(c, j)]).product();
                small[(idx[0], col)] += p * w;
            }
        }
        let mut out = DMatrix::zeros(self.n(), width);
        for (i, (&l, &t)) in self.labels.iter().zip(&self.theta).enumerate() {
            out.row_mut(i).copy_from(&(small.row(l) * t));
        }
        Ok(out)
    }
}

/// Inverse of the mode-1 column map: first entry varies fastest.
fn index_of_rev(mut col: usize, r: usize, len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(col % r);
        col /= r;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_block(n: usize, core: CoreTensor, theta: f64) -> HdcbmParams {
        let labels = (0..n).map(|i| usize::from(i >= n / 2)).collect();
        HdcbmParams::new(labels, vec![theta; n], core).unwrap()
    }

    #[test]
    fn core_validation() {
        assert!(CoreTensor::new(2, 2, vec![1.0, 0.2, 0.3, 1.0]).is_err());
        assert!(CoreTensor::new(2, 2, vec![1.0, 0.2, 0.2]).is_err());
        let c = CoreTensor::symmetric_sbm(2, 3, 0.5).unwrap();
        assert_eq!(c.get(&[1, 1, 1]), 1.0);
        assert_eq!(c.get(&[1, 0, 1]), 0.5);
    }

    #[test]
    fn params_validation() {
        let core = CoreTensor::symmetric_sbm(2, 2, 0.5).unwrap();
        assert!(HdcbmParams::new(vec![0, 0, 0], vec![1.0; 3], core.clone()).is_err());
        assert!(HdcbmParams::new(vec![0, 1, 2], vec![1.0; 3], core.clone()).is_err());
        assert!(HdcbmParams::new(vec![0, 1], vec![1.0, 0.0], core).is_err());
    }

    #[test]
    fn zero_core_samples_nothing() {
        let p = two_block(10, CoreTensor::from_multiset(2, 3, |_| 0.0).unwrap(), 1.0);
        assert!(sample_hdcbm(&p, 1).unwrap().is_empty());
    }

    #[test]
    fn certain_edge() {
        let core = CoreTensor::from_multiset(1, 3, |_| 1.0).unwrap();
        let p = HdcbmParams::new(vec![0; 3], vec![1.0; 3], core).unwrap();
        let h = sample_hdcbm(&p, 7).unwrap();
        assert_eq!(h.edges().collect::<Vec<_>>(), vec![&[0, 1, 2][..]]);
    }

    #[test]
    fn probability_above_one_names_class() {
        let core = CoreTensor::from_multiset(1, 2, |_| 1.0).unwrap();
        let p = HdcbmParams::new(vec![0; 3], vec![1.0, 2.0, 1.0], core).unwrap();
        match sample_hdcbm(&p, 0) {
            Err(Error::InvalidModel(msg)) => assert!(msg.contains("community class")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sampling_is_seed_stable() {
        let p = two_block(30, CoreTensor::symmetric_sbm(2, 3, 0.3).unwrap(), 0.5);
        let a = sample_hdcbm(&p, 42).unwrap();
        let b = sample_hdcbm(&p, 42).unwrap();
        let c = sample_hdcbm(&p, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn signal_tensor_small() {
        let core = CoreTensor::from_multiset(1, 2, |_| 1.0).unwrap();
        let p = HdcbmParams::new(vec![0, 0], vec![1.0, 2.0], core).unwrap();
        let q = signal_tensor(&p, true).unwrap();
        assert_eq!(q.values(), &[1.0, 2.0, 2.0, 4.0]);
        let ea = signal_tensor(&p, false).unwrap();
        assert_eq!(ea.values(), &[0.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn constant_core_signal() {
        let p = two_block(4, CoreTensor::from_multiset(2, 3, |_| 0.25).unwrap(), 1.0);
        let ea = signal_tensor(&p, false).unwrap();
        ea.for_each(|idx, v| {
            let distinct = idx[0] != idx[1] && idx[1] != idx[2] && idx[0] != idx[2];
            assert_eq!(v, if distinct { 0.25 } else { 0.0 });
        });
    }

    #[test]
    fn hsbm_closed_form() {
        let p = two_block(8, CoreTensor::symmetric_sbm(2, 3, 0.5).unwrap(), 0.3);
        let o = oracle_eigens(&p).unwrap();
        assert!((o.kappas[0] - 0.40625f64.sqrt()).abs() < 1e-12);
        assert!((o.kappas[1] - 0.5 / 2f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_core_is_degenerate() {
        let p = two_block(6, CoreTensor::from_multiset(2, 3, |_| 0.4).unwrap(), 1.0);
        assert!(matches!(oracle_eigens(&p), Err(Error::DegenerateModel(_))));
        let r = information_loss(&p);
        assert!(r.if_h < 1e-12);
    }

    #[test]
    fn information_loss_m2_identical() {
        let core = CoreTensor::new(2, 2, vec![0.8, 0.1, 0.1, 0.5]).unwrap();
        let p = HdcbmParams::new(vec![0, 0, 1, 1, 1], vec![0.5, 0.9, 0.3, 0.7, 0.6], core).unwrap();
        let r = information_loss(&p);
        assert_eq!(r.if_h, r.if_g);
    }

    #[test]
    fn beta_constant_model() {
        let p = two_block(10, CoreTensor::from_multiset(2, 3, |_| 0.2).unwrap(), 1.0);
        assert!((beta_q(&p) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn beta_homogeneity() {
        let core = CoreTensor::new(2, 2, vec![0.8, 0.1, 0.1, 0.5]).unwrap();
        let theta = vec![0.5, 0.9, 0.3, 0.7, 0.6];
        let p = HdcbmParams::new(vec![0, 0, 1, 1, 1], theta.clone(), core.clone()).unwrap();
        let scaled = HdcbmParams::new(vec![0, 0, 1, 1, 1], theta.iter().map(|t| t * 0.5).collect(), core).unwrap();
        assert!((beta_q(&scaled) - beta_q(&p) * 0.25).abs() < 1e-14);
    }

    #[test]
    fn tilde_lambda_examples() {
        // super-diagonal identity core, equal communities: P* = I / K^{m/2}
        let core = CoreTensor::from_multiset(2, 3, |idx| f64::from(u8::from(idx[0] == idx[2]))).unwrap();
        let p = two_block(6, core, 1.0);
        assert!(tilde_lambda_min(&p, &[1.0, 0.0]).unwrap().abs() < 1e-15);
        let a = tilde_lambda_min(&p, &[0.3, 0.7]).unwrap();
        let b = tilde_lambda_min(&p, &[0.6, 1.4]).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!(tilde_lambda_min(&p, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn identifiable_scaling_preserves_probabilities() {
        let core = CoreTensor::from_multiset(2, 3, |idx| match idx {
            [0, 0, 0] => 0.3,
            [1, 1, 1] => 0.6,
            _ => 0.2,
        })
        .unwrap();
        let p = two_block(6, core, 0.5);
        let q = p.identifiable().unwrap();
        assert!((q.core().get(&[0, 0, 0]) - 1.0).abs() < 1e-12);
        let a = signal_tensor(&p, true).unwrap();
        let b = signal_tensor(&q, true).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn structured_contraction_matches_dense() {
        let core = CoreTensor::from_multiset(2, 3, |idx| 0.1 + 0.2 * idx.iter().sum::<usize>() as f64).unwrap();
        let labels = vec![0, 1, 0, 1, 1, 0, 0];
        let theta = vec![0.3, 0.5, 0.9, 0.2, 0.7, 0.4, 0.8];
        let p = HdcbmParams::new(labels, theta, core).unwrap();
        let q = signal_tensor(&p, true).unwrap();
        let x = DMatrix::from_fn(7, 3, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
        let a = p.contract_all_but_one(&x).unwrap();
        let b = q.contract_all_but_one(&x).unwrap();
        assert!((a - b).abs().max() < 1e-13);
    }
}

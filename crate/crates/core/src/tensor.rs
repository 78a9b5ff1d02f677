//! Tensor-matrix contractions on the adjacency tensor of a hypergraph.
//!
//! The sparse routines iterate hyperedges times the `m!` orderings of each
//! hyperedge, which is exactly the support of the supersymmetric adjacency
//! tensor. [`DenseTensor`] keeps every entry and serves as a brute-force
//! reference and as the input type for noiseless signal tensors.
//!
//! Matricization follows the usual convention: the mode-1 unfolding of an
//! order-`m` tensor with mode sizes `(n_1, .., n_m)` puts entry
//! `(i_1, .., i_m)` at row `i_1` and column `sum_{j>=2} i_j prod_{l<j, l>=2} n_l`,
//! so mode 2 varies fastest.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hypergraph::{factorial, Hypergraph};

/// Largest number of entries a [`DenseTensor`] may hold.
pub const DENSE_LIMIT: usize = 1 << 27;

/// All permutations of `0..m` in lexicographic order.
pub(crate) fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(factorial(m) as usize);
    let mut current: Vec<usize> = (0..m).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (0..m.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

/// Accumulates `scale * (x[rows[0],:] (x) x[rows[1],:] (x) ..)` into `dst`,
/// with the first listed row varying fastest.
fn accumulate_kron(dst: &mut [f64], x: &DMatrix<f64>, rows: &[usize], scale: f64, buf: &mut Vec<f64>) {
    let k = x.ncols();
    buf.clear();
    buf.push(scale);
    let mut stride = 1;
    for &r in rows {
        buf.resize(stride * k, 0.0);
        // fill high blocks first so the low block is read before overwritten
        for kk in (0..k).rev() {
            let xv = x[(r, kk)];
            for c in 0..stride {
                buf[c + kk * stride] = buf[c] * xv;
            }
        }
        stride *= k;
    }
    for (d, b) in dst.iter_mut().zip(buf.iter()) {
        *d += *b;
    }
}

/// Something that behaves like a supersymmetric order-`m` tensor on `n`
/// nodes for the purposes of power iteration.
pub trait TensorOperator {
    fn dim(&self) -> usize;
    fn order(&self) -> usize;
    /// `M_1(T x_2 X^T x_3 .. x_m X^T)`, an `n x K^{m-1}` matrix.
    fn contract_all_but_one(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>>;
}

fn check_rows(x_rows: usize, n: usize) -> Result<()> {
    if x_rows != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {x_rows} rows, tensor dimension is {n}"
        )));
    }
    Ok(())
}

impl TensorOperator for Hypergraph {
    fn dim(&self) -> usize {
        self.n()
    }

    fn order(&self) -> usize {
        Hypergraph::order(self)
    }

    fn contract_all_but_one(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_rows(x.nrows(), self.n())?;
        let m = Hypergraph::order(self);
        let k = x.ncols();
        let width = k.pow((m - 1) as u32);
        // row-major accumulation, transposed at the end
        let mut out = vec![0.0; self.n() * width];
        let perms = permutations(m);
        let mut tail = vec![0usize; m - 1];
        let mut buf = Vec::with_capacity(width);
        for e in self.edges() {
            for p in &perms {
                for (t, &pos) in tail.iter_mut().zip(&p[1..]) {
                    *t = e[pos];
                }
                let row = e[p[0]];
                accumulate_kron(&mut out[row * width..(row + 1) * width], x, &tail, 1.0, &mut buf);
            }
        }
        Ok(DMatrix::from_row_slice(self.n(), width, &out))
    }
}

/// `M_1(A x_3 X^T x_4 .. x_m X^T)`: every mode but the first two contracted,
/// giving an `n x (n K^{m-2})` matrix whose column is `i_2 + n * c` with `c`
/// the Kronecker index of the contracted modes.
pub fn contract_from_third(h: &Hypergraph, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_rows(x.nrows(), h.n())?;
    let m = h.order();
    let n = h.n();
    let inner = x.ncols().pow((m - 2) as u32);
    let mut out = DMatrix::zeros(n, n * inner);
    let perms = permutations(m);
    let mut tail = vec![0usize; m - 2];
    let mut buf = Vec::with_capacity(inner);
    let mut kron = vec![0.0; inner];
    for e in h.edges() {
        for p in &perms {
            for (t, &pos) in tail.iter_mut().zip(&p[2..]) {
                *t = e[pos];
            }
            kron.iter_mut().for_each(|v| *v = 0.0);
            accumulate_kron(&mut kron, x, &tail, 1.0, &mut buf);
            let (row, second) = (e[p[0]], e[p[1]]);
            for (c, v) in kron.iter().enumerate() {
                out[(row, second + n * c)] += v;
            }
        }
    }
    Ok(out)
}

/// `A x_3 v^T x_4 .. x_m v^T`, an `n x n` symmetric matrix. For `m = 2` this
/// is the adjacency matrix itself.
pub fn contract_to_matrix(h: &Hypergraph, v: &[f64]) -> Result<DMatrix<f64>> {
    check_rows(v.len(), h.n())?;
    let m = h.order();
    let tails = factorial(m - 2) as f64;
    let mut out = DMatrix::zeros(h.n(), h.n());
    for e in h.edges() {
        for a in 0..m {
            for b in a + 1..m {
                let weight: f64 = e
                    .iter()
                    .enumerate()
                    .filter(|&(pos, _)| pos != a && pos != b)
                    .map(|(_, &i)| v[i])
                    .product::<f64>()
                    * tails;
                out[(e[a], e[b])] += weight;
                out[(e[b], e[a])] += weight;
            }
        }
    }
    Ok(out)
}

/// `G = M_1(A) M_1(A)^T`. Entry `(i, j)` counts ordered tails shared by `i`
/// and `j`, so the diagonal holds the degrees. With `remove_diagonal` the
/// diagonal is zeroed.
pub fn cooccurrence_gram(h: &Hypergraph, remove_diagonal: bool) -> DMatrix<f64> {
    let m = h.order();
    let tails = factorial(m - 1) as f64;
    // (the m-1 other members, completing node) for every member of every edge
    let mut keyed: Vec<(Vec<usize>, usize)> = Vec::with_capacity(h.num_edges() * m);
    for e in h.edges() {
        for c in 0..m {
            let rest: Vec<usize> = e.iter().enumerate().filter(|&(p, _)| p != c).map(|(_, &i)| i).collect();
            keyed.push((rest, e[c]));
        }
    }
    keyed.sort_unstable();
    let mut g = DMatrix::zeros(h.n(), h.n());
    for group in keyed.chunk_by(|a, b| a.0 == b.0) {
        for (_, a) in group {
            for (_, b) in group {
                g[(*a, *b)] += tails;
            }
        }
    }
    if remove_diagonal {
        g.fill_diagonal(0.0);
    }
    g
}

/// Every entry of an order-`m` tensor of dimension `n`, first index slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(n: usize, m: usize) -> Result<Self> {
        let len = (n as u128).pow(m as u32);
        if len > DENSE_LIMIT as u128 {
            return Err(Error::SizeGuard { n, m });
        }
        Ok(Self {
            n,
            m,
            values: vec![0.0; len as usize],
        })
    }

    /// Fills every entry from its index tuple.
    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(n, m)?;
        let mut idx = vec![0usize; m];
        for lin in 0..t.values.len() {
            t.values[lin] = f(&idx);
            increment(&mut idx, n);
        }
        Ok(t)
    }

    /// Dense adjacency tensor: every ordering of every hyperedge set to 1.
    pub fn from_hypergraph(h: &Hypergraph) -> Result<Self> {
        let mut t = Self::zeros(h.n(), h.order())?;
        let perms = permutations(h.order());
        let mut idx = vec![0usize; h.order()];
        for e in h.edges() {
            for p in &perms {
                for (slot, &pos) in idx.iter_mut().zip(p) {
                    *slot = e[pos];
                }
                let lin = t.linear(&idx);
                t.values[lin] = 1.0;
            }
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.linear(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let lin = self.linear(idx);
        self.values[lin] = value;
    }

    /// Calls `f(index, value)` for every entry.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut idx = vec![0usize; self.m];
        for &v in &self.values {
            f(&idx, v);
            increment(&mut idx, self.n);
        }
    }

    /// Zeroes every entry with a repeated index.
    pub fn remove_diagonal(&mut self) {
        let mut idx = vec![0usize; self.m];
        for v in self.values.iter_mut() {
            if has_repeat(&idx) {
                *v = 0.0;
            }
            increment(&mut idx, self.n);
        }
    }

    pub fn is_supersymmetric(&self, tol: f64) -> bool {
        let perms = permutations(self.m);
        let mut ok = true;
        let mut permuted = vec![0usize; self.m];
        self.for_each(|idx, v| {
            if !ok {
                return;
            }
            for p in &perms {
                for (slot, &pos) in permuted.iter_mut().zip(p) {
                    *slot = idx[pos];
                }
                if (self.get(&permuted) - v).abs() > tol {
                    ok = false;
                    return;
                }
            }
        });
        ok
    }

    /// Mode-1 unfolding, `n x n^{m-1}`.
    pub fn mode1_unfolding(&self) -> DMatrix<f64> {
        let cols = self.n.pow((self.m - 1) as u32);
        let mut out = DMatrix::zeros(self.n, cols);
        self.for_each(|idx, v| {
            if v != 0.0 {
                out[(idx[0], tail_column(&idx[1..], self.n))] = v;
            }
        });
        out
    }

    /// `T x_3 v^T .. x_m v^T`.
    pub fn contract_to_matrix(&self, v: &[f64]) -> Result<DMatrix<f64>> {
        check_rows(v.len(), self.n)?;
        let mut out = DMatrix::zeros(self.n, self.n);
        self.for_each(|idx, val| {
            if val != 0.0 {
                let w: f64 = idx[2..].iter().map(|&i| v[i]).product();
                out[(idx[0], idx[1])] += val * w;
            }
        });
        Ok(out)
    }

    /// `M_1(T) M_1(T)^T`.
    pub fn gram(&self) -> DMatrix<f64> {
        let u = self.mode1_unfolding();
        &u * u.transpose()
    }
}

impl TensorOperator for DenseTensor {
    fn dim(&self) -> usize {
        self.n
    }

    fn order(&self) -> usize {
        self.m
    }

    fn contract_all_but_one(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_rows(x.nrows(), self.n)?;
        let width = x.ncols().pow((self.m - 1) as u32);
        let mut out = vec![0.0; self.n * width];
        let mut buf = Vec::with_capacity(width);
        self.for_each(|idx, v| {
            if v != 0.0 {
                let row = idx[0];
                accumulate_kron(&mut out[row * width..(row + 1) * width], x, &idx[1..], v, &mut buf);
            }
        });
        Ok(DMatrix::from_row_slice(self.n, width, &out))
    }
}

fn increment(idx: &mut [usize], n: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return;
        }
        *slot = 0;
    }
}

fn has_repeat(idx: &[usize]) -> bool {
    idx.iter().enumerate().any(|(a, i)| idx[a + 1..].contains(i))
}

/// Column of a tail `(i_2, .., i_m)` in a mode-1 unfolding with equal mode
/// sizes `n`.
pub(crate) fn tail_column(tail: &[usize], n: usize) -> usize {
    tail.iter().rev().fold(0, |acc, &i| acc * n + i)
}

/// `M_1` of an order-`m` tensor given as a closure over index tuples with all
/// mode sizes equal to `k`.
pub(crate) fn unfold_small(k: usize, m: usize, f: impl Fn(&[usize]) -> f64) -> DMatrix<f64> {
    let cols = k.pow((m - 1) as u32);
    let mut out = DMatrix::zeros(k, cols);
    let mut idx = vec![0usize; m];
    for _ in 0..k.pow(m as u32) {
        out[(idx[0], tail_column(&idx[1..], k))] = f(&idx);
        increment(&mut idx, k);
    }
    out
}

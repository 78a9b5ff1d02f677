//! Dense linear algebra shared by every spectral step: truncated SVD,
//! top eigenpairs of symmetric matrices, subspace distance, and the
//! orthonormal [`FactorMatrix`] type.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tolerance on `U^T U = I` for every factor matrix handed out.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Above this smaller dimension the SVD switches to block power iteration.
pub const DIRECT_SVD_LIMIT: usize = 512;

/// Singular value `s_K` counts as zero when `s_K <= RANK_TOL * s_1`.
pub const RANK_TOL: f64 = 1e-10;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 1000;
const OVERSAMPLE: usize = 8;

/// An `n x K` matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorMatrix(DMatrix<f64>);

impl FactorMatrix {
    /// Wraps `m`, failing unless its columns are orthonormal within
    /// [`ORTHONORMAL_TOL`].
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let err = orthonormality_error(&m);
        if !(err <= ORTHONORMAL_TOL) {
            return Err(Error::InvalidArgument(format!(
                "columns are not orthonormal (max deviation {err:e})"
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(orthonormality_error(&m) <= 1e-8);
        Self(m)
    }

    /// Orthonormal basis of the column space of `m` (thin QR).
    pub fn orthonormalize(m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() > m.nrows() {
            return Err(Error::RankTooLarge {
                requested: m.ncols(),
                available: m.nrows(),
            });
        }
        let q = m.clone().qr().q();
        Ok(Self(complete_orthonormal(&q, m.ncols())))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn row_norms(&self) -> Vec<f64> {
        self.0.row_iter().map(|r| r.norm()).collect()
    }

    /// Row `i` of the result is row `perm^{-1}(i)` of `self`, i.e. node `i`
    /// is relabeled `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut out = DMatrix::zeros(self.nrows(), self.ncols());
        for (i, &p) in perm.iter().enumerate() {
            out.set_row(p, &self.0.row(i));
        }
        Self(out)
    }
}

/// `max |U^T U - I|`.
pub fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let mut worst: f64 = 0.0;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    if gram.iter().any(|x| !x.is_finite()) {
        f64::INFINITY
    } else {
        worst
    }
}

/// Top-`k` left singular vectors and singular values.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    /// Nonincreasing, nonnegative.
    pub s: Vec<f64>,
}

impl Svd {
    /// True when the `k`-th singular value is numerically zero.
    pub fn rank_deficient(&self) -> bool {
        match (self.s.first(), self.s.last()) {
            (Some(&first), Some(&last)) => first <= 0.0 || last <= RANK_TOL * first,
            _ => true,
        }
    }
}

/// Top-`k` singular triplets (left side only) of a `p x q` matrix.
///
/// Columns follow a fixed sign convention: the largest-magnitude entry is
/// positive, ties going to the lowest row index.
pub fn truncated_svd(m: &DMatrix<f64>, k: usize) -> Result<Svd> {
    let (p, q) = m.shape();
    if k > p.min(q) || k == 0 {
        return Err(Error::RankTooLarge {
            requested: k,
            available: p.min(q),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (u, s) = if p.min(q) <= DIRECT_SVD_LIMIT {
        direct_svd(m, k)
    } else {
        block_power_svd(m, k)
    };
    let mut u = complete_orthonormal(&u, k);
    fix_signs(&mut u);
    Ok(Svd { u, s })
}

fn direct_svd(m: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let svd = m.clone().svd_unordered(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let cols: Vec<_> = order[..k].iter().map(|&j| u.column(j).into_owned()).collect();
    let s = order[..k].iter().map(|&j| svd.singular_values[j].max(0.0)).collect();
    (DMatrix::from_columns(&cols), s)
}

fn start_block(p: usize, width: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_b10c);
    let g = DMatrix::from_fn(p, width, |_, _| rng.random::<f64>() - 0.5);
    g.qr().q()
}

fn block_power_svd(m: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let p = m.nrows();
    let width = (k + OVERSAMPLE).min(p.min(m.ncols()));
    let mut basis = start_block(p, width);
    for _ in 0..POWER_MAX_ITERS {
        let next = (m * (m.transpose() * &basis)).qr().q();
        let change = subspace_gap(&basis.columns(0, k).into_owned(), &next.columns(0, k).into_owned());
        basis = next;
        if change < POWER_TOL {
            break;
        }
    }
    let small = basis.transpose() * m;
    let (ub, s) = direct_svd(&small, k);
    (&basis * ub, s)
}

/// Top-`k` eigenpairs of a symmetric matrix ranked by `|eigenvalue|`.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub vectors: DMatrix<f64>,
    pub values: Vec<f64>,
}

impl SymEigen {
    pub fn rank_deficient(&self) -> bool {
        match (self.values.first(), self.values.last()) {
            (Some(&first), Some(&last)) => first.abs() <= 0.0 || last.abs() <= RANK_TOL * first.abs(),
            _ => true,
        }
    }
}

/// Which end of the spectrum [`symmetric_top_eigen`] keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenOrder {
    Magnitude,
    Largest,
}

pub fn symmetric_top_eigen(s: &DMatrix<f64>, k: usize, order: EigenOrder) -> Result<SymEigen> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", n, s.ncols())));
    }
    if k == 0 || k > n {
        return Err(Error::RankTooLarge {
            requested: k,
            available: n,
        });
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (vectors, values) = if n <= DIRECT_SVD_LIMIT {
        let eig = SymmetricEigen::new(s.clone());
        select_eigen(&eig.eigenvectors, eig.eigenvalues.as_slice(), k, order)
    } else {
        subspace_iteration(s, k, order)
    };
    let mut vectors = complete_orthonormal(&vectors, k);
    fix_signs(&mut vectors);
    Ok(SymEigen { vectors, values })
}

fn select_eigen(vecs: &DMatrix<f64>, vals: &[f64], k: usize, order: EigenOrder) -> (DMatrix<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    match order {
        EigenOrder::Magnitude => idx.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs())),
        EigenOrder::Largest => idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a])),
    }
    let cols: Vec<_> = idx[..k].iter().map(|&j| vecs.column(j).into_owned()).collect();
    (DMatrix::from_columns(&cols), idx[..k].iter().map(|&j| vals[j]).collect())
}

fn subspace_iteration(s: &DMatrix<f64>, k: usize, order: EigenOrder) -> (DMatrix<f64>, Vec<f64>) {
    let n = s.nrows();
    // Shifting by the Gershgorin bound turns "largest algebraic" into
    // "largest magnitude" for power iteration.
    let shift = match order {
        EigenOrder::Magnitude => 0.0,
        EigenOrder::Largest => s.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max),
    };
    let width = (k + OVERSAMPLE).min(n);
    let mut basis = start_block(n, width);
    for _ in 0..POWER_MAX_ITERS {
        let mut next = s * &basis;
        next += &basis * shift;
        let next = next.qr().q();
        let change = subspace_gap(&basis.columns(0, k).into_owned(), &next.columns(0, k).into_owned());
        basis = next;
        if change < POWER_TOL {
            break;
        }
    }
    let projected = basis.transpose() * s * &basis;
    let projected = (&projected + projected.transpose()) * 0.5;
    let eig = SymmetricEigen::new(projected);
    let (small, values) = select_eigen(&eig.eigenvectors, eig.eigenvalues.as_slice(), k, order);
    (&basis * small, values)
}

/// Flips each column so its largest-magnitude entry is positive; among
/// entries tied within a relative 1e-9, the lowest row index decides.
pub fn fix_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let max = col.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if max == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .copied()
            .find(|x| x.abs() >= max * (1.0 - 1e-9))
            .unwrap();
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Returns an `n x k` orthonormal matrix whose leading columns span the
/// numerically independent columns of `u`; missing directions are filled
/// from the standard basis by Gram-Schmidt.
pub fn complete_orthonormal(u: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = u.nrows();
    if orthonormality_error(u) <= ORTHONORMAL_TOL && u.ncols() == k {
        return u.clone();
    }
    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(k);
    let candidates = u
        .column_iter()
        .map(|c| c.into_owned())
        .chain((0..n).map(|j| {
            let mut e = nalgebra::DVector::zeros(n);
            e[j] = 1.0;
            e
        }));
    for mut v in candidates {
        if cols.len() == k {
            break;
        }
        let norm0 = v.norm();
        if norm0 == 0.0 || !norm0.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for c in &cols {
                let dot = c.dot(&v);
                v.axpy(-dot, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-6 * norm0 {
            cols.push(v / norm);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let small = if m.nrows() >= m.ncols() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let eig = SymmetricEigen::new(small);
    eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt()
}

/// `||(I - UU^T) V||` for orthonormal `U`, `V`.
fn subspace_gap(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let resid = v - u * (u.transpose() * v);
    spectral_norm(&resid)
}

/// Spectral norm of `UU^T - VV^T` for orthonormal `U` and `V` of equal shape.
///
/// For equal ranks this is the sine of the largest principal angle, which
/// is evaluated from residuals rather than cosines to keep precision near 0.
pub fn subspace_distance(u: &FactorMatrix, v: &FactorMatrix) -> Result<f64> {
    subspace_distance_raw(u.as_matrix(), v.as_matrix())
}

pub(crate) fn subspace_distance_raw(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            u.shape(),
            v.shape()
        )));
    }
    let d = subspace_gap(u, v).max(subspace_gap(v, u));
    Ok(d.clamp(0.0, 1.0))
}

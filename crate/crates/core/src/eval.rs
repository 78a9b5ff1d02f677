//! Clustering error up to label permutation, and summaries over runs.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest `K` for which every permutation is enumerated.
pub const EXHAUSTIVE_LIMIT: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub misclassified: usize,
    pub rate: f64,
    /// `best_permutation[p]` is the true label matched to predicted label `p`.
    pub best_permutation: Vec<usize>,
    /// `confusion[p][t]` counts nodes predicted `p` with truth `t`.
    pub confusion: Vec<Vec<usize>>,
}

/// Square confusion matrix over `max(label) + 1` labels of either side.
pub fn confusion_matrix(pred: &[usize], truth: &[usize]) -> Result<Vec<Vec<usize>>> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predicted labels vs {} true labels",
            pred.len(),
            truth.len()
        )));
    }
    let k = pred.iter().chain(truth).max().map_or(0, |&m| m + 1);
    let mut c = vec![vec![0; k]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        c[p][t] += 1;
    }
    Ok(c)
}

/// Misclassification count minimized over label permutations.
pub fn clustering_error(pred: &[usize], truth: &[usize]) -> Result<ErrorReport> {
    let confusion = confusion_matrix(pred, truth)?;
    let best_permutation = if confusion.len() <= EXHAUSTIVE_LIMIT {
        best_assignment_exhaustive(&confusion)
    } else {
        best_assignment_hungarian(&confusion)
    };
    let n = pred.len();
    let matched: usize = best_permutation.iter().enumerate().map(|(p, &t)| confusion[p][t]).sum();
    let misclassified = n - matched;
    Ok(ErrorReport {
        misclassified,
        rate: if n == 0 { 0.0 } else { misclassified as f64 / n as f64 },
        best_permutation,
        confusion,
    })
}

fn matched(confusion: &[Vec<usize>], perm: &[usize]) -> usize {
    perm.iter().enumerate().map(|(p, &t)| confusion[p][t]).sum()
}

/// Tries all `K!` assignments (Heap's algorithm); the first maximizer in
/// enumeration order wins.
pub fn best_assignment_exhaustive(confusion: &[Vec<usize>]) -> Vec<usize> {
    let k = confusion.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_score = matched(confusion, &perm);
    let mut c = vec![0; k];
    let mut i = 1;
    while i < k {
        if c[i] < i {
            let j = if i % 2 == 0 { 0 } else { c[i] };
            perm.swap(j, i);
            let score = matched(confusion, &perm);
            if score > best_score {
                best_score = score;
                best.clone_from(&perm);
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Maximum-weight perfect matching by the Hungarian method on negated
/// counts, `O(K^3)`.
pub fn best_assignment_hungarian(confusion: &[Vec<usize>]) -> Vec<usize> {
    let k = confusion.len();
    if k == 0 {
        return Vec::new();
    }
    let cost = |i: usize, j: usize| -(confusion[i - 1][j - 1] as i64);
    // potentials and matching are 1-based; column 0 is a sentinel
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut row_of = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; k];
    for j in 1..=k {
        perm[row_of[j] - 1] = j - 1;
    }
    perm
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single run.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Two-pass mean and dispersion of the given rates.
pub fn summarize(rates: &[f64]) -> Result<RunSummary> {
    if rates.is_empty() {
        return Err(Error::InvalidArgument("cannot summarize zero runs".into()));
    }
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let ss: f64 = rates.iter().map(|r| (r - mean) * (r - mean)).sum();
    let std = if rates.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
    Ok(RunSummary {
        count: rates.len(),
        mean,
        std,
        min: rates.iter().copied().fold(f64::INFINITY, f64::min),
        max: rates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

pub fn aggregate_runs(reports: &[ErrorReport]) -> Result<RunSummary> {
    summarize(&reports.iter().map(|r| r.rate).collect::<Vec<_>>())
}

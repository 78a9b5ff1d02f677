//! Sparse contractions against brute-force sums over the full index space.

use hyperclust::tensor::{contract_from_third, contract_to_matrix, cooccurrence_gram, DenseTensor, TensorOperator};
use hyperclust::Hypergraph;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Every index tuple of length `m` over `0..n`, first position slowest.
fn tuples(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

/// The adjacency tensor as a predicate: 1 exactly when the sorted index
/// tuple is a hyperedge.
fn entry(h: &Hypergraph, idx: &[usize]) -> f64 {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    let distinct = sorted.windows(2).all(|w| w[0] != w[1]);
    if distinct && h.contains(&sorted) {
        1.0
    } else {
        0.0
    }
}

fn brute_contract_all_but_one(h: &Hypergraph, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m, k) = (h.n(), h.order(), x.ncols());
    let width = k.pow(m as u32 - 1);
    let mut out = DMatrix::zeros(n, width);
    for idx in tuples(n, m) {
        let a = entry(h, &idx);
        if a == 0.0 {
            continue;
        }
        for cols in tuples(k, m - 1) {
            // mode 2 varies fastest
            let c = cols.iter().rev().fold(0, |acc, &j| acc * k + j);
            let w: f64 = cols.iter().zip(&idx[1..]).map(|(&j, &i)| x[(i, j)]).product();
            out[(idx[0], c)] += a * w;
        }
    }
    out
}

fn arb_hypergraph() -> impl Strategy<Value = Hypergraph> {
    (2usize..=4)
        .prop_flat_map(|m| (Just(m), m + 1..=7))
        .prop_flat_map(|(m, n)| {
            let edge = proptest::collection::btree_set(0..n, m).prop_map(|s| s.into_iter().collect::<Vec<_>>());
            (Just(m), Just(n), proptest::collection::vec(edge, 1..10))
        })
        .prop_map(|(m, n, mut edges)| {
            edges.sort();
            edges.dedup();
            Hypergraph::new(n, m, edges).unwrap()
        })
}

fn arb_matrix(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    // cheap deterministic filler; values in (-1, 1)
    DMatrix::from_fn(n, k, |i, j| (((i * 7 + j * 13) as u64 ^ seed) % 17) as f64 / 8.5 - 1.0)
}

fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>) {
    assert_eq!(a.shape(), b.shape());
    let gap = (a - b).abs().max();
    assert!(gap < 1e-10, "max entry gap {gap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn all_but_one_matches_brute_force(h in arb_hypergraph(), k in 1usize..=3, seed in any::<u64>()) {
        let x = arb_matrix(h.n(), k, seed);
        assert_close(&h.contract_all_but_one(&x).unwrap(), &brute_contract_all_but_one(&h, &x));
    }

    #[test]
    fn dense_operator_agrees_with_sparse(h in arb_hypergraph(), k in 1usize..=3, seed in any::<u64>()) {
        let x = arb_matrix(h.n(), k, seed);
        let dense = DenseTensor::from_hypergraph(&h).unwrap();
        assert_close(&dense.contract_all_but_one(&x).unwrap(), &h.contract_all_but_one(&x).unwrap());
    }

    #[test]
    fn gram_is_unfolding_times_transpose(h in arb_hypergraph()) {
        let n = h.n();
        let mut unfolding = DMatrix::zeros(n, n.pow(h.order() as u32 - 1));
        for idx in tuples(n, h.order()) {
            let c = idx[1..].iter().fold(0, |acc, &i| acc * n + i);
            unfolding[(idx[0], c)] = entry(&h, &idx);
        }
        let gram = &unfolding * unfolding.transpose();
        assert_close(&cooccurrence_gram(&h, false), &gram);
        let degrees = h.degrees();
        for i in 0..n {
            prop_assert!((gram[(i, i)] - degrees[i]).abs() < 1e-12);
        }
        let off = cooccurrence_gram(&h, true);
        prop_assert!((0..n).all(|i| off[(i, i)] == 0.0));
    }

    #[test]
    fn vector_contraction_matches_brute_force(h in arb_hypergraph(), seed in any::<u64>()) {
        let (n, m) = (h.n(), h.order());
        let v: Vec<f64> = arb_matrix(n, 1, seed).iter().copied().collect();
        let mut want = DMatrix::zeros(n, n);
        for idx in tuples(n, m) {
            let w: f64 = idx[2..].iter().map(|&i| v[i]).product();
            want[(idx[0], idx[1])] += entry(&h, &idx) * w;
        }
        assert_close(&contract_to_matrix(&h, &v).unwrap(), &want);
    }

    #[test]
    fn contraction_from_third_matches_brute_force(h in arb_hypergraph(), k in 1usize..=2, seed in any::<u64>()) {
        let (n, m) = (h.n(), h.order());
        let x = arb_matrix(n, k, seed);
        let mut want = DMatrix::zeros(n, n * k.pow(m as u32 - 2));
        for idx in tuples(n, m) {
            let a = entry(&h, &idx);
            if a == 0.0 {
                continue;
            }
            for cols in tuples(k, m - 2) {
                let c = cols.iter().rev().fold(0, |acc, &j| acc * k + j);
                let w: f64 = cols.iter().zip(&idx[2..]).map(|(&j, &i)| x[(i, j)]).product();
                want[(idx[0], idx[1] + n * c)] += w;
            }
        }
        assert_close(&contract_from_third(&h, &x).unwrap(), &want);
    }

    #[test]
    fn relabeling_nodes_permutes_rows(h in arb_hypergraph(), k in 1usize..=3, seed in any::<u64>(), shift in 1usize..6) {
        let n = h.n();
        let perm: Vec<usize> = (0..n).map(|i| (i * (2 * shift + 1) + shift) % n).collect();
        prop_assume!({ let mut s = perm.clone(); s.sort_unstable(); s.dedup(); s.len() == n });
        let x = arb_matrix(n, k, seed);
        let mut px = DMatrix::zeros(n, k);
        for i in 0..n {
            px.set_row(perm[i], &x.row(i));
        }
        let moved = h.permute_nodes(&perm).unwrap().contract_all_but_one(&px).unwrap();
        let base = h.contract_all_but_one(&x).unwrap();
        for i in 0..n {
            let gap = (moved.row(perm[i]) - base.row(i)).abs().max();
            prop_assert!(gap < 1e-10);
        }
    }
}

#[test]
fn degrees_count_ordered_tails() {
    let h = Hypergraph::new(5, 3, [[0, 1, 2], [0, 3, 4], [1, 2, 3]]).unwrap();
    assert_eq!(h.degrees(), vec![4.0, 4.0, 4.0, 4.0, 2.0]);
    // nodes 0 and 3 share the tails (1, 2) and (2, 1); nothing else overlaps
    let g = cooccurrence_gram(&h, false);
    assert_eq!(g[(0, 3)], 2.0);
    assert_eq!(g[(1, 2)], 0.0);
    assert_eq!(g[(0, 4)], 0.0);
    assert_eq!(g[(0, 0)], 4.0);
}

#[test]
fn wrong_row_count_is_rejected() {
    let h = Hypergraph::new(4, 2, [[0, 1], [2, 3]]).unwrap();
    assert!(h.contract_all_but_one(&DMatrix::zeros(3, 2)).is_err());
    assert!(contract_to_matrix(&h, &[1.0; 5]).is_err());
}

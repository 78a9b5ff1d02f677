use hyperclust::decomp::{
    hosvd_init, k_from_spectrum, randomized_projection_init, reg_hooi, reg_hooi_dense, regularize_factor, HooiConfig,
    KMode,
};
use hyperclust::linalg::{subspace_distance, FactorMatrix};
use hyperclust::model::{sample_hdcbm, signal_tensor};
use hyperclust::{CoreTensor, HdcbmParams, Hypergraph};
use nalgebra::{DMatrix, SymmetricEigen};

/// Top-`k` eigenvectors of a symmetric matrix by |eigenvalue|.
fn top_eigvecs(s: &DMatrix<f64>, k: usize) -> FactorMatrix {
    let eig = SymmetricEigen::new(s.clone());
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let cols: Vec<_> = order[..k].iter().map(|&j| eig.eigenvectors.column(j).into_owned()).collect();
    FactorMatrix::new(DMatrix::from_columns(&cols)).unwrap()
}

fn planted(n: usize, m: usize, k: usize, b: f64, theta: f64, seed: u64) -> (HdcbmParams, Hypergraph) {
    let labels = (0..n).map(|i| i % k).collect();
    let core = CoreTensor::symmetric_sbm(k, m, b).unwrap();
    let p = HdcbmParams::new(labels, vec![theta; n], core).unwrap();
    let h = sample_hdcbm(&p, seed).unwrap();
    (p, h)
}

#[test]
fn hosvd_matches_dense_gram_eigenvectors() {
    let (_, h) = planted(30, 3, 2, 0.1, 0.8, 1);
    let n = h.n();
    let mut gram = DMatrix::zeros(n, n);
    // G(i, j) = (m-1)! * #edges e with e \ {i} = e' \ {j}
    let edges: Vec<Vec<usize>> = h.edges().map(<[usize]>::to_vec).collect();
    for e in &edges {
        for f in &edges {
            for &i in e {
                for &j in f {
                    let rest_e: Vec<_> = e.iter().filter(|&&v| v != i).collect();
                    let rest_f: Vec<_> = f.iter().filter(|&&v| v != j).collect();
                    if rest_e == rest_f {
                        gram[(i, j)] += 2.0;
                    }
                }
            }
        }
    }
    let want = top_eigvecs(&gram, 2);
    let got = hosvd_init(&h, 2).unwrap();
    assert!(subspace_distance(&got.factor, &want).unwrap() < 1e-8);
}

#[test]
fn unperturbed_projection_is_the_weighted_graph() {
    let (_, h) = planted(30, 3, 2, 0.1, 0.8, 2);
    let mut w = DMatrix::zeros(h.n(), h.n());
    for e in h.edges() {
        for &i in e {
            for &j in e {
                if i != j {
                    w[(i, j)] += 1.0;
                }
            }
        }
    }
    let got = randomized_projection_init(&h, 2, 0.0, 99).unwrap();
    assert!(subspace_distance(&got.factor, &top_eigvecs(&w, 2)).unwrap() < 1e-8);
    assert!(randomized_projection_init(&h, 2, 1.0, 0).is_err());
}

#[test]
fn exact_low_rank_tensor_is_recovered_from_a_rough_start() {
    let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
    let theta: Vec<f64> = (0..12).map(|i| 0.4 + 0.05 * i as f64).collect();
    let core = CoreTensor::symmetric_sbm(3, 3, 0.2).unwrap();
    let p = HdcbmParams::new(labels, theta, core).unwrap();
    let q = signal_tensor(&p, true).unwrap();
    let svd = q.mode1_unfolding().svd(true, false);
    let mut order: Vec<usize> = (0..12).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = svd.u.unwrap();
    let truth = FactorMatrix::new(DMatrix::from_columns(&[
        u.column(order[0]).into_owned(),
        u.column(order[1]).into_owned(),
        u.column(order[2]).into_owned(),
    ]))
    .unwrap();
    let rough = truth.as_matrix() + DMatrix::from_fn(12, 3, |i, j| 0.2 * ((i * 5 + j * 11) as f64).sin());
    let init = FactorMatrix::orthonormalize(&rough).unwrap();
    assert!(subspace_distance(&init, &truth).unwrap() > 0.1);
    let res = reg_hooi_dense(&q, &init, &HooiConfig::new(3, 1.0), None).unwrap();
    assert!(subspace_distance(&res.factor, &truth).unwrap() < 1e-8);
    assert!(!res.rank_deficient);
}

#[test]
fn relabeling_nodes_relabels_the_factor() {
    let (_, h) = planted(40, 3, 2, 0.15, 0.7, 3);
    let perm: Vec<usize> = (0..40).map(|i| (i * 7 + 3) % 40).collect();
    let moved = h.permute_nodes(&perm).unwrap();
    let init = hosvd_init(&h, 2).unwrap().factor;
    let mut cfg = HooiConfig::new(2, 0.6);
    cfg.t_max = 10;
    let base = reg_hooi(&h, &init, &cfg, None).unwrap();
    let shifted = reg_hooi(&moved, &init.permute_rows(&perm), &cfg, None).unwrap();
    let back = base.factor.permute_rows(&perm);
    assert!(subspace_distance(&back, &shifted.factor).unwrap() < 1e-8);
}

#[test]
fn regularization_keeps_small_rows_and_shrinks_large_ones() {
    let x = DMatrix::from_row_slice(4, 1, &[0.9, 0.3, 0.3, 0.1]);
    let r = regularize_factor(&x, 0.3).unwrap();
    assert_eq!(r.truncated_rows, 1);
    // capped column is (0.3, 0.3, 0.3, 0.1), then normalized
    let norm = (0.28f64).sqrt();
    for (got, want) in r.factor.as_matrix().iter().zip([0.3, 0.3, 0.3, 0.1]) {
        assert!((got.abs() - want / norm).abs() < 1e-12);
    }
}

#[test]
fn spectrum_rules_on_a_clear_gap() {
    // ln ln 100 is about 1.53
    let sigmas = [10.0, 9.0, 8.0, 1.0, 0.9];
    assert_eq!(k_from_spectrum(&sigmas, 100, KMode::Gap).unwrap(), 3);
    assert_eq!(k_from_spectrum(&sigmas, 100, KMode::AsWritten).unwrap(), 5);
    assert_eq!(k_from_spectrum(&[1.0, 0.9, 0.8], 100, KMode::Gap).unwrap(), 3);
    assert!(k_from_spectrum(&sigmas, 10, KMode::Gap).is_err());
}

#[test]
fn gap_rule_finds_two_communities_at_dense_signal() {
    use hyperclust::decomp::estimate_k;
    let hits = (0..20)
        .filter(|&seed| {
            let (_, h) = planted(60, 3, 2, 0.1, 0.9, 100 + seed);
            estimate_k(&h, 8, KMode::Gap).unwrap().k_hat == 2
        })
        .count();
    assert!(hits >= 16, "{hits}/20");
}

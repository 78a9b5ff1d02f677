use hyperclust::eval::clustering_error;
use hyperclust::model::sample_hdcbm;
use hyperclust::pipeline::{
    default_tuning, detect, dummy_node_lift, lifted_tensor_score, oracle_tensor_score, score_ratios, stacked_score,
    tensor_score, Method,
};
use hyperclust::{CoreTensor, DetectOptions, HdcbmParams, Hypergraph, MixedHypergraph, Partition};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn planted(n: usize, m: usize, k: usize, b: f64, theta: impl Fn(usize) -> f64) -> HdcbmParams {
    let labels = (0..n).map(|i| (i * k) / n).collect();
    let core = CoreTensor::symmetric_sbm(k, m, b).unwrap();
    HdcbmParams::new(labels, (0..n).map(theta).collect(), core).unwrap()
}

fn errors(found: &Partition, truth: &[usize]) -> usize {
    clustering_error(found.labels(), truth).unwrap().misclassified
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ratios_ignore_row_scaling_and_column_signs(
        rows in proptest::collection::vec((0.2f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 3..20),
        scales in proptest::collection::vec(0.1f64..3.0, 20),
        flip in any::<[bool; 3]>(),
    ) {
        let n = rows.len();
        let xi = DMatrix::from_fn(n, 3, |i, j| [rows[i].0, rows[i].1, rows[i].2][j]);
        let mut other = DMatrix::from_fn(n, 3, |i, j| xi[(i, j)] * scales[i]);
        for (j, &f) in flip.iter().enumerate() {
            if f {
                other.column_mut(j).neg_mut();
            }
        }
        let a = score_ratios(&xi, 1e6).unwrap();
        let b = score_ratios(&other, 1e6).unwrap();
        // rescaling rows may move the entry that fixes a column's sign, so
        // columns agree up to sign
        for j in 0..2 {
            let same = (a.rows.column(j) - b.rows.column(j)).abs().max();
            let opposite = (a.rows.column(j) + b.rows.column(j)).abs().max();
            prop_assert!(same.min(opposite) < 1e-9);
        }
        let flipped = score_ratios(&DMatrix::from_fn(n, 3, |i, j| if flip[j] { -xi[(i, j)] } else { xi[(i, j)] }), 1e6).unwrap();
        prop_assert!((a.rows - flipped.rows).abs().max() < 1e-9);
    }

    #[test]
    fn ratios_are_capped(rows in proptest::collection::vec((1e-3f64..1.0, -1.0f64..1.0), 2..20), cap in 0.5f64..5.0) {
        let xi = DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { rows[i].0 } else { rows[i].1 });
        let e = score_ratios(&xi, cap).unwrap();
        let over = rows.iter().filter(|r| (r.1 / r.0).abs() > cap).count();
        prop_assert_eq!(e.truncated_count, over);
        prop_assert!(e.rows.iter().all(|v| v.abs() <= cap + 1e-12));
    }
}

#[test]
fn oracle_recovers_labels_whatever_the_degrees() {
    let truth: Vec<usize> = (0..30).map(|i| (i * 3) / 30).collect();
    for spread in [0.0, 0.5, 0.9] {
        let p = planted(30, 3, 3, 0.3, |i| 1.0 - spread * ((i * 17) % 30) as f64 / 30.0);
        let found = oracle_tensor_score(&p, 5, 1).unwrap();
        assert_eq!(errors(&found.partition, &truth), 0, "spread {spread}");
    }
}

#[test]
fn default_tuning_follows_the_degree_formula() {
    let h = Hypergraph::new(5, 3, [[0, 1, 2], [0, 3, 4], [0, 1, 3]]).unwrap();
    // degrees are 2 * (3, 2, 1, 2, 1)
    let t = default_tuning(&h, 2).unwrap();
    let want = 2.0 * 2f64.sqrt() * 3.0 / 19f64.sqrt();
    assert!((t.delta - want.min(1.0)).abs() < 1e-12);
    assert!((t.cap_t - 5f64.ln().sqrt()).abs() < 1e-12);
    assert!(default_tuning(&Hypergraph::empty(5, 3).unwrap(), 2).is_err());
}

#[test]
fn every_method_separates_a_strong_planted_model() {
    let p = planted(90, 3, 3, 0.05, |i| 0.6 + 0.4 * ((i * 7) % 10) as f64 / 10.0);
    let h = sample_hdcbm(&p, 8).unwrap();
    let opts = DetectOptions::new(3).with_seed(4);
    for method in Method::ALL {
        let found = detect(&h, method, &opts).unwrap();
        assert_eq!(found.partition.n(), 90);
        assert_eq!(found.partition.k(), 3);
        if matches!(method, Method::TensorScore | Method::TensorScoreNhcut) {
            assert_eq!(errors(&found.partition, p.labels()), 0, "{method}");
        }
    }
}

#[test]
fn relabeled_input_gives_the_relabeled_partition() {
    let p = planted(60, 3, 2, 0.2, |_| 0.7);
    let h = sample_hdcbm(&p, 5).unwrap();
    let perm: Vec<usize> = (0..60).map(|i| (i * 11 + 4) % 60).collect();
    let opts = DetectOptions::new(2).with_seed(9);
    let base = tensor_score(&h, &opts).unwrap().partition;
    let moved = tensor_score(&h.permute_nodes(&perm).unwrap(), &opts).unwrap().partition;
    let pulled: Vec<usize> = (0..60).map(|i| moved.labels()[perm[i]]).collect();
    assert_eq!(clustering_error(&pulled, base.labels()).unwrap().misclassified, 0);
}

#[test]
fn reruns_are_deterministic() {
    let p = planted(60, 3, 2, 0.3, |i| 0.5 + 0.005 * i as f64);
    let h = sample_hdcbm(&p, 6).unwrap();
    let opts = DetectOptions::new(2).with_seed(3);
    assert_eq!(tensor_score(&h, &opts).unwrap().partition, tensor_score(&h, &opts).unwrap().partition);
}

#[test]
fn bad_k_is_rejected() {
    let h = Hypergraph::new(4, 3, [[0, 1, 2], [1, 2, 3]]).unwrap();
    assert!(tensor_score(&h, &DetectOptions::new(5)).is_err());
    assert!(tensor_score(&h, &DetectOptions::new(1)).is_err());
}

#[test]
fn lift_pads_with_order_specific_dummies() {
    let h = MixedHypergraph::new(5, [vec![0, 1], vec![1, 2, 3], vec![0, 1, 2, 4]]).unwrap();
    let lifted = dummy_node_lift(&h, 4).unwrap();
    assert_eq!(lifted.n(), 7);
    assert_eq!(lifted.order(), 4);
    assert!(lifted.contains(&[0, 1, 5, 6]));
    assert!(lifted.contains(&[1, 2, 3, 6]));
    assert!(lifted.contains(&[0, 1, 2, 4]));
    assert!(dummy_node_lift(&h, 3).is_err());
}

fn mixed_planted(seed: u64) -> (MixedHypergraph, Vec<usize>) {
    let pair = planted(60, 2, 2, 0.05, |_| 0.5);
    let triple = planted(60, 3, 2, 0.05, |_| 0.5);
    let mut edges: Vec<Vec<usize>> = Vec::new();
    edges.extend(sample_hdcbm(&pair, seed).unwrap().edges().map(<[usize]>::to_vec));
    edges.extend(sample_hdcbm(&triple, seed + 1).unwrap().edges().map(<[usize]>::to_vec));
    (MixedHypergraph::new(60, edges).unwrap(), pair.labels().to_vec())
}

#[test]
fn mixed_orders_are_clustered_by_lift_and_by_stacking() {
    let (h, truth) = mixed_planted(12);
    let opts = DetectOptions::new(2).with_seed(1);
    let lifted = lifted_tensor_score(&h, 3, &opts).unwrap();
    assert_eq!(lifted.partition.n(), 60);
    assert_eq!(errors(&lifted.partition, &truth), 0);
    let stacked = stacked_score(&h.split_by_order(), &opts).unwrap();
    assert_eq!(errors(&stacked.partition, &truth), 0);
    assert!(stacked.diagnostics.dropped_orders.is_empty());
}

#[test]
fn stacking_drops_an_empty_order() {
    let (h, truth) = mixed_planted(20);
    let mut parts = h.split_by_order();
    parts.push(Hypergraph::empty(60, 4).unwrap());
    let found = stacked_score(&parts, &DetectOptions::new(2).with_seed(1)).unwrap();
    assert_eq!(found.diagnostics.dropped_orders, vec![4]);
    assert_eq!(errors(&found.partition, &truth), 0);
}

#[test]
fn partition_text_round_trip() {
    let p = Partition::new(vec![2, 0, 1, 1], 3).unwrap();
    let mut buf = Vec::new();
    p.write(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf.clone()).unwrap(), "2\n0\n1\n1\n");
    assert_eq!(Partition::read(buf.as_slice()).unwrap(), p);
    assert!(Partition::read("1\nx\n".as_bytes()).is_err());
    assert!(Partition::new(vec![0, 3], 3).is_err());
}

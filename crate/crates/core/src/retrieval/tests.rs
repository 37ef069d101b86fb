use ndarray::{array, Array2, Array3};

use super::*;
use crate::kernels::test_util::{random_seq, rng};
use crate::kernels::{pairwise_matrix, Direction, Stage};
use crate::objective::{zscore, ZAxis, ZSCORE_EPS};

fn eucl() -> DistanceKind {
    DistanceKind::eucl(Direction::V2A, Stage::Post)
}

fn split(a: Array3<f64>) -> Vec<Array2<f64>> {
    a.outer_iter().map(|s| s.to_owned()).collect()
}

fn random_set(seed: u64, n: usize, t: usize, c: usize) -> Vec<Array2<f64>> {
    let mut r = rng(seed);
    (0..n).map(|_| random_seq(&mut r, t, c)).collect()
}

#[test]
fn agg_ranks_identical_candidates_first() {
    let seqs = random_set(1, 6, 4, 3);
    let ranks = agg_retrieve(&seqs, &seqs, 6, None).unwrap();
    for (i, r) in ranks.iter().enumerate() {
        assert_eq!(r[0], i);
    }
}

#[test]
fn agg_two_candidate_example() {
    let q = vec![array![[1.0, 0.0]]];
    let c = vec![array![[1.0, 0.0]], array![[0.0, 1.0]]];
    assert_eq!(agg_retrieve(&q, &c, 2, None).unwrap(), vec![vec![0, 1]]);
}

#[test]
fn agg_matches_brute_force_ordering() {
    let q = split(array![
        [[0.25, 0.79, 0.55], [-0.55, -0.4, 0.75]],
        [[-0.99, 0.64, 0.59], [-0.06, -0.39, -0.44]],
        [[-0.49, -0.11, 0.01], [0.11, 0.99, 0.59]],
        [[0.24, 0.98, -0.57], [-0.68, 0.23, -0.91]]
    ]);
    let c = split(array![
        [[-0.93, 0.03, -0.07], [0.83, 0.26, 0.03], [-0.01, -0.5, -0.98]],
        [[-0.62, 0.38, -0.6], [-0.26, -0.99, 0.66], [-0.69, -0.46, 0.76]],
        [[0.02, 0.69, 0.28], [0.48, -0.82, 0.08], [0.02, 0.74, -0.28]],
        [[0.2, -0.88, -0.22], [-0.35, -0.7, 0.63], [-0.24, 0.96, 0.18]],
        [[0.21, 0.28, 0.35], [-0.7, -0.12, -0.52], [-0.2, -0.81, 0.94]],
        [[-0.57, 0.34, -0.4], [0.75, 0.32, -0.74], [0.69, 0.89, 0.81]],
        [[0.14, -0.71, -0.62], [0.86, 0.1, -0.64], [0.77, 0.28, 0.14]],
        [[-0.25, -0.18, -0.52], [-0.92, 0.75, -0.06], [0.1, -0.36, 0.5]]
    ]);
    let expected = vec![
        vec![4, 3, 1, 7, 2, 5, 6, 0],
        vec![7, 1, 4, 3, 0, 5, 2, 6],
        vec![7, 2, 5, 4, 1, 3, 0, 6],
        vec![0, 5, 7, 2, 6, 1, 4, 3],
    ];
    assert_eq!(agg_retrieve(&q, &c, 8, None).unwrap(), expected);
}

#[test]
fn agg_rejects_zero_norm() {
    let q = vec![array![[1.0, -1.0], [-1.0, 1.0]]];
    let c = vec![array![[1.0, 0.0]]];
    assert!(matches!(agg_retrieve(&q, &c, 1, None), Err(Error::ZeroNorm(0))));
}

#[test]
fn ties_break_by_candidate_index() {
    let q = vec![array![[1.0, 0.0]]];
    let c = vec![array![[0.0, 1.0]], array![[2.0, 0.0]], array![[1.0, 0.0]]];
    assert_eq!(agg_retrieve(&q, &c, 3, None).unwrap(), vec![vec![1, 2, 0]]);
    let ranks = seq_retrieve(&q, &[c[2].clone(), c[2].clone()], &eucl(), RetrievalDirection::V2A, 2, None)
        .unwrap();
    assert_eq!(ranks, vec![vec![0, 1]]);
}

#[test]
fn seq_ranks_an_exact_duplicate_first() {
    let mut cands = random_set(2, 5, 4, 3);
    let q = vec![random_seq(&mut rng(3), 4, 3)];
    cands[3] = q[0].clone();
    let ranks = seq_retrieve(&q, &cands, &eucl(), RetrievalDirection::V2A, 5, None).unwrap();
    assert_eq!(ranks[0][0], 3);
}

#[test]
fn seq_equals_exhaustive_kernel_calls() {
    let q = random_set(4, 1, 5, 3);
    let cands = random_set(5, 3, 3, 3);
    for kind in [eucl(), DistanceKind::soft_dtw_default(), DistanceKind::wasserstein_default()] {
        for direction in RetrievalDirection::BOTH {
            let mut d: Vec<(f64, usize)> = cands
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let v = match direction {
                        RetrievalDirection::V2A => distance(q[0].view(), c.view(), &kind),
                        RetrievalDirection::A2V => distance(c.view(), q[0].view(), &kind),
                    };
                    (v.unwrap(), j)
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let expected: Vec<usize> = d.into_iter().map(|(_, j)| j).collect();
            let ranks = seq_retrieve(&q, &cands, &kind, direction, 3, None).unwrap();
            assert_eq!(ranks[0], expected);
        }
    }
}

#[test]
fn seq_ranking_survives_per_query_zscore() {
    let q = random_set(6, 5, 4, 3);
    let c = random_set(7, 9, 6, 3);
    let kind = DistanceKind::soft_dtw_default();
    let raw = pairwise_matrix(&q, &c, &kind, None).unwrap().values;
    let z = zscore(raw.view(), ZAxis::Rows, ZSCORE_EPS).unwrap().output;
    let ranks = seq_retrieve(&q, &c, &kind, RetrievalDirection::V2A, 9, None).unwrap();
    for (i, r) in ranks.iter().enumerate() {
        let mut order: Vec<usize> = (0..9).collect();
        order.sort_by(|&a, &b| z[[i, a]].total_cmp(&z[[i, b]]).then(a.cmp(&b)));
        assert_eq!(r, &order);
    }
}

#[test]
fn hybrid_boundaries() {
    let q = random_set(8, 12, 5, 3);
    let c = random_set(9, 20, 4, 3);
    for direction in RetrievalDirection::BOTH {
        let kind = eucl();
        let seq = seq_retrieve(&q, &c, &kind, direction, 20, None).unwrap();
        let agg = agg_retrieve(&q, &c, 20, None).unwrap();
        let full = hybrid_retrieve(&q, &c, 20, &kind, direction, 20, None).unwrap();
        assert_eq!(full.ranks, seq);
        let one = hybrid_retrieve(&q, &c, 1, &kind, direction, 20, None).unwrap();
        assert_eq!(one.ranks, agg);
        let mid = hybrid_retrieve(&q, &c, 5, &kind, direction, 10, None).unwrap();
        for (m, a) in mid.ranks.iter().zip(&agg) {
            assert_eq!(m.len(), 10);
            assert_eq!(&m[5..], &a[5..10]);
            let mut pool = m[..5].to_vec();
            pool.sort_unstable();
            let mut expected = a[..5].to_vec();
            expected.sort_unstable();
            assert_eq!(pool, expected);
        }
    }
}

#[test]
fn hybrid_rejects_bad_k() {
    let q = random_set(10, 2, 3, 2);
    let c = random_set(11, 4, 3, 2);
    for k in [0, 5] {
        assert!(matches!(
            hybrid_retrieve(&q, &c, k, &eucl(), RetrievalDirection::V2A, 1, None),
            Err(Error::InvalidArgument(_))
        ));
    }
}

#[test]
fn recall_examples() {
    let ranks = vec![vec![0, 1], vec![1, 0], vec![2, 0], vec![0, 3]];
    assert_eq!(recall_at(&ranks, &[0, 1, 2, 3], 1, 4).unwrap(), 0.75);
    assert_eq!(recall_at(&ranks, &[0, 1, 2, 3], 2, 4).unwrap(), 1.0);
    assert_eq!(recall_at(&ranks, &[1, 0, 0, 3], 1, 4).unwrap(), 0.0);
    assert_eq!(recall_at(&ranks[..2], &[0, 1], 1, 4).unwrap(), 1.0);
    assert!(matches!(
        recall_at(&ranks, &[0, 1, 2, 4], 1, 4),
        Err(Error::MissingPositive { positive: 4, candidates: 4 })
    ));
}

#[test]
fn recall_is_monotone_in_r() {
    let q = random_set(12, 10, 4, 3);
    let c = random_set(13, 10, 4, 3);
    let ranks = agg_retrieve(&q, &c, 10, None).unwrap();
    let positives: Vec<usize> = (0..10).collect();
    let recalls: Vec<f64> = (1..=10).map(|r| recall_at(&ranks, &positives, r, 10).unwrap()).collect();
    assert!(recalls.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(recalls[9], 1.0);
}

#[test]
fn role_swap_transposes_a_symmetric_kernel() {
    let v = random_set(14, 4, 5, 3);
    let a = random_set(15, 4, 5, 3);
    let kind = DistanceKind::soft_dtw_default();
    let m = pairwise_matrix(&v, &a, &kind, None).unwrap().values;
    let swapped = pairwise_matrix(&a, &v, &kind, None).unwrap().values;
    for i in 0..4 {
        for j in 0..4 {
            assert!((m[[i, j]] - swapped[[j, i]]).abs() < 1e-12);
        }
    }
    let a2v = seq_retrieve(&a, &v, &kind, RetrievalDirection::A2V, 4, None).unwrap();
    for (j, r) in a2v.iter().enumerate() {
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&x, &y| m[[x, j]].total_cmp(&m[[y, j]]).then(x.cmp(&y)));
        assert_eq!(r, &order);
    }
}

#[test]
fn rankings_do_not_depend_on_worker_count() {
    let q = random_set(16, 9, 5, 3);
    let c = random_set(17, 15, 6, 3);
    for mode in [
        RetrievalMode::Agg,
        RetrievalMode::Seq { kind: eucl() },
        RetrievalMode::Hybrid { k: 4, kind: DistanceKind::soft_dtw_default() },
    ] {
        let one = retrieve(&q, &c, &mode, RetrievalDirection::A2V, 10, Some(1)).unwrap();
        let many = retrieve(&q, &c, &mode, RetrievalDirection::A2V, 10, Some(3)).unwrap();
        assert_eq!(one.ranks, many.ranks);
    }
}

#[test]
fn bench_agg_row_matches_recall() {
    let v = random_set(18, 6, 4, 3);
    let a: Vec<Array2<f64>> = v.iter().map(|s| s * 1.1 + 0.01).collect();
    let positives: Vec<usize> = (0..6).collect();
    let set = BenchSet {
        query_videos: &v,
        query_audios: &a,
        cand_videos: &v,
        cand_audios: &a,
        positives: &positives,
    };
    let rows = bench(&set, &[RetrievalMode::Agg], Some(1)).unwrap();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row.mode, "agg");
        let r1 = recall_at(&row.ranks, &positives, 1, 6).unwrap();
        assert_eq!(row.recall[0], r1);
        assert!(row.total_s >= row.preselect_s);
    }
    let tsv = format_tsv(&rows);
    let mut lines = tsv.lines();
    assert_eq!(lines.next(), Some(TSV_HEADER));
    assert_eq!(lines.next().unwrap().split('\t').count(), 8);
    let table = format_table(&rows);
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with("mode"));
}

#[test]
fn mode_labels() {
    assert_eq!(RetrievalMode::Agg.label(), "agg");
    assert_eq!(RetrievalMode::Seq { kind: eucl() }.label(), "seq-eucl");
    assert_eq!(
        RetrievalMode::Hybrid { k: 100, kind: eucl() }.label(),
        "hybrid-eucl-k100"
    );
}

//! Randomized invariants over the numeric building blocks.

use g2l_core::game::{shapley_values_exact, TableGame};
use g2l_core::numcore::{l2_normalize_rows, norm, pairwise_sum, softmax_in_place, Matrix};
use g2l_core::trainer::{alignment_metric, uniformity_metric};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-5.0f64..5.0, rows * cols).prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(mut v in prop::collection::vec(-50.0f64..50.0, 1..20), t in 0.05f64..5.0) {
        softmax_in_place(&mut v, t);
        prop_assert!(v.iter().all(|&p| (0.0..=1.0).contains(&p)));
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_agrees_with_naive(v in prop::collection::vec(-1e3f64..1e3, 0..200)) {
        let naive: f64 = v.iter().sum();
        prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-9 * (1.0 + v.iter().map(|x| x.abs()).sum::<f64>()));
    }

    #[test]
    fn normalized_rows_have_unit_norm(m in matrix(4, 6)) {
        prop_assume!(m.iter_rows().all(|r| norm(r) > 1e-6));
        let u = l2_normalize_rows(&m).unwrap();
        for r in u.iter_rows() {
            prop_assert!((norm(r) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shapley_values_are_efficient(players in 1usize..7, seed in any::<u64>()) {
        let mut rng = g2l_core::numcore::RngStream::new(seed, 0);
        let g = TableGame::random(players, &mut rng).unwrap();
        let phi = shapley_values_exact(&g).unwrap();
        let total = g.value((1 << players) - 1) - g.value(0);
        prop_assert!((phi.iter().sum::<f64>() - total).abs() < 1e-9);
    }

    #[test]
    fn metrics_ignore_row_order(m in matrix(6, 4), q in matrix(6, 4), shift in 0usize..6) {
        prop_assume!(m.iter_rows().chain(q.iter_rows()).all(|r| norm(r) > 1e-6));
        let (m, q) = (l2_normalize_rows(&m).unwrap(), l2_normalize_rows(&q).unwrap());
        let perm: Vec<usize> = (0..6).map(|i| (i + shift) % 6).collect();
        let (mp, qp) = (m.select_rows(&perm), q.select_rows(&perm));
        prop_assert!((alignment_metric(&q, &m).unwrap() - alignment_metric(&qp, &mp).unwrap()).abs() < 1e-12);
        prop_assert!((uniformity_metric(&m).unwrap() - uniformity_metric(&mp).unwrap()).abs() < 1e-12);
    }
}

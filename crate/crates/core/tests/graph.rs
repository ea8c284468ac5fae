mod common;

use std::io::Cursor;

use common::*;
use hotskit::graph::*;
use hotskit::{HotsError, SparseMatrix};
use proptest::prelude::*;

fn load(text: &str) -> (SparseMatrix, GraphMeta) {
    from_edge_list(Cursor::new(text), EdgeListOptions::default()).unwrap()
}

#[test]
fn edge_list_two_cycle() {
    let (a, meta) = load("0 1\n1 0");
    assert_eq!(a.to_dense(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    assert_eq!(meta.n, 2);
    assert_eq!(meta.m, 2);
}

#[test]
fn edge_list_sums_duplicates() {
    let (a, _) = load("0 1\n0 1");
    assert_eq!(a.entry(0, 1), 2.0);
    assert_eq!(a.nnz(), 1);
}

#[test]
fn edge_list_marks_dangling() {
    let (_, meta) = load("0 1\n1 2");
    assert_eq!(meta.dangling, vec![false, false, true]);
}

#[test]
fn edge_list_reports_bad_lines() {
    let err = from_edge_list(Cursor::new("# header\n0 1\n0 x\n"), EdgeListOptions::default()).unwrap_err();
    assert!(matches!(err, HotsError::Parse { line: 3, .. }), "{err}");
    let err = from_edge_list(Cursor::new("0 1 -2\n"), EdgeListOptions { weighted: true }).unwrap_err();
    assert!(matches!(err, HotsError::Domain(_)), "{err}");
}

#[test]
fn edge_list_weights() {
    let (a, _) = from_edge_list(Cursor::new("0 1 2.5\n1 0 0.5 # comment\n"), EdgeListOptions { weighted: true })
        .unwrap();
    assert_eq!(a.to_dense(), vec![vec![0.0, 2.5], vec![0.5, 0.0]]);
}

#[test]
fn matrix_market_general() {
    let text = "%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 2 1\n2 1 2\n";
    let a = from_matrix_market(Cursor::new(text)).unwrap();
    assert_eq!(a.to_dense(), vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
}

#[test]
fn matrix_market_pattern() {
    let text = "%%MatrixMarket matrix coordinate pattern general\n3 3 2\n1 2\n3 1\n";
    let a = from_matrix_market(Cursor::new(text)).unwrap();
    assert!(a.values().iter().all(|&v| v == 1.0));
    assert_eq!(a.entry(2, 0), 1.0);
}

#[test]
fn matrix_market_rejections() {
    let array = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
    assert!(matches!(
        from_matrix_market(Cursor::new(array)).unwrap_err(),
        HotsError::UnsupportedFormat(_)
    ));
    let sym = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 1\n";
    assert!(matches!(
        from_matrix_market(Cursor::new(sym)).unwrap_err(),
        HotsError::UnsupportedFormat(_)
    ));
}

#[test]
fn products_by_hand() {
    let a = dense(&[&[0.0, 1.0], &[2.0, 0.0]]);
    assert_eq!(a.apply(&[1.0, 1.0]).unwrap(), vec![1.0, 2.0]);
    assert_eq!(a.apply_transpose(&[1.0, 1.0]).unwrap(), vec![2.0, 1.0]);
    let shifted = SparseMatrix::from_triplets(2, []).unwrap().with_shift(0.5).unwrap();
    assert_eq!(shifted.apply(&[1.0, 3.0]).unwrap(), vec![2.0, 2.0]);
    let perm = dense(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
    assert_eq!(perm.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![2.0, 3.0, 1.0]);
    assert!(matches!(
        a.apply(&[1.0]).unwrap_err(),
        HotsError::DimensionMismatch { expected: 2, got: 1 }
    ));
}

#[test]
fn transpose_examples() {
    let a = dense(&[&[0.0, 1.0], &[2.0, 0.0]]);
    assert_eq!(a.explicit_transpose().to_dense(), vec![vec![0.0, 2.0], vec![1.0, 0.0]]);
    let chain = dense(&[&[0.0, 1.0], &[0.0, 0.0]]);
    assert_eq!(chain.explicit_transpose().zero_cols(), vec![1]);
}

#[test]
fn connectivity_examples() {
    let two = dense(&[&[0.0, 1.0], &[2.0, 0.0]]);
    assert!(is_strongly_connected(&two));
    assert!(!is_primitive_symmetrized(&two));
    let three = dense(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
    assert!(is_strongly_connected(&three));
    assert!(is_primitive_symmetrized(&three));
    let chain = dense(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
    assert!(!is_strongly_connected(&chain));
    let shifted = chain.clone().with_shift(0.1).unwrap();
    assert!(is_strongly_connected(&shifted));
}

fn dense_product(a: &[Vec<f64>], x: &[f64], transpose: bool) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if transpose { a[j][i] * x[j] } else { a[i][j] * x[j] })
                .sum()
        })
        .collect()
}

fn arb_matrix() -> impl Strategy<Value = (SparseMatrix, Vec<f64>)> {
    (1usize..=50).prop_flat_map(|n| {
        (
            prop::collection::vec((0..n, 0..n, 0.0f64..10.0), 0..4 * n),
            prop::collection::vec(0.01f64..5.0, n),
            prop::bool::ANY,
        )
            .prop_map(move |(t, x, shifted)| {
                let a = SparseMatrix::from_triplets(n, t).unwrap();
                let a = if shifted { a.with_shift(0.3).unwrap() } else { a };
                (a, x)
            })
    })
}

proptest! {
    #[test]
    fn products_match_dense((a, x) in arb_matrix()) {
        let d = a.to_dense();
        let n = a.n() as f64;
        for (got, want) in [(a.apply(&x).unwrap(), dense_product(&d, &x, false)),
                            (a.apply_transpose(&x).unwrap(), dense_product(&d, &x, true))] {
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() <= 1e-14 * n * w.abs().max(1.0));
            }
        }
    }

    #[test]
    fn transpose_kernel_matches_explicit((a, x) in arb_matrix()) {
        let via = a.explicit_transpose().apply(&x).unwrap();
        let direct = a.apply_transpose(&x).unwrap();
        for (g, w) in direct.iter().zip(&via) {
            prop_assert!((g - w).abs() <= 1e-13 * w.abs().max(1.0));
        }
        prop_assert_eq!(a.explicit_transpose().explicit_transpose(), a);
    }

    #[test]
    fn edge_list_round_trip((a, _) in arb_matrix()) {
        let a = SparseMatrix::try_new(a.n(), a.row_offsets().to_vec(), a.col_indices().to_vec(),
                                      a.values().iter().map(|v| v + 1.0).collect(), 0.0).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&a, &mut buf).unwrap();
        let (b, _) = from_edge_list(Cursor::new(buf), EdgeListOptions { weighted: true }).unwrap();
        // trailing isolated nodes do not appear in an edge list
        let n = b.n();
        prop_assert!(n <= a.n());
        for (i, j, v) in a.triplets() {
            prop_assert_eq!(b.stored(i, j), v);
        }
    }

    #[test]
    fn shift_composes((a, x) in arb_matrix()) {
        let plain = SparseMatrix::try_new(a.n(), a.row_offsets().to_vec(), a.col_indices().to_vec(),
                                          a.values().to_vec(), 0.0).unwrap();
        let c = 0.7;
        let shifted = plain.clone().with_shift(c).unwrap();
        let s: f64 = x.iter().sum();
        let base = plain.apply(&x).unwrap();
        let got = shifted.apply(&x).unwrap();
        for (g, b) in got.iter().zip(&base) {
            prop_assert!((g - (b + c * s)).abs() <= 1e-12 * g.abs().max(1.0));
        }
        prop_assert_eq!(shifted.entry(0, 0), plain.stored(0, 0) + c);
    }
}

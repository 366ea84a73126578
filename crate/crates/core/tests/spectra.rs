//! Normalized propagation matrices against a dense eigensolver.

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torquegnn::graph::{add_self_loops, build_graph, build_weighted_graph, sym_normalize};
use torquegnn::{Matrix, SparseMatrix};

fn spectral_radius(s: &SparseMatrix) -> f64 {
    let n = s.rows();
    let dense = s.to_dense();
    let m = DMatrix::from_fn(n, n, |i, j| dense.get(i, j));
    SymmetricEigen::new(m).eigenvalues.iter().fold(0.0f64, |r, v| r.max(v.abs()))
}

#[test]
fn fifty_random_graphs_stay_within_unit_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..50 {
        let n = rng.random_range(1..=64);
        let p = rng.random_range(0.0..0.6);
        let weighted = case % 2 == 1;
        let mut triples = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(p) {
                    let w = if weighted { rng.random_range(1e-3..1.0) } else { 1.0 };
                    triples.push((i, j, w));
                }
            }
        }
        let (g, _) = build_weighted_graph(n, triples).unwrap();
        let a = sym_normalize(&add_self_loops(&g.adjacency()).unwrap()).unwrap();
        assert!(a.check_symmetric(1e-12));
        let r = spectral_radius(&a);
        assert!(r <= 1.0 + 1e-9, "case {case}: n={n}, radius {r}");
    }
}

#[test]
fn regular_clique_rows_sum_to_one() {
    for n in [2usize, 3, 7] {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let (g, _) = build_graph(n, &pairs).unwrap();
        let a = sym_normalize(&add_self_loops(&g.adjacency()).unwrap()).unwrap();
        let out = a.spmm(&Matrix::filled(n, 1, 1.0)).unwrap();
        assert!(out.as_slice().iter().all(|v| (v - 1.0).abs() < 1e-10), "{out:?}");
    }
}

proptest! {
    #[test]
    fn normalized_matrix_is_symmetric_with_unit_top_eigenvalue(
        n in 1usize..24,
        raw in prop::collection::vec((0usize..24, 0usize..24, 0.01f64..3.0), 0..80),
    ) {
        let triples: Vec<(usize, usize, f64)> = raw.into_iter().filter(|t| t.0 < n && t.1 < n).collect();
        let (g, _) = build_weighted_graph(n, triples).unwrap();
        let a = sym_normalize(&add_self_loops(&g.adjacency()).unwrap()).unwrap();
        prop_assert!(a.check_symmetric(1e-12));
        prop_assert!(a.row_sums().iter().all(|&d| d > 0.0));
        let r = spectral_radius(&a);
        // D^{-1/2}·d^{1/2} is an eigenvector with eigenvalue exactly 1.
        prop_assert!((r - 1.0).abs() <= 1e-9, "radius {}", r);
    }
}

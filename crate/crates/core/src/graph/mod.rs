//! Undirected graphs and their sparse propagation operators.
//!
//! A [`Graph`] stores each undirected edge once as a canonical `(min, max)`
//! pair. Directed entries only appear once a graph is materialized as a
//! [`SparseMatrix`], where every edge contributes both `(i, j)` and `(j, i)`.

mod edgelist;
mod sparse;

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng as _;

pub use edgelist::{parse_edge_list, read_edge_list, write_edge_list, EdgeLine};
pub use sparse::SparseMatrix;

use crate::error::{Error, Result};
use crate::seed;

/// Canonical undirected node pair, always `(min, max)`.
pub type Edge = (usize, usize);

#[inline]
pub fn canonical(i: usize, j: usize) -> Edge {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<Edge>,
    weights: Vec<f64>,
}

/// What [`build_graph`] discarded from its input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub duplicates_dropped: usize,
    pub self_loops_dropped: usize,
}

/// Build an unweighted graph from a pair list, dropping duplicates and self-loops.
pub fn build_graph(num_nodes: usize, pairs: &[(usize, usize)]) -> Result<(Graph, BuildReport)> {
    build_weighted_graph(num_nodes, pairs.iter().map(|&(i, j)| (i, j, 1.0)))
}

/// Weighted variant of [`build_graph`]. The first weight seen for a pair wins.
pub fn build_weighted_graph(
    num_nodes: usize,
    triples: impl IntoIterator<Item = (usize, usize, f64)>,
) -> Result<(Graph, BuildReport)> {
    let mut report = BuildReport::default();
    let mut seen = HashSet::new();
    let mut kept = Vec::new();
    for (i, j, w) in triples {
        if i >= num_nodes || j >= num_nodes {
            return Err(Error::structural(format!(
                "edge ({i}, {j}) has an endpoint outside [0, {num_nodes})"
            )));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::structural(format!("edge ({i}, {j}) has invalid weight {w}")));
        }
        if i == j {
            report.self_loops_dropped += 1;
            continue;
        }
        let e = canonical(i, j);
        if !seen.insert(e) {
            report.duplicates_dropped += 1;
            continue;
        }
        kept.push((e, w));
    }
    kept.sort_by_key(|k| k.0);
    let (edges, weights) = kept.into_iter().unzip();
    Ok((Graph { num_nodes, edges, weights }, report))
}

impl Graph {
    pub fn empty(num_nodes: usize) -> Self {
        Graph { num_nodes, edges: Vec::new(), weights: Vec::new() }
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges `K`.
    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted canonical edges.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&canonical(i, j)).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Symmetric weighted adjacency `A` without self-loops.
    pub fn adjacency(&self) -> SparseMatrix {
        let trips = self.edges.iter().zip(&self.weights).flat_map(|(&(i, j), &w)| [(i, j, w), (j, i, w)]);
        SparseMatrix::from_triplets(self.num_nodes, self.num_nodes, trips)
            .expect("graph invariants guarantee valid triplets")
    }

    /// Graph with `added` pairs inserted at unit weight (existing pairs are skipped).
    pub fn with_added_edges(&self, added: &[Edge]) -> Result<Graph> {
        let triples = self
            .edges
            .iter()
            .zip(&self.weights)
            .map(|(&(i, j), &w)| (i, j, w))
            .chain(added.iter().map(|&(i, j)| (i, j, 1.0)));
        build_weighted_graph(self.num_nodes, triples).map(|(g, _)| g)
    }
}

/// `Â = A + I`: add one to every diagonal entry.
pub fn add_self_loops(adj: &SparseMatrix) -> Result<SparseMatrix> {
    if !adj.is_square() {
        return Err(Error::structural(format!(
            "add_self_loops needs a square matrix, got {}x{}",
            adj.rows(),
            adj.cols()
        )));
    }
    let n = adj.rows();
    SparseMatrix::from_triplets(n, n, adj.iter().chain((0..n).map(|i| (i, i, 1.0))))
}

/// `D^{-1/2} Â D^{-1/2}` with weighted degrees `d_i = Σ_j Â_ij`.
pub fn sym_normalize(adj: &SparseMatrix) -> Result<SparseMatrix> {
    if !adj.is_square() {
        return Err(Error::structural(format!(
            "sym_normalize needs a square matrix, got {}x{}",
            adj.rows(),
            adj.cols()
        )));
    }
    let deg = adj.row_sums();
    if let Some(i) = deg.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::structural(format!("row {i} has non-positive degree {}", deg[i])));
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    Ok(adj.map_values(|i, j, v| v * inv_sqrt[i] * inv_sqrt[j]))
}

/// Edge edits produced by [`perturbation_delta`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerturbDelta {
    pub removed: Vec<Edge>,
    pub added: Vec<Edge>,
}

/// Sample a structural perturbation: `⌊remove_fraction·K⌋` existing edges to
/// drop and `⌊add_fraction·K⌋` absent pairs to insert.
pub fn perturbation_delta(
    g: &Graph,
    add_fraction: f64,
    remove_fraction: f64,
    seed: u64,
) -> Result<PerturbDelta> {
    for (name, f) in [("add_fraction", add_fraction), ("remove_fraction", remove_fraction)] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::parameter(format!("{name} = {f} outside [0, 1]")));
        }
    }
    let k = g.num_edges();
    let n_remove = (remove_fraction * k as f64 + 1e-9).floor() as usize;
    let n_add = (add_fraction * k as f64 + 1e-9).floor() as usize;
    if k > 0 && n_remove >= k {
        return Err(Error::parameter(format!(
            "remove_fraction {remove_fraction} would delete all {k} edges"
        )));
    }

    let mut rng = seed::rng(seed);
    let mut removed: Vec<Edge> =
        index::sample(&mut rng, k, n_remove).into_iter().map(|p| g.edges[p]).collect();
    removed.sort_unstable();

    let added = sample_absent_pairs(g, n_add, &mut rng, |_, _| true)?;
    Ok(PerturbDelta { removed, added })
}

/// Randomly add and remove edges; the node count is preserved.
pub fn perturb_structure(g: &Graph, add_fraction: f64, remove_fraction: f64, seed: u64) -> Result<Graph> {
    let delta = perturbation_delta(g, add_fraction, remove_fraction, seed)?;
    apply_delta(g, &delta)
}

pub fn apply_delta(g: &Graph, delta: &PerturbDelta) -> Result<Graph> {
    let removed: HashSet<Edge> = delta.removed.iter().copied().collect();
    let kept =
        g.edges.iter().zip(&g.weights).filter(|(e, _)| !removed.contains(e)).map(|(&(i, j), &w)| (i, j, w));
    let triples = kept.chain(delta.added.iter().map(|&(i, j)| (i, j, 1.0)));
    build_weighted_graph(g.num_nodes, triples).map(|(g, _)| g)
}

/// Uniformly sample `count` distinct unordered pairs absent from `g` that
/// satisfy `accept`.
pub(crate) fn sample_absent_pairs(
    g: &Graph,
    count: usize,
    rng: &mut seed::Rng,
    accept: impl Fn(usize, usize) -> bool,
) -> Result<Vec<Edge>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let n = g.num_nodes;
    let total_pairs = n * n.saturating_sub(1) / 2;
    // Rejection sampling is fine while absent pairs are plentiful; fall back
    // to enumeration when the graph is close to complete.
    if total_pairs >= 4 * (g.num_edges() + count) && n <= 1 << 31 {
        let mut chosen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        let budget = 200 * (count + 16);
        while out.len() < count && attempts < budget {
            attempts += 1;
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j {
                continue;
            }
            let e = canonical(i, j);
            if g.contains_edge(e.0, e.1) || !accept(e.0, e.1) || !chosen.insert(e) {
                continue;
            }
            out.push(e);
        }
        if out.len() == count {
            return Ok(out);
        }
    }
    let pool: Vec<Edge> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !g.contains_edge(i, j) && accept(i, j))
        .collect();
    if pool.len() < count {
        return Err(Error::parameter(format!(
            "requested {count} absent pairs but only {} are available",
            pool.len()
        )));
    }
    Ok(index::sample(rng, pool.len(), count).into_iter().map(|p| pool[p]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_drops_duplicates_and_self_loops() {
        let (g, rep) = build_graph(3, &[(0, 1), (1, 0), (2, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(rep, BuildReport { duplicates_dropped: 1, self_loops_dropped: 1 });
    }

    #[test]
    fn build_empty_graph() {
        let (g, _) = build_graph(2, &[]).unwrap();
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn build_rejects_out_of_range_endpoint() {
        let err = build_graph(3, &[(0, 1), (1, 3)]).unwrap_err();
        assert!(err.to_string().contains("(1, 3)"), "{err}");
    }

    #[test]
    fn self_loops_on_tiny_matrices() {
        let z = SparseMatrix::from_triplets(1, 1, []).unwrap();
        assert_eq!(add_self_loops(&z).unwrap().to_dense().as_slice(), &[1.0]);

        let (g, _) = build_graph(2, &[(0, 1)]).unwrap();
        let a_hat = add_self_loops(&g.adjacency()).unwrap();
        assert_eq!(a_hat.to_dense().as_slice(), &[1.0, 1.0, 1.0, 1.0]);

        let w = SparseMatrix::from_triplets(2, 2, [(0, 0, 0.5)]).unwrap();
        assert_eq!(add_self_loops(&w).unwrap().get(0, 0), Some(1.5));

        assert!(add_self_loops(&SparseMatrix::from_triplets(2, 3, []).unwrap()).is_err());
    }

    #[test]
    fn normalize_two_clique() {
        let one = sym_normalize(&SparseMatrix::identity(1)).unwrap();
        assert_eq!(one.to_dense().as_slice(), &[1.0]);

        let (g, _) = build_graph(2, &[(0, 1)]).unwrap();
        let n = sym_normalize(&add_self_loops(&g.adjacency()).unwrap()).unwrap();
        for v in n.to_dense().as_slice() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        assert!(n.symmetric_flag());
    }

    #[test]
    fn normalize_rejects_zero_rows() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 0, 1.0)]).unwrap();
        assert!(matches!(sym_normalize(&a), Err(Error::Structural(_))));
    }

    fn ring(n: usize) -> Graph {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        build_graph(n, &pairs).unwrap().0
    }

    #[test]
    fn perturb_identity_and_counts() {
        let g = ring(10);
        assert_eq!(perturb_structure(&g, 0.0, 0.0, 3).unwrap(), g);
        let up = perturb_structure(&g, 0.2, 0.0, 3).unwrap();
        assert_eq!(up.num_edges(), 12);
        assert_eq!(up.num_nodes(), 10);
        let both = perturb_structure(&g, 0.3, 0.5, 4).unwrap();
        assert_eq!(both.num_edges(), 10 - 5 + 3);
    }

    #[test]
    fn perturb_is_deterministic_per_seed() {
        let g = ring(30);
        let a = perturb_structure(&g, 0.1, 0.1, 11).unwrap();
        let b = perturb_structure(&g, 0.1, 0.1, 11).unwrap();
        let c = perturb_structure(&g, 0.1, 0.1, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn perturb_parameter_errors() {
        let g = ring(5);
        assert!(perturb_structure(&g, -0.1, 0.0, 0).is_err());
        assert!(perturb_structure(&g, 0.0, 1.5, 0).is_err());
        assert!(matches!(perturb_structure(&g, 0.0, 1.0, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn absent_pairs_dense_fallback() {
        // Complete graph on 6 nodes minus one edge: only one absent pair.
        let mut pairs = Vec::new();
        for i in 0..6 {
            for j in (i + 1)..6 {
                if (i, j) != (2, 4) {
                    pairs.push((i, j));
                }
            }
        }
        let g = build_graph(6, &pairs).unwrap().0;
        let mut rng = seed::rng(0);
        assert_eq!(sample_absent_pairs(&g, 1, &mut rng, |_, _| true).unwrap(), vec![(2, 4)]);
        assert!(sample_absent_pairs(&g, 2, &mut rng, |_, _| true).is_err());
    }
}

//! Datasets, splits, synthetic graphs, edge injection and reports.

mod import;
mod inject;
mod manifest;
mod report;
mod splits;
mod synth;

use std::sync::Arc;

pub use import::{import_geom_gcn, import_linqs};
pub use inject::{inject_adversarial, InjectionRecord, InjectionStrategy};
pub use manifest::{load_dataset, resolve_dataset, write_dataset, Manifest};
pub use report::{load_report, mean_std, save_report, ArmSummary, Report, RunRecord};
pub use splits::{make_splits, Splits, DEFAULT_FRACTIONS};
pub use synth::{generate_sbm, SbmParams};

use crate::error::{Error, Result};
use crate::graph::{Graph, SparseMatrix};
use crate::kernel::Matrix;

/// Inputs with at most this fraction of non-zeros are stored sparse.
const SPARSE_DENSITY: f64 = 0.25;

/// Node feature matrix, kept sparse when most entries are zero.
#[derive(Debug, Clone)]
pub enum Features {
    Dense(Matrix),
    Sparse(Arc<SparseMatrix>),
}

impl Features {
    pub fn from_dense(m: Matrix) -> Self {
        let total = m.rows() * m.cols();
        let nnz = m.as_slice().iter().filter(|&&v| v != 0.0).count();
        if total > 0 && (nnz as f64) <= SPARSE_DENSITY * total as f64 {
            let triples = (0..m.rows())
                .flat_map(|i| m.row(i).iter().enumerate().map(move |(j, &v)| (i, j, v)))
                .filter(|t| t.2 != 0.0)
                .collect::<Vec<_>>();
            let s = SparseMatrix::from_triplets(m.rows(), m.cols(), triples)
                .expect("entries of a finite dense matrix are valid");
            Features::Sparse(Arc::new(s))
        } else {
            Features::Dense(m)
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Features::Dense(m) => m.rows(),
            Features::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Features::Dense(m) => m.cols(),
            Features::Sparse(s) => s.cols(),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            Features::Dense(m) => m.clone(),
            Features::Sparse(s) => s.to_dense(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Features::Sparse(_))
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub features: Features,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub splits: Splits,
}

impl Dataset {
    /// Checks sizes, label range and split disjointness.
    pub fn new(
        name: impl Into<String>,
        graph: Graph,
        features: Features,
        labels: Vec<usize>,
        num_classes: usize,
        splits: Splits,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        if features.rows() != n {
            return Err(Error::structural(format!(
                "graph has {n} nodes but features have {} rows",
                features.rows()
            )));
        }
        if labels.len() != n {
            return Err(Error::structural(format!(
                "graph has {n} nodes but {} labels were given",
                labels.len()
            )));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::structural(format!("label {y} of node {i} outside [0, {num_classes})")));
        }
        splits.validate(n)?;
        Ok(Dataset { name: name.into(), graph, features, labels, num_classes, splits })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn edge_homophily(&self) -> f64 {
        edge_homophily(&self.graph, &self.labels)
    }

    /// Same data on a different edge set.
    pub fn with_graph(&self, graph: Graph) -> Result<Self> {
        Dataset::new(
            self.name.clone(),
            graph,
            self.features.clone(),
            self.labels.clone(),
            self.num_classes,
            self.splits.clone(),
        )
    }
}

/// Fraction of edges whose endpoints share a label; 0 for an edgeless graph.
pub fn edge_homophily(g: &Graph, labels: &[usize]) -> f64 {
    if g.num_edges() == 0 {
        return 0.0;
    }
    let same = g.edges().iter().filter(|&&(i, j)| labels[i] == labels[j]).count();
    same as f64 / g.num_edges() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    #[test]
    fn homophily_counts_matching_edges() {
        let (g, _) = build_graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(edge_homophily(&g, &[0, 0, 1, 1]), 0.5);
        assert_eq!(edge_homophily(&Graph::empty(3), &[0, 1, 2]), 0.0);
    }

    #[test]
    fn features_pick_storage_by_density() {
        let mut m = Matrix::zeros(4, 10);
        m.set(1, 3, 2.0);
        let f = Features::from_dense(m.clone());
        assert!(f.is_sparse());
        assert_eq!(f.to_dense(), m);
        let d = Features::from_dense(Matrix::filled(2, 2, 1.0));
        assert!(!d.is_sparse());
    }

    #[test]
    fn dataset_rejects_mismatches() {
        let (g, _) = build_graph(3, &[(0, 1)]).unwrap();
        let x = Features::Dense(Matrix::zeros(3, 2));
        let s = Splits { train: vec![0], val: vec![1], test: vec![2] };
        assert!(Dataset::new("t", g.clone(), x.clone(), vec![0, 1, 0], 2, s.clone()).is_ok());
        assert!(Dataset::new("t", g.clone(), x.clone(), vec![0, 2, 0], 2, s.clone()).is_err());
        assert!(Dataset::new("t", g.clone(), x.clone(), vec![0, 1], 2, s.clone()).is_err());
        let overlap = Splits { train: vec![0], val: vec![0], test: vec![2] };
        assert!(Dataset::new("t", g, x, vec![0, 1, 0], 2, overlap).is_err());
    }
}

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{add_self_loops, sym_normalize, Edge, Graph, PerturbDelta, SparseMatrix};

/// Rewiring outcome of one layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSummary {
    /// 1-based layer index.
    pub layer: usize,
    pub edges_in: usize,
    pub cutoff: usize,
    pub removed: usize,
    pub added: usize,
    pub edges_out: usize,
    /// Removal was skipped because it would have emptied the layer.
    pub fell_back: bool,
}

/// Per-layer propagation matrices and the supports they were built from.
#[derive(Debug, Clone)]
pub struct PropagationStack {
    /// Self-looped, normalized matrices `𝒜¹ … 𝒜ᴸ`.
    pub layers: Vec<Arc<SparseMatrix>>,
    /// Off-diagonal weighted adjacency behind each layer.
    pub adjacency: Vec<SparseMatrix>,
    pub summaries: Vec<LayerSummary>,
}

impl PropagationStack {
    /// `depth` copies of the normalized input graph.
    pub fn backbone(graph: &Graph, depth: usize) -> Result<Self> {
        let adj = graph.adjacency();
        let m = Arc::new(sym_normalize(&add_self_loops(&adj)?)?);
        let k = graph.num_edges();
        Ok(PropagationStack {
            layers: vec![m; depth],
            adjacency: vec![adj; depth],
            summaries: (1..=depth)
                .map(|layer| LayerSummary {
                    layer,
                    edges_in: k,
                    cutoff: 0,
                    removed: 0,
                    added: 0,
                    edges_out: k,
                    fell_back: false,
                })
                .collect(),
        })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Apply the same edge edits to every layer's adjacency and renormalize.
    /// Removals of absent edges and additions of present ones are ignored;
    /// added edges get weight 1.
    pub fn perturbed(&self, delta: &PerturbDelta) -> Result<Self> {
        let cut: HashSet<Edge> = delta.removed.iter().copied().collect();
        let mut layers = Vec::with_capacity(self.depth());
        let mut adjacency = Vec::with_capacity(self.depth());
        for adj in &self.adjacency {
            let n = adj.rows();
            if let Some(&(i, j)) = delta.added.iter().find(|&&(i, j)| i >= n || j >= n) {
                return Err(Error::structural(format!("perturbation edge ({i}, {j}) outside {n} nodes")));
            }
            let mut triples: Vec<(usize, usize, f64)> =
                adj.upper_off_diagonal().into_iter().filter(|&(i, j, _)| !cut.contains(&(i, j))).collect();
            triples
                .extend(delta.added.iter().filter(|&&(i, j)| !adj.contains(i, j)).map(|&(i, j)| (i, j, 1.0)));
            let a = SparseMatrix::from_triplets(
                n,
                n,
                triples.iter().flat_map(|&(i, j, w)| [(i, j, w), (j, i, w)]),
            )?;
            layers.push(Arc::new(sym_normalize(&add_self_loops(&a)?)?));
            adjacency.push(a);
        }
        Ok(PropagationStack { layers, adjacency, summaries: self.summaries.clone() })
    }
}

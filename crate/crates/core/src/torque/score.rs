use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Edge, SparseMatrix};
use crate::kernel::ops::lse;
use crate::kernel::Matrix;

/// Euclidean distance between two representation rows.
pub fn edge_distance(h_i: &[f64], h_j: &[f64]) -> Result<f64> {
    if h_i.len() != h_j.len() {
        return Err(Error::structural(format!(
            "representation lengths differ: {} vs {}",
            h_i.len(),
            h_j.len()
        )));
    }
    Ok(h_i.iter().zip(h_j).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// `-log Σ_y exp(logit_y)`.
pub fn node_energy(logits: &[f64]) -> Result<f64> {
    if logits.is_empty() {
        return Err(Error::structural("node energy needs at least one logit"));
    }
    Ok(-lse(logits))
}

/// Edge-level energy: product of the (shifted) endpoint energies.
#[inline]
pub fn edge_energy(e_i: f64, e_j: f64) -> f64 {
    e_i * e_j
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredEdge {
    pub edge: Edge,
    pub distance: f64,
    pub energy: f64,
    pub torque: f64,
}

/// Scores edges for one layer from its input representations and logits.
///
/// Node energies are shifted by their minimum so every energy is
/// non-negative before the pairwise product.
#[derive(Debug, Clone)]
pub struct LayerScorer<'a> {
    reps: &'a Matrix,
    shifted_energy: Vec<f64>,
}

impl<'a> LayerScorer<'a> {
    pub fn new(reps: &'a Matrix, logits: &Matrix) -> Result<Self> {
        if reps.rows() != logits.rows() {
            return Err(Error::structural(format!(
                "{} representation rows vs {} logit rows",
                reps.rows(),
                logits.rows()
            )));
        }
        let raw = (0..logits.rows()).map(|i| node_energy(logits.row(i))).collect::<Result<Vec<_>>>()?;
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let shifted_energy: Vec<f64> = raw.iter().map(|e| e - min).collect();
        if shifted_energy.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("node energies".into()));
        }
        Ok(LayerScorer { reps, shifted_energy })
    }

    pub fn shifted_energies(&self) -> &[f64] {
        &self.shifted_energy
    }

    pub fn score(&self, (i, j): Edge) -> ScoredEdge {
        let distance =
            edge_distance(self.reps.row(i), self.reps.row(j)).expect("rows of one matrix have equal length");
        let energy = edge_energy(self.shifted_energy[i], self.shifted_energy[j]);
        ScoredEdge { edge: (i, j), distance, energy, torque: distance * energy }
    }

    pub fn score_all(&self, edges: &[Edge]) -> Vec<ScoredEdge> {
        edges.par_iter().map(|&e| self.score(e)).collect()
    }
}

/// Per-edge distance, energy and torque with a descending torque order.
#[derive(Debug, Clone)]
pub struct EdgeScoreTable {
    edges: Vec<ScoredEdge>,
    order: Vec<usize>,
    mean_distance: f64,
    mean_energy: f64,
    mean_torque: f64,
}

impl EdgeScoreTable {
    /// Build from scored edges; edge ids are positions in `edges`.
    pub fn new(edges: Vec<ScoredEdge>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::parameter("cannot score an empty edge set"));
        }
        if edges.iter().any(|e| !(e.distance.is_finite() && e.energy.is_finite() && e.torque.is_finite())) {
            return Err(Error::NonFinite("edge scores".into()));
        }
        let k = edges.len() as f64;
        let mean_distance = edges.iter().map(|e| e.distance).sum::<f64>() / k;
        let mean_energy = edges.iter().map(|e| e.energy).sum::<f64>() / k;
        let mean_torque = edges.iter().map(|e| e.torque).sum::<f64>() / k;
        let mut order: Vec<usize> = (0..edges.len()).collect();
        // Stable descending sort keyed (torque, id).
        order.sort_by(|&a, &b| edges[b].torque.total_cmp(&edges[a].torque).then(a.cmp(&b)));
        Ok(EdgeScoreTable { edges, order, mean_distance, mean_energy, mean_torque })
    }

    /// Build from distances and energies; torque is their product.
    pub fn from_parts(endpoints: &[Edge], distance: &[f64], energy: &[f64]) -> Result<Self> {
        if endpoints.len() != distance.len() || distance.len() != energy.len() {
            return Err(Error::structural("endpoint/distance/energy lengths differ"));
        }
        let edges = endpoints
            .iter()
            .zip(distance.iter().zip(energy))
            .map(|(&edge, (&d, &e))| ScoredEdge { edge, distance: d, energy: e, torque: d * e })
            .collect();
        EdgeScoreTable::new(edges)
    }

    /// Number of scored edges `K`.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edges in id order.
    pub fn edges(&self) -> &[ScoredEdge] {
        &self.edges
    }

    /// Edge ids sorted by descending torque, ties by ascending id.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// The `rank`-th entry (1-based) of the torque-sorted list.
    pub fn ranked(&self, rank: usize) -> &ScoredEdge {
        &self.edges[self.order[rank - 1]]
    }

    pub fn mean_distance(&self) -> f64 {
        self.mean_distance
    }

    pub fn mean_energy(&self) -> f64 {
        self.mean_energy
    }

    pub fn mean_torque(&self) -> f64 {
        self.mean_torque
    }

    /// Whether edge `id` is at or above the mean on all three metrics.
    pub fn is_high(&self, id: usize) -> bool {
        let e = &self.edges[id];
        e.distance >= self.mean_distance && e.energy >= self.mean_energy && e.torque >= self.mean_torque
    }

    pub fn high_count(&self) -> usize {
        (0..self.edges.len()).filter(|&id| self.is_high(id)).count()
    }
}

/// Score every off-diagonal edge of `support` using layer inputs `reps`
/// and their class logits.
pub fn score_layer(reps: &Matrix, logits: &Matrix, support: &SparseMatrix) -> Result<EdgeScoreTable> {
    if support.rows() != reps.rows() {
        return Err(Error::structural(format!(
            "support has {} rows, representations have {}",
            support.rows(),
            reps.rows()
        )));
    }
    let edges: Vec<Edge> = support.upper_off_diagonal().into_iter().map(|(i, j, _)| (i, j)).collect();
    if edges.is_empty() {
        return Err(Error::parameter("layer support has no edges to score"));
    }
    let scorer = LayerScorer::new(reps, logits)?;
    EdgeScoreTable::new(scorer.score_all(&edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    #[test]
    fn distance_examples() {
        assert_eq!(edge_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(edge_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!(edge_distance(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn energy_examples() {
        assert!((node_energy(&[0.0, 0.0]).unwrap() + 2f64.ln()).abs() < 1e-15);
        assert_eq!(node_energy(&[0.0]).unwrap(), 0.0);
        assert!((node_energy(&[1.0, 2.0, 3.0]).unwrap() + 3.407_605_964_444_38).abs() < 1e-14);
        assert!(node_energy(&[]).is_err());
        assert_eq!(edge_energy(0.0, 17.5), 0.0);
        assert_eq!(edge_energy(2.0, 3.0), 6.0);
        assert_eq!(edge_energy(-1.25, 0.75), edge_energy(0.75, -1.25));
    }

    #[test]
    fn equal_reps_give_zero_torque() {
        let (g, _) = build_graph(2, &[(0, 1)]).unwrap();
        let reps = Matrix::filled(2, 3, 0.7);
        let logits = Matrix::from_rows(&[[0.0, 1.0], [2.0, -1.0]]).unwrap();
        let t = score_layer(&reps, &logits, &g.adjacency()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.edges()[0].distance, 0.0);
        assert_eq!(t.edges()[0].torque, 0.0);
    }

    #[test]
    fn empty_support_is_parameter_error() {
        let reps = Matrix::zeros(2, 1);
        let s = SparseMatrix::identity(2);
        assert!(matches!(score_layer(&reps, &reps, &s), Err(Error::Parameter(_))));
    }

    #[test]
    fn means_and_order() {
        let t = EdgeScoreTable::from_parts(
            &[(0, 1), (0, 2), (1, 2), (2, 3)],
            &[1.0, 2.0, 2.0, 0.5],
            &[3.0, 1.0, 1.0, 4.0],
        )
        .unwrap();
        assert_eq!(t.mean_distance(), 1.375);
        assert_eq!(t.mean_energy(), 2.25);
        assert_eq!(t.mean_torque(), (3.0 + 2.0 + 2.0 + 2.0) / 4.0);
        // Ties at torque 2 keep id order.
        assert_eq!(t.order(), &[0, 1, 2, 3]);
        assert_eq!(t.ranked(1).edge, (0, 1));
    }
}

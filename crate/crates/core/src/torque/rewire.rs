use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{find_cutoff, EdgeScoreTable, GumbelChoice};
use crate::error::{Error, Result};
use crate::graph::{add_self_loops, canonical, sym_normalize, Edge, SparseMatrix};

/// Which rewiring steps run per layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Plain propagation over the input graph.
    None,
    /// Removal only.
    RThr,
    /// Addition only.
    AThr,
    /// Removal then addition.
    MThr,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::None, Variant::RThr, Variant::AThr, Variant::MThr];

    pub fn removes(self) -> bool {
        matches!(self, Variant::RThr | Variant::MThr)
    }

    pub fn adds(self) -> bool {
        matches!(self, Variant::AThr | Variant::MThr)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::RThr => "r-thr",
            Variant::AThr => "a-thr",
            Variant::MThr => "m-thr",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "none" => Ok(Variant::None),
            "r-thr" | "rthr" => Ok(Variant::RThr),
            "a-thr" | "athr" => Ok(Variant::AThr),
            "m-thr" | "mthr" => Ok(Variant::MThr),
            other => Err(Error::parameter(format!(
                "unknown variant {other:?} (expected none, r-thr, a-thr or m-thr)"
            ))),
        }
    }
}

/// Outcome of rewiring one layer.
#[derive(Debug, Clone)]
pub struct RewirePlan {
    /// Number of top-torque edges cut.
    pub cutoff: usize,
    pub removed: Vec<Edge>,
    pub added: Vec<GumbelChoice>,
    /// Removal would have emptied the layer and was skipped.
    pub fell_back: bool,
    /// Weighted adjacency without self-loops; the next layer's support.
    pub adjacency: SparseMatrix,
    /// Self-looped, symmetrically normalized propagation matrix.
    pub matrix: SparseMatrix,
}

impl RewirePlan {
    pub fn edge_count(&self) -> usize {
        self.adjacency.undirected_edge_count()
    }
}

/// Apply removal and/or addition to `support` and renormalize.
///
/// `support` is the previous layer's weighted adjacency (off-diagonal
/// entries only are used). `table` must score exactly those edges when
/// the variant removes.
pub fn rewire_layer(
    support: &SparseMatrix,
    table: Option<&EdgeScoreTable>,
    additions: &[GumbelChoice],
    variant: Variant,
    delta: f64,
) -> Result<RewirePlan> {
    if !support.is_square() {
        return Err(Error::structural("support must be square"));
    }
    let n = support.rows();
    let edges: Vec<(usize, usize, f64)> = support.upper_off_diagonal();

    if variant == Variant::None {
        let adjacency = binary(n, &edges)?;
        let matrix = sym_normalize(&add_self_loops(&adjacency)?)?;
        return Ok(RewirePlan {
            cutoff: 0,
            removed: Vec::new(),
            added: Vec::new(),
            fell_back: false,
            adjacency,
            matrix,
        });
    }

    let mut cutoff = 0;
    let mut removed = Vec::new();
    let mut fell_back = false;
    if variant.removes() && !edges.is_empty() {
        let table = table.ok_or_else(|| Error::parameter("removal needs an edge score table"))?;
        if table.len() != edges.len() {
            return Err(Error::structural(format!(
                "score table covers {} edges, support has {}",
                table.len(),
                edges.len()
            )));
        }
        cutoff = find_cutoff(table, delta)?;
        if cutoff >= edges.len() {
            log::warn!("removal of {cutoff} edges would empty the layer; keeping all edges");
            cutoff = 0;
            fell_back = true;
        }
        removed = (1..=cutoff).map(|r| table.ranked(r).edge).collect();
    }

    let cut: HashSet<Edge> = removed.iter().copied().collect();
    let mut kept: Vec<(usize, usize, f64)> =
        edges.iter().copied().filter(|&(i, j, _)| !cut.contains(&(i, j))).collect();
    let present: HashSet<Edge> = edges.iter().map(|&(i, j, _)| (i, j)).collect();

    let mut added = Vec::new();
    if variant.adds() {
        for c in additions {
            let e = canonical(c.edge.0, c.edge.1);
            if e.0 == e.1 || e.1 >= n || present.contains(&e) {
                continue;
            }
            kept.push((e.0, e.1, c.p_select));
            added.push(*c);
        }
    }

    let adjacency =
        SparseMatrix::from_triplets(n, n, kept.iter().flat_map(|&(i, j, w)| [(i, j, w), (j, i, w)]))?;
    let matrix = sym_normalize(&add_self_loops(&adjacency)?)?;
    Ok(RewirePlan { cutoff, removed, added, fell_back, adjacency, matrix })
}

fn binary(n: usize, edges: &[(usize, usize, f64)]) -> Result<SparseMatrix> {
    SparseMatrix::from_triplets(n, n, edges.iter().flat_map(|&(i, j, _)| [(i, j, 1.0), (j, i, 1.0)]))
}

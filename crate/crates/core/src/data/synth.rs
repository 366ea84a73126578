use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{make_splits, Dataset, Features, DEFAULT_FRACTIONS};
use crate::error::{Error, Result};
use crate::graph::build_graph;
use crate::kernel::Matrix;
use crate::seed;

/// Stochastic block model with balanced classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    pub classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub dim: usize,
    pub seed: u64,
}

impl Default for SbmParams {
    fn default() -> Self {
        SbmParams { n: 200, classes: 2, p_in: 0.05, p_out: 0.005, dim: 16, seed: 0 }
    }
}

impl SbmParams {
    /// Parse `n=200,classes=2,p_in=0.05,...`, with or without an `sbm:` prefix.
    /// Omitted keys keep their defaults.
    pub fn parse(spec: &str) -> Result<Self> {
        let body = spec.trim().strip_prefix("sbm:").unwrap_or(spec.trim());
        let mut p = SbmParams::default();
        for part in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::parameter(format!("sbm option {part:?} is not key=value")))?;
            let bad = || Error::parameter(format!("sbm option {k} has bad value {v:?}"));
            match k.trim() {
                "n" => p.n = v.parse().map_err(|_| bad())?,
                "classes" | "c" => p.classes = v.parse().map_err(|_| bad())?,
                "p_in" => p.p_in = v.parse().map_err(|_| bad())?,
                "p_out" => p.p_out = v.parse().map_err(|_| bad())?,
                "dim" | "d" => p.dim = v.parse().map_err(|_| bad())?,
                "seed" => p.seed = v.parse().map_err(|_| bad())?,
                other => return Err(Error::parameter(format!("unknown sbm option {other:?}"))),
            }
        }
        Ok(p)
    }

    /// Expected edge homophily for balanced blocks.
    pub fn expected_homophily(&self) -> f64 {
        let c = self.classes as f64;
        let m = self.n as f64 / c;
        let same = self.p_in * (m - 1.0);
        let diff = self.p_out * m * (c - 1.0);
        if same + diff == 0.0 {
            0.0
        } else {
            same / (same + diff)
        }
    }
}

/// Block-model graph with Gaussian features centred on the class axis
/// `e_{c mod dim}`, unit variance, and a default stratified split.
pub fn generate_sbm(params: &SbmParams) -> Result<Dataset> {
    let SbmParams { n, classes, p_in, p_out, dim, seed } = *params;
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::parameter(format!("{name} = {p} outside [0, 1]")));
        }
    }
    if classes == 0 || n < classes || dim == 0 {
        return Err(Error::parameter(format!("degenerate block model: n={n}, classes={classes}, dim={dim}")));
    }

    let labels: Vec<usize> = (0..n).map(|i| i * classes / n).collect();
    let mut rng = seed::rng(seed::derive(seed, &[0x5B]));
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    let (graph, _) = build_graph(n, &pairs)?;

    let mut x = Matrix::zeros(n, dim);
    for i in 0..n {
        let row = x.row_mut(i);
        for v in row.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        row[labels[i] % dim] += 1.0;
    }

    let splits = make_splits(&labels, DEFAULT_FRACTIONS, seed, true)?;
    Dataset::new(format!("sbm-n{n}-c{classes}"), graph, Features::Dense(x), labels, classes, splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_spec() {
        let p = SbmParams::parse("sbm:n=60,classes=3,p_in=0.2,p_out=0.01,dim=8,seed=4").unwrap();
        assert_eq!(p, SbmParams { n: 60, classes: 3, p_in: 0.2, p_out: 0.01, dim: 8, seed: 4 });
        assert!(SbmParams::parse("sbm:n=x").is_err());
        assert!(SbmParams::parse("sbm:size=3").is_err());
    }

    #[test]
    fn disconnected_blocks_are_fully_homophilous() {
        let d = generate_sbm(&SbmParams { p_out: 0.0, p_in: 0.2, ..Default::default() }).unwrap();
        assert!(d.graph.num_edges() > 0);
        assert_eq!(d.edge_homophily(), 1.0);
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(generate_sbm(&SbmParams { p_in: 1.5, ..Default::default() }).is_err());
        assert!(generate_sbm(&SbmParams { n: 1, classes: 2, ..Default::default() }).is_err());
    }

    #[test]
    fn deterministic() {
        let p = SbmParams { seed: 11, ..Default::default() };
        let (a, b) = (generate_sbm(&p).unwrap(), generate_sbm(&p).unwrap());
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.features.to_dense(), b.features.to_dense());
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::{sample_absent_pairs, Edge};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionStrategy {
    /// Absent pairs whose endpoints carry different labels.
    CrossClass,
    /// Any absent pair.
    Random,
}

impl fmt::Display for InjectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InjectionStrategy::CrossClass => "cross-class",
            InjectionStrategy::Random => "random",
        })
    }
}

impl FromStr for InjectionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "cross-class" | "crossclass" | "cross" => Ok(InjectionStrategy::CrossClass),
            "random" => Ok(InjectionStrategy::Random),
            other => Err(Error::parameter(format!("unknown injection strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionRecord {
    /// Injected pairs in canonical `(min, max)` form, sorted.
    pub edges: Vec<Edge>,
    pub rate: f64,
    pub seed: u64,
    pub strategy: InjectionStrategy,
}

impl InjectionRecord {
    pub fn contains(&self, e: Edge) -> bool {
        self.edges.binary_search(&e).is_ok()
    }
}

/// Add `⌊rate·K⌋` absent edges chosen uniformly under `strategy`.
pub fn inject_adversarial(
    d: &Dataset,
    rate: f64,
    strategy: InjectionStrategy,
    seed: u64,
) -> Result<(Dataset, InjectionRecord)> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::parameter(format!("injection rate {rate} must be positive")));
    }
    let count = (rate * d.graph.num_edges() as f64 + 1e-9).floor() as usize;
    let mut rng = seed::rng(seed::derive(seed, &[0x1A]));
    let labels = &d.labels;
    let mut edges = match strategy {
        InjectionStrategy::CrossClass => {
            sample_absent_pairs(&d.graph, count, &mut rng, |i, j| labels[i] != labels[j])?
        }
        InjectionStrategy::Random => sample_absent_pairs(&d.graph, count, &mut rng, |_, _| true)?,
    };
    edges.sort_unstable();
    let attacked = d.with_graph(d.graph.with_added_edges(&edges)?)?;
    Ok((attacked, InjectionRecord { edges, rate, seed, strategy }))
}

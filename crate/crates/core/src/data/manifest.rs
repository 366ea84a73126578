use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{generate_sbm, make_splits, Dataset, Features, SbmParams, DEFAULT_FRACTIONS};
use crate::error::{Error, Result};
use crate::graph::{read_edge_list, write_edge_list};
use crate::kernel::Matrix;

/// Tolerance when comparing measured homophily with the manifest's value.
const HOMOPHILY_TOLERANCE: f64 = 0.02;

/// Dataset description; file paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
    pub features: PathBuf,
    pub edges: PathBuf,
    pub labels: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_edges: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_homophily: Option<f64>,
}

/// Load a dataset from its manifest (or from a directory holding `manifest.json`).
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let path = if path.is_dir() { path.join("manifest.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: Manifest =
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.clone(), source })?;
    let dir = path.parent().unwrap_or(Path::new("."));

    let features = read_features(&dir.join(&m.features), m.num_nodes, m.num_features)?;
    let labels = read_labels(&dir.join(&m.labels), m.num_nodes, m.num_classes)?;
    let (graph, report) = read_edge_list(&dir.join(&m.edges), m.num_nodes)?;
    if report.self_loops_dropped + report.duplicates_dropped > 0 {
        log::info!(
            "{}: dropped {} self-loops and {} duplicate edges",
            m.name,
            report.self_loops_dropped,
            report.duplicates_dropped
        );
    }
    if let Some(k) = m.num_edges {
        if k != graph.num_edges() {
            return Err(Error::structural(format!(
                "{}: manifest declares {k} edges, edge list holds {}",
                m.name,
                graph.num_edges()
            )));
        }
    }
    let splits = make_splits(&labels, DEFAULT_FRACTIONS, 0, true)?;
    let d =
        Dataset::new(m.name.clone(), graph, Features::from_dense(features), labels, m.num_classes, splits)?;
    if let Some(h) = m.edge_homophily {
        let got = d.edge_homophily();
        if (got - h).abs() > HOMOPHILY_TOLERANCE {
            log::warn!("{}: edge homophily {got:.3} differs from declared {h:.3}", m.name);
        }
    }
    Ok(d)
}

/// A manifest path, a directory holding `manifest.json`, or an `sbm:` spec.
pub fn resolve_dataset(spec: &str) -> Result<Dataset> {
    if spec.trim_start().starts_with("sbm:") {
        generate_sbm(&SbmParams::parse(spec)?)
    } else if spec.trim().is_empty() {
        Err(Error::parameter("no dataset given"))
    } else {
        load_dataset(Path::new(spec.trim()))
    }
}

fn read_features(path: &Path, n: usize, d: usize) -> Result<Matrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut data = Vec::with_capacity(n * d);
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        if rows > n {
            return Err(parse_err(idx + 1, format!("more than the declared {n} feature rows")));
        }
        let before = data.len();
        for tok in line.split(',') {
            let v: f64 =
                tok.trim().parse().map_err(|_| parse_err(idx + 1, format!("bad feature value {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(idx + 1, format!("non-finite feature {tok:?}")));
            }
            data.push(v);
        }
        if data.len() - before != d {
            return Err(parse_err(
                idx + 1,
                format!("expected {d} feature columns, found {}", data.len() - before),
            ));
        }
    }
    if rows != n {
        return Err(Error::structural(format!(
            "{}: manifest declares {n} nodes but found {rows} feature rows",
            path.display()
        )));
    }
    Matrix::new(n, d, data)
}

fn read_labels(path: &Path, n: usize, c: usize) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::with_capacity(n);
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let y: usize = t.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: format!("bad label {t:?}"),
        })?;
        if y >= c {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("label {y} outside [0, {c})"),
            });
        }
        labels.push(y);
    }
    if labels.len() != n {
        return Err(Error::structural(format!(
            "{}: manifest declares {n} nodes but found {} labels",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels)
}

/// Write `d` as `manifest.json`, `features.csv`, `edges.txt` and `labels.txt` under `dir`.
pub fn write_dataset(d: &Dataset, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let x = d.features.to_dense();
    let mut csv = String::with_capacity(x.rows() * x.cols() * 2);
    for i in 0..x.rows() {
        for (j, v) in x.row(i).iter().enumerate() {
            if j > 0 {
                csv.push(',');
            }
            write!(csv, "{v}").unwrap();
        }
        csv.push('\n');
    }
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    write("features.csv", &csv)?;
    let labels: String = d.labels.iter().map(|y| format!("{y}\n")).collect();
    write("labels.txt", &labels)?;
    write_edge_list(&d.graph, &dir.join("edges.txt"))?;

    let m = Manifest {
        name: d.name.clone(),
        num_nodes: d.num_nodes(),
        num_features: d.num_features(),
        num_classes: d.num_classes,
        features: "features.csv".into(),
        edges: "edges.txt".into(),
        labels: "labels.txt".into(),
        num_edges: Some(d.graph.num_edges()),
        edge_homophily: Some(d.edge_homophily()),
    };
    let path = dir.join("manifest.json");
    let json =
        serde_json::to_string_pretty(&m).map_err(|source| Error::Json { path: path.clone(), source })?;
    write("manifest.json", &json)?;
    Ok(path)
}

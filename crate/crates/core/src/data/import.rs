//! Converters from published raw formats to the manifest layout.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use super::{make_splits, write_dataset, Dataset, Features, DEFAULT_FRACTIONS};
use crate::error::{Error, Result};
use crate::graph::build_graph;
use crate::kernel::Matrix;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

/// Convert the tab-separated node/edge files used for the WebKB and Actor
/// benchmarks (`out1_node_feature_label.txt`, `out1_graph_edges.txt`).
///
/// Feature cells hold either a dense comma list or, when `feature_dim` is
/// given and a row is shorter, the indices of the non-zero columns.
pub fn import_geom_gcn(
    raw_dir: &Path,
    name: &str,
    out_dir: &Path,
    feature_dim: Option<usize>,
) -> Result<PathBuf> {
    let nodes_path = raw_dir.join("out1_node_feature_label.txt");
    let edges_path = raw_dir.join("out1_graph_edges.txt");
    let node_text = read(&nodes_path)?;

    let mut rows: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    let mut index_rows = false;
    for (idx, line) in node_text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 3 {
            return Err(parse_err(&nodes_path, idx + 1, "expected node_id, feature, label"));
        }
        let id: usize =
            cells[0].trim().parse().map_err(|_| parse_err(&nodes_path, idx + 1, "bad node id"))?;
        let label: usize =
            cells[2].trim().parse().map_err(|_| parse_err(&nodes_path, idx + 1, "bad label"))?;
        let values = cells[1]
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|_| parse_err(&nodes_path, idx + 1, "bad feature value"))?;
        if let Some(d) = feature_dim {
            if values.len() != d {
                index_rows = true;
            }
        }
        rows.push((id, values, label));
    }
    rows.sort_by_key(|r| r.0);
    let n = rows.len();
    if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
        return Err(Error::structural(format!("{}: node ids are not 0..{n}", nodes_path.display())));
    }

    let d = match feature_dim {
        Some(d) => d,
        None => rows.first().map_or(0, |r| r.1.len()),
    };
    let mut x = Matrix::zeros(n, d);
    for (i, (_, values, _)) in rows.iter().enumerate() {
        if index_rows {
            for &c in values {
                let c = c as usize;
                if c >= d {
                    return Err(Error::structural(format!("node {i}: feature index {c} >= {d}")));
                }
                x.set(i, c, 1.0);
            }
        } else {
            if values.len() != d {
                return Err(Error::structural(format!(
                    "node {i}: {} feature columns, expected {d}",
                    values.len()
                )));
            }
            x.row_mut(i).copy_from_slice(values);
        }
    }
    let labels: Vec<usize> = rows.iter().map(|r| r.2).collect();

    let edge_text = read(&edges_path)?;
    let mut pairs = Vec::new();
    for (idx, line) in edge_text.lines().enumerate().skip(1) {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.is_empty() {
            continue;
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| parse_err(&edges_path, idx + 1, "bad node id"));
        if t.len() != 2 {
            return Err(parse_err(&edges_path, idx + 1, "expected two node ids"));
        }
        pairs.push((parse(t[0])?, parse(t[1])?));
    }
    finish(name, n, pairs, x, labels, out_dir)
}

/// Convert the `<name>.content` / `<name>.cites` citation format. Class
/// names are numbered in sorted order; citations naming unknown papers are
/// skipped.
pub fn import_linqs(content: &Path, cites: &Path, name: &str, out_dir: &Path) -> Result<PathBuf> {
    let text = read(content)?;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut feats: Vec<Vec<f64>> = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.is_empty() {
            continue;
        }
        if t.len() < 3 {
            return Err(parse_err(content, idx + 1, "expected id, features and class"));
        }
        let values = t[1..t.len() - 1]
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|_| parse_err(content, idx + 1, "bad feature value"))?;
        if feats.first().is_some_and(|f| f.len() != values.len()) {
            return Err(parse_err(content, idx + 1, "feature width differs from the first row"));
        }
        if ids.insert(t[0].to_string(), feats.len()).is_some() {
            return Err(parse_err(content, idx + 1, format!("duplicate paper id {}", t[0])));
        }
        feats.push(values);
        class_names.push(t[t.len() - 1].to_string());
    }
    let classes: Vec<&String> = class_names.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let labels: Vec<usize> =
        class_names.iter().map(|c| classes.binary_search(&c).expect("class collected above")).collect();
    let n = feats.len();
    let d = feats.first().map_or(0, Vec::len);
    let x = Matrix::new(n, d, feats.concat())?;

    let cite_text = read(cites)?;
    let mut pairs = Vec::new();
    let mut unknown = 0usize;
    for line in cite_text.lines() {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 2 {
            continue;
        }
        match (ids.get(t[0]), ids.get(t[1])) {
            (Some(&a), Some(&b)) => pairs.push((a, b)),
            _ => unknown += 1,
        }
    }
    if unknown > 0 {
        log::warn!("{name}: skipped {unknown} citations naming unknown papers");
    }
    finish(name, n, pairs, x, labels, out_dir)
}

fn finish(
    name: &str,
    n: usize,
    pairs: Vec<(usize, usize)>,
    x: Matrix,
    labels: Vec<usize>,
    out_dir: &Path,
) -> Result<PathBuf> {
    let (graph, report) = build_graph(n, &pairs)?;
    log::info!(
        "{name}: {n} nodes, {} edges ({} self-loops, {} duplicates dropped)",
        graph.num_edges(),
        report.self_loops_dropped,
        report.duplicates_dropped
    );
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let splits = make_splits(&labels, DEFAULT_FRACTIONS, 0, true)?;
    let d = Dataset::new(name, graph, Features::from_dense(x), labels, classes, splits)?;
    write_dataset(&d, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::load_dataset;

    #[test]
    fn geom_gcn_dense_and_index_rows() {
        let raw = tempfile::tempdir().unwrap();
        std::fs::write(
            raw.path().join("out1_node_feature_label.txt"),
            "node_id\tfeature\tlabel\n1\t0,1,0,0\t1\n0\t1,0,0,1\t0\n2\t0,0,1,0\t1\n",
        )
        .unwrap();
        std::fs::write(raw.path().join("out1_graph_edges.txt"), "node_id\tnode_id\n0\t1\n1\t0\n1\t2\n2\t2\n")
            .unwrap();
        let out = tempfile::tempdir().unwrap();
        let m = import_geom_gcn(raw.path(), "toy", out.path(), None).unwrap();
        let d = load_dataset(&m).unwrap();
        assert_eq!(d.graph.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(d.labels, vec![0, 1, 1]);
        assert_eq!(d.features.to_dense().row(0), &[1.0, 0.0, 0.0, 1.0]);

        std::fs::write(
            raw.path().join("out1_node_feature_label.txt"),
            "node_id\tfeature\tlabel\n0\t0,3\t0\n1\t2\t1\n2\t1\t0\n",
        )
        .unwrap();
        let m = import_geom_gcn(raw.path(), "toy", out.path(), Some(5)).unwrap();
        let d = load_dataset(&m).unwrap();
        assert_eq!(d.features.to_dense().row(0), &[1.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn linqs_format() {
        let raw = tempfile::tempdir().unwrap();
        let content = raw.path().join("toy.content");
        let cites = raw.path().join("toy.cites");
        std::fs::write(&content, "p9\t1\t0\tTheory\np2\t0\t1\tAI\np5\t1\t1\tTheory\n").unwrap();
        std::fs::write(&cites, "p9\tp2\np2\tp5\np2\tmissing\n").unwrap();
        let out = tempfile::tempdir().unwrap();
        let d = load_dataset(&import_linqs(&content, &cites, "toy", out.path()).unwrap()).unwrap();
        assert_eq!(d.labels, vec![1, 0, 1]);
        assert_eq!(d.graph.edges(), &[(0, 1), (1, 2)]);
    }
}

//! Plain-text edge lists: one `u v [w]` line per undirected edge,
//! zero-indexed, whitespace separated. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::path::Path;

use super::{build_weighted_graph, BuildReport, Graph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeLine {
    pub u: usize,
    pub v: usize,
    pub weight: Option<f64>,
}

pub fn parse_edge_list(text: &str, path: &Path) -> Result<Vec<EdgeLine>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { path: path.to_path_buf(), line: lineno + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(err(format!("expected `u v [w]`, found {} fields", fields.len())));
        }
        let node = |s: &str| s.parse::<usize>().map_err(|e| err(format!("bad node id {s:?}: {e}")));
        let weight = match fields.get(2) {
            Some(s) => Some(s.parse::<f64>().map_err(|e| err(format!("bad weight {s:?}: {e}")))?),
            None => None,
        };
        out.push(EdgeLine { u: node(fields[0])?, v: node(fields[1])?, weight });
    }
    Ok(out)
}

pub fn read_edge_list(path: &Path, num_nodes: usize) -> Result<(Graph, BuildReport)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines = parse_edge_list(&text, path)?;
    build_weighted_graph(num_nodes, lines.iter().map(|l| (l.u, l.v, l.weight.unwrap_or(1.0))))
}

/// Write `g` as an edge list. Unit weights are omitted.
pub fn write_edge_list(g: &Graph, path: &Path) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "# nodes {} edges {}", g.num_nodes(), g.num_edges()).unwrap();
    for (&(i, j), &w) in g.edges().iter().zip(g.weights()) {
        if w == 1.0 {
            writeln!(s, "{i} {j}").unwrap();
        } else {
            writeln!(s, "{i} {j} {w:?}").unwrap();
        }
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_weights() {
        let text = "# header\n0 1\n\n1 2 0.25\n";
        let lines = parse_edge_list(text, Path::new("x")).unwrap();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].weight, Some(0.25));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_edge_list("0 1\n0 x\n", Path::new("edges.txt")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(parse_edge_list("0 1 2 3\n", Path::new("e")).is_err());
    }
}

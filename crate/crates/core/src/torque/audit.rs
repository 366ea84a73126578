use std::fmt::Write as _;
use std::path::Path;

use super::{EdgeScoreTable, RewirePlan};
use crate::error::{Error, Result};

pub const AUDIT_HEADER: &str = "edge_id,i,j,D,E,T,removed,added_weight";

/// One line of the per-layer rewiring dump.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub edge_id: usize,
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub energy: f64,
    pub torque: f64,
    pub removed: bool,
    /// Gumbel weight for added candidates, `0` for scored edges.
    pub added_weight: f64,
}

/// Rows for every scored edge followed by every added candidate.
pub fn audit_rows(table: Option<&EdgeScoreTable>, plan: &RewirePlan) -> Vec<AuditRow> {
    let mut rows = Vec::new();
    if let Some(table) = table {
        let removed: std::collections::HashSet<_> = plan.removed.iter().copied().collect();
        for (id, e) in table.edges().iter().enumerate() {
            rows.push(AuditRow {
                edge_id: id,
                i: e.edge.0,
                j: e.edge.1,
                distance: e.distance,
                energy: e.energy,
                torque: e.torque,
                removed: removed.contains(&e.edge),
                added_weight: 0.0,
            });
        }
    }
    let base = rows.len();
    for (k, c) in plan.added.iter().enumerate() {
        rows.push(AuditRow {
            edge_id: base + k,
            i: c.edge.0,
            j: c.edge.1,
            distance: c.distance,
            energy: c.energy,
            torque: c.torque,
            removed: false,
            added_weight: c.p_select,
        });
    }
    rows
}

pub fn write_audit_csv(rows: &[AuditRow], path: &Path) -> Result<()> {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(AUDIT_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.edge_id, r.i, r.j, r.distance, r.energy, r.torque, r.removed, r.added_weight
        )
        .unwrap();
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

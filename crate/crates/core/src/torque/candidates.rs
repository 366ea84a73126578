use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{canonical, Edge, SparseMatrix};
use crate::kernel::Matrix;

/// Rows per similarity block; bounds the dense `N×N` buffer on larger graphs.
const BLOCK: usize = 512;

/// Candidate links: for every node, its `t` most cosine-similar peers that
/// are neither itself nor already adjacent in `existing`. Ties go to the
/// smaller node id. Returned as sorted, deduplicated canonical pairs.
pub fn build_candidates(reps: &Matrix, existing: &SparseMatrix, t: usize) -> Result<Vec<Edge>> {
    let n = reps.rows();
    if t == 0 || t >= n {
        return Err(Error::parameter(format!("candidate count t = {t} must be in [1, {n})")));
    }
    if existing.rows() != n {
        return Err(Error::structural(format!(
            "existing matrix has {} rows, representations have {n}",
            existing.rows()
        )));
    }
    let norms: Vec<f64> = (0..n).map(|i| reps.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut unit = reps.clone();
    for (i, &norm) in norms.iter().enumerate() {
        let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        unit.row_mut(i).iter_mut().for_each(|v| *v *= scale);
    }

    let starts: Vec<usize> = (0..n).step_by(BLOCK).collect();
    let per_block: Vec<Vec<Edge>> = starts
        .par_iter()
        .map(|&start| -> Result<Vec<Edge>> {
            let end = (start + BLOCK).min(n);
            let rows: Vec<f64> = unit.as_slice()[start * unit.cols()..end * unit.cols()].to_vec();
            let block = Matrix::new(end - start, unit.cols(), rows)?;
            let sims = block.matmul_t(&unit)?;
            let mut out = Vec::with_capacity((end - start) * t);
            let mut pool: Vec<(f64, usize)> = Vec::with_capacity(n);
            for local in 0..(end - start) {
                let i = start + local;
                pool.clear();
                pool.extend(
                    sims.row(local)
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i && !existing.contains(i, j))
                        .map(|(j, &s)| (s, j)),
                );
                let take = t.min(pool.len());
                if take == 0 {
                    continue;
                }
                if take < pool.len() {
                    pool.select_nth_unstable_by(take - 1, rank);
                }
                out.extend(pool[..take].iter().map(|&(_, j)| canonical(i, j)));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let set: BTreeSet<Edge> = per_block.into_iter().flatten().collect();
    Ok(set.into_iter().collect())
}

/// Higher similarity first, then smaller node id.
fn rank(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

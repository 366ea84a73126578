use std::sync::Arc;

use super::{LayerSummary, ModelState, PropagationStack};
use crate::config::ExperimentConfig;
use crate::data::Features;
use crate::error::{Error, Result};
#[cfg(test)]
use crate::graph::{add_self_loops, sym_normalize};
use crate::graph::{Graph, SparseMatrix};
use crate::kernel::{dropout_mask, relu, Matrix, Tape, Var};
use crate::seed;
use crate::torque::{
    build_candidates, gumbel_select, rewire_layer, score_layer, EdgeScoreTable, LayerScorer, RewirePlan,
    Variant,
};

const TAG_DROPOUT: u64 = 0xD0;
const TAG_GUMBEL: u64 = 0x6B;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardOptions {
    /// Dropout and Gumbel noise are active.
    pub training: bool,
    pub seed: u64,
    /// Keep each layer's score table and rewiring plan.
    pub trace: bool,
}

impl ForwardOptions {
    pub fn inference() -> Self {
        ForwardOptions { training: false, seed: 0, trace: false }
    }
}

/// Scores and plan of one rewired layer.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub table: Option<EdgeScoreTable>,
    pub plan: RewirePlan,
}

#[derive(Debug)]
pub struct TapeForward {
    pub h0: Var,
    pub logits: Var,
    pub stack: PropagationStack,
    /// Filled when tracing a rewiring pass.
    pub traces: Vec<LayerTrace>,
}

/// `ReLU(dropout(X)·Θ)` recorded on the tape. Sparse inputs use the same
/// dropout mask restricted to their stored entries.
pub fn initial_transform_on_tape(
    tape: &mut Tape,
    x: &Features,
    theta: Var,
    dropout_rate: f64,
    training: bool,
    seed: u64,
) -> Result<Var> {
    let mask = if training && dropout_rate > 0.0 {
        Some(dropout_mask(x.rows(), x.cols(), dropout_rate, seed)?)
    } else {
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::parameter(format!("dropout rate {dropout_rate} outside [0, 1)")));
        }
        None
    };
    let z = match x {
        Features::Dense(m) => {
            let xv = tape.constant(m.clone());
            let xv = match mask {
                Some(mask) => tape.mask(xv, Arc::new(mask))?,
                None => xv,
            };
            tape.matmul(xv, theta)?
        }
        Features::Sparse(s) => {
            let s = match mask {
                Some(mask) => Arc::new(s.map_values(|i, j, v| v * mask.get(i, j))),
                None => Arc::clone(s),
            };
            tape.spmm(s, theta)?
        }
    };
    Ok(tape.relu(z))
}

pub fn initial_transform(
    x: &Matrix,
    model: &ModelState,
    dropout_rate: f64,
    training: bool,
    seed: u64,
) -> Result<Matrix> {
    let mut tape = Tape::new();
    let theta = tape.constant(model.theta.clone());
    let h = initial_transform_on_tape(
        &mut tape,
        &Features::Dense(x.clone()),
        theta,
        dropout_rate,
        training,
        seed,
    )?;
    Ok(tape.value(h).clone())
}

/// `ReLU(α·(𝒜·H_prev) + (1-α)·H⁰)` on the tape.
pub fn propagate_on_tape(
    tape: &mut Tape,
    a_layer: Arc<SparseMatrix>,
    h_prev: Var,
    h0: Var,
    alpha: f64,
) -> Result<Var> {
    let ah = tape.spmm(a_layer, h_prev)?;
    let ah = tape.scale(ah, alpha);
    let res = tape.scale(h0, 1.0 - alpha);
    let s = tape.add(ah, res)?;
    Ok(tape.relu(s))
}

pub fn propagate_layer(h_prev: &Matrix, h0: &Matrix, a_layer: &SparseMatrix, alpha: f64) -> Result<Matrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::parameter(format!("alpha {alpha} outside [0, 1]")));
    }
    let ah = a_layer.spmm(h_prev)?.scale(alpha);
    let s = ah.zip_map(&h0.scale(1.0 - alpha), |a, b| a + b)?;
    Ok(relu(&s))
}

/// Full forward pass. With `frozen` set, its matrices are used as-is;
/// otherwise every layer is rewired from the current representations.
#[allow(clippy::too_many_arguments)]
pub fn forward_on_tape(
    tape: &mut Tape,
    theta: Var,
    phi: Var,
    x: &Features,
    graph: &Graph,
    cfg: &ExperimentConfig,
    opts: &ForwardOptions,
    frozen: Option<&PropagationStack>,
) -> Result<TapeForward> {
    let depth = cfg.layers;
    if depth == 0 {
        return Err(Error::parameter("at least one layer is required"));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::parameter(format!("alpha {} outside [0, 1]", cfg.alpha)));
    }
    let n = graph.num_nodes();
    if x.rows() != n {
        return Err(Error::structural(format!("{} feature rows for {n} nodes", x.rows())));
    }
    if let Some(st) = frozen {
        if st.depth() != depth {
            return Err(Error::structural(format!(
                "frozen stack has {} layers, config asks for {depth}",
                st.depth()
            )));
        }
    }

    let h0 = initial_transform_on_tape(
        tape,
        x,
        theta,
        cfg.dropout,
        opts.training,
        seed::derive(opts.seed, &[TAG_DROPOUT]),
    )?;

    let mut h = h0;
    let mut traces = Vec::new();
    let stack = match frozen {
        Some(st) => {
            for a in &st.layers {
                h = propagate_on_tape(tape, Arc::clone(a), h, h0, cfg.alpha)?;
            }
            st.clone()
        }
        None if cfg.variant == Variant::None => {
            let st = PropagationStack::backbone(graph, depth)?;
            for a in &st.layers {
                h = propagate_on_tape(tape, Arc::clone(a), h, h0, cfg.alpha)?;
            }
            st
        }
        None => {
            let mut support = graph.adjacency();
            let mut st = PropagationStack {
                layers: Vec::with_capacity(depth),
                adjacency: Vec::with_capacity(depth),
                summaries: Vec::with_capacity(depth),
            };
            for layer in 1..=depth {
                let (table, plan) = rewire_from(
                    tape.value(h),
                    tape.value(phi),
                    &support,
                    cfg,
                    opts.training,
                    seed::derive(opts.seed, &[layer as u64, TAG_GUMBEL]),
                )?;
                let edges_in = support.undirected_edge_count();
                st.summaries.push(LayerSummary {
                    layer,
                    edges_in,
                    cutoff: plan.cutoff,
                    removed: plan.removed.len(),
                    added: plan.added.len(),
                    edges_out: plan.edge_count(),
                    fell_back: plan.fell_back,
                });
                let matrix = Arc::new(plan.matrix.clone());
                support = plan.adjacency.clone();
                st.layers.push(Arc::clone(&matrix));
                st.adjacency.push(plan.adjacency.clone());
                if opts.trace {
                    traces.push(LayerTrace { table, plan });
                }
                h = propagate_on_tape(tape, matrix, h, h0, cfg.alpha)?;
            }
            st
        }
    };
    let logits = tape.matmul(h, phi)?;
    Ok(TapeForward { h0, logits, stack, traces })
}

/// Score, cut and extend one layer's support.
fn rewire_from(
    h: &Matrix,
    phi: &Matrix,
    support: &SparseMatrix,
    cfg: &ExperimentConfig,
    training: bool,
    gumbel_seed: u64,
) -> Result<(Option<EdgeScoreTable>, RewirePlan)> {
    let variant = cfg.variant;
    let logits = h.matmul(phi)?;
    let table = if variant.removes() && support.undirected_edge_count() > 0 {
        Some(score_layer(h, &logits, support)?)
    } else {
        None
    };
    let n = support.rows();
    let additions = if variant.adds() && n > 1 {
        let t = cfg.candidates.min(n - 1);
        let cands = build_candidates(h, support, t)?;
        let scored = LayerScorer::new(h, &logits)?.score_all(&cands);
        gumbel_select(&scored, cfg.tau, cfg.sample_ratio, gumbel_seed, training)?
    } else {
        Vec::new()
    };
    let plan = rewire_layer(support, table.as_ref(), &additions, variant, cfg.delta)?;
    Ok((table, plan))
}

/// Logits and stack without gradient bookkeeping.
pub fn forward(
    x: &Features,
    graph: &Graph,
    model: &ModelState,
    cfg: &ExperimentConfig,
    training: bool,
    seed: u64,
) -> Result<(Matrix, PropagationStack)> {
    let mut tape = Tape::new();
    let theta = tape.constant(model.theta.clone());
    let phi = tape.constant(model.phi.clone());
    let opts = ForwardOptions { training, seed, trace: false };
    let out = forward_on_tape(&mut tape, theta, phi, x, graph, cfg, &opts, None)?;
    Ok((tape.value(out.logits).clone(), out.stack))
}

/// Inference logits over a fixed stack.
pub fn forward_frozen(
    x: &Features,
    graph: &Graph,
    model: &ModelState,
    cfg: &ExperimentConfig,
    stack: &PropagationStack,
) -> Result<Matrix> {
    let mut tape = Tape::new();
    let theta = tape.constant(model.theta.clone());
    let phi = tape.constant(model.phi.clone());
    let out =
        forward_on_tape(&mut tape, theta, phi, x, graph, cfg, &ForwardOptions::inference(), Some(stack))?;
    Ok(tape.value(out.logits).clone())
}

/// Inference propagation of a fixed `H⁰` through `stack`, returning logits.
pub fn propagate_stack(h0: &Matrix, phi: &Matrix, stack: &PropagationStack, alpha: f64) -> Result<Matrix> {
    let mut h = h0.clone();
    for a in &stack.layers {
        h = propagate_layer(&h, h0, a, alpha)?;
    }
    h.matmul(phi)
}

/// Torque table of the input graph scored from `H⁰` at inference.
pub fn first_layer_table(x: &Features, graph: &Graph, model: &ModelState) -> Result<EdgeScoreTable> {
    let mut tape = Tape::new();
    let theta = tape.constant(model.theta.clone());
    let h0 = initial_transform_on_tape(&mut tape, x, theta, 0.0, false, 0)?;
    let h = tape.value(h0);
    let logits = h.matmul(&model.phi)?;
    score_layer(h, &logits, &graph.adjacency())
}

#[cfg(test)]
fn normalized(graph: &Graph) -> Result<SparseMatrix> {
    sym_normalize(&add_self_loops(&graph.adjacency())?)
}

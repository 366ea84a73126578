use std::sync::Arc;

use super::ops::{self, softmax_rows};
use super::Matrix;
use crate::error::{Error, Result};
use crate::graph::SparseMatrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// Sparse operand is a constant; gradient flows to the dense side only.
    SpMM(Arc<SparseMatrix>, Var),
    Relu(Var),
    /// Elementwise product with a constant (dropout masks).
    Mask(Var, Arc<Matrix>),
    Add(Var, Var),
    Scale(Var, f64),
    LogSumExpRows(Var),
    SoftmaxXent {
        logits: Var,
        grad: Matrix,
    },
    /// Scalar computed outside the tape with a known gradient w.r.t. `input`.
    Custom {
        input: Var,
        grad: Matrix,
    },
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    /// Some ancestor is a trainable leaf.
    needs_grad: bool,
}

/// Record of primitive applications for one forward pass.
///
/// Nodes are appended in evaluation order, so a reverse sweep over the
/// node list is a valid topological order for the backward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients indexed by [`Var`]; `None` for nodes the loss does not reach.
#[derive(Debug)]
pub struct Gradients(Vec<Option<Matrix>>);

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.0.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, or zeros shaped like `like` when the loss does not depend on it.
    pub fn get_or_zeros(&self, v: Var, like: &Matrix) -> Matrix {
        self.get(v).cloned().unwrap_or_else(|| Matrix::zeros(like.rows(), like.cols()))
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        let needs_grad = match &op {
            Op::Leaf => true,
            Op::MatMul(a, b) | Op::Add(a, b) => self.needs(*a) || self.needs(*b),
            Op::SpMM(_, a) | Op::Relu(a) | Op::Mask(a, _) | Op::Scale(a, _) | Op::LogSumExpRows(a) => {
                self.needs(*a)
            }
            Op::SoftmaxXent { logits, .. } => self.needs(*logits),
            Op::Custom { input, .. } => self.needs(*input),
        };
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    #[inline]
    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// Scalar value of a `1×1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v).get(0, 0)
    }

    /// Trainable input; receives a gradient.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Input that never needs a gradient (features, fixed weights).
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, needs_grad: false });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn spmm(&mut self, s: Arc<SparseMatrix>, d: Var) -> Result<Var> {
        let out = s.spmm(self.value(d))?;
        Ok(self.push(out, Op::SpMM(s, d)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = ops::relu(self.value(a));
        self.push(out, Op::Relu(a))
    }

    pub fn mask(&mut self, a: Var, mask: Arc<Matrix>) -> Result<Var> {
        let out = self.value(a).zip_map(&mask, |x, m| x * m)?;
        Ok(self.push(out, Op::Mask(a, mask)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), |x, y| x + y)?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).scale(s);
        self.push(out, Op::Scale(a, s))
    }

    pub fn logsumexp_rows(&mut self, a: Var) -> Result<Var> {
        let out = ops::logsumexp_rows(self.value(a))?;
        Ok(self.push(out, Op::LogSumExpRows(a)))
    }

    pub fn softmax_xent(&mut self, logits: Var, labels: &[usize], mask: &[usize]) -> Result<Var> {
        let (loss, grad) = ops::softmax_xent(self.value(logits), labels, mask)?;
        Ok(self.push(Matrix::filled(1, 1, loss), Op::SoftmaxXent { logits, grad }))
    }

    /// Record a scalar whose gradient w.r.t. `input` was computed by the caller.
    pub fn custom_scalar(&mut self, input: Var, value: f64, grad: Matrix) -> Result<Var> {
        if grad.shape() != self.value(input).shape() {
            return Err(Error::structural(format!(
                "custom gradient shape {:?} does not match input {:?}",
                grad.shape(),
                self.value(input).shape()
            )));
        }
        Ok(self.push(Matrix::filled(1, 1, value), Op::Custom { input, grad }))
    }

    /// Reverse sweep from a scalar `loss` node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::structural("backward needs a 1x1 loss"));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));

        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            if !node.needs_grad {
                grads[id] = Some(g);
                continue;
            }
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, *a, g.matmul_t(self.value(*b))?)?;
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, *b, self.value(*a).t_matmul(&g)?)?;
                    }
                }
                Op::SpMM(s, d) => accumulate(&mut grads, *d, s.transpose_spmm(&g)?)?,
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let ga = g.zip_map(x, |gv, xv| if xv > 0.0 { gv } else { 0.0 })?;
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::Mask(a, m) => accumulate(&mut grads, *a, g.zip_map(m, |gv, mv| gv * mv)?)?,
                Op::Add(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, *a, g.clone())?;
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, *b, g.clone())?;
                    }
                }
                Op::Scale(a, s) => accumulate(&mut grads, *a, g.scale(*s))?,
                Op::LogSumExpRows(a) => {
                    let mut sm = softmax_rows(self.value(*a));
                    for i in 0..sm.rows() {
                        let gi = g.get(i, 0);
                        sm.row_mut(i).iter_mut().for_each(|v| *v *= gi);
                    }
                    accumulate(&mut grads, *a, sm)?;
                }
                Op::SoftmaxXent { logits, grad } => accumulate(&mut grads, *logits, grad.scale(g.get(0, 0)))?,
                Op::Custom { input, grad } => accumulate(&mut grads, *input, grad.scale(g.get(0, 0)))?,
            }
            grads[id] = Some(g);
        }
        Ok(Gradients(grads))
    }
}

fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: Matrix) -> Result<()> {
    match &mut grads[v.0] {
        Some(existing) => existing.add_scaled(&g, 1.0),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_gradient_rules() {
        let mut t = Tape::new();
        let a = t.leaf(Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
        let b = t.leaf(Matrix::column(&[0.5, -1.0]));
        let y = t.matmul(a, b).unwrap();
        let lse = t.logsumexp_rows(y).unwrap();
        let w = t.leaf(Matrix::from_rows(&[[1.0, 1.0]]).unwrap());
        let loss = t.matmul(w, lse).unwrap();
        let g = t.backward(loss).unwrap();
        // d loss / d y = ones (logsumexp of a single column is the identity).
        let gy = g.get(y).unwrap();
        assert_eq!(gy.as_slice(), &[1.0, 1.0]);
        assert_eq!(g.get(b).unwrap().as_slice(), &[4.0, 6.0]);
        assert_eq!(g.get(a).unwrap().as_slice(), &[0.5, -1.0, 0.5, -1.0]);
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::from_rows(&[[1.0, 2.0]]).unwrap());
        let w = t.leaf(Matrix::column(&[3.0, 4.0]));
        let y = t.matmul(x, w).unwrap();
        let g = t.backward(y).unwrap();
        assert_eq!(g.get(w).unwrap().as_slice(), &[1.0, 2.0]);
        assert!(g.get(x).is_none());
    }

    #[test]
    fn relu_gradient_masks_negatives() {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::from_rows(&[[-0.5, 0.5]]).unwrap());
        let r = t.relu(x);
        let s = t.leaf(Matrix::column(&[3.0, 7.0]));
        let loss = t.matmul(r, s).unwrap();
        let g = t.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap().as_slice(), &[0.0, 7.0]);
    }

    #[test]
    fn unreached_nodes_have_no_gradient() {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::filled(1, 1, 2.0));
        let unused = t.leaf(Matrix::filled(1, 1, 5.0));
        let y = t.scale(x, 3.0);
        let g = t.backward(y).unwrap();
        assert_eq!(g.get(x).unwrap().get(0, 0), 3.0);
        assert!(g.get(unused).is_none());
        let not_scalar = t.leaf(Matrix::zeros(2, 1));
        assert!(t.backward(not_scalar).is_err());
    }
}

//! Dense matrices and a small reverse-mode gradient tape.
//!
//! The tape only knows the handful of primitives the classifier needs:
//! dense and sparse products, ReLU, dropout masks, affine mixing,
//! row-wise log-sum-exp and the cross-entropy loss.

mod gradcheck;
mod matrix;
pub(crate) mod ops;
mod optim;
mod tape;

pub use gradcheck::{check_gradients, GradCheck};
pub use matrix::Matrix;
pub use ops::{dropout, dropout_mask, logsumexp_rows, relu, softmax_rows, softmax_xent};
pub use optim::Adam;
pub use tape::{Gradients, Tape, Var};

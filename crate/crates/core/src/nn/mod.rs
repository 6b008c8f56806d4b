//! Differentiable building blocks with hand-written backward passes.
//!
//! Only the operations the classifier zoo needs are provided: affine layers,
//! sigmoid/ReLU, softmax with cross-entropy, inverted dropout and an LSTM.
//! Every op is generic over [`Real`] so the same code runs in `f32` for
//! training and `f64` for gradient verification.

pub mod activation;
pub mod checkpoint;
pub mod dense;
pub mod dropout;
pub mod gradcheck;
pub mod init;
mod linalg;
pub mod lstm;
pub mod real;
pub mod softmax;
pub mod tensor;
pub mod verify;

pub use activation::Activation;
pub use dense::Dense;
pub use dropout::{dropout, DropoutMask, Mode};
pub use gradcheck::{grad_check, GradCheck};
pub use lstm::{LstmCache, LstmCell};
pub use real::{Precision, Real};
pub use softmax::{cross_entropy, one_hot, softmax, softmax_cross_entropy_backward};
pub use tensor::{Parameter, Tensor};

//! Dense matrices, differentiable primitives, Adam and gradient checking.

mod gradcheck;
pub mod ops;
mod params;
mod rng;
mod tensor;

pub use gradcheck::{finite_diff_check, GradCheck};
pub use ops::{conv_seq, relu_scalar, sigmoid, sigmoid_scalar, softmax_rows};
pub use params::{adam_step, Adam, ParamStore, Slot};
pub use rng::{streams, RngStream};
pub use tensor::{axpy, dot, Tensor2D};

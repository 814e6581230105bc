//! Dense tensors, feedforward networks, optimizers and parameter maintenance.

mod checkpoint;
mod gradcheck;
mod mlp;
mod optim;
mod params;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use gradcheck::{grad_check, GradCheckReport};
pub use mlp::{Activation, Mlp, MlpTape};
pub use optim::{OptimKind, OptimState};
pub use params::{polyak_update, Param, ParamSet};
pub use tensor::Tensor;

pub(crate) use tensor::{axpy, dot};

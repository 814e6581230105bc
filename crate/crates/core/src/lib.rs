//! Spiking actor networks for continuous control.
//!
//! The crate trains spiking actor networks (population encoder, LIF/CLIF
//! hidden layers, non-firing membrane decoder) with surrogate-gradient
//! backpropagation through time inside TD3. The target actor can be a Polyak
//! copy of the online network or a continuous proxy network that is fitted
//! to the spiking actor's outputs by gradient descent.
//!
//! All numerical code is generic over [`Scalar`] (`f32` / `f64`); the
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! training loop and command-line tools use.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod envs;
mod error;
pub mod nn;
pub mod rl;
mod scalar;
pub mod seeding;
pub mod snn;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor = nn::Tensor<f64>;
pub type Tensor32 = nn::Tensor<f32>;
pub type ParamSet = nn::ParamSet<f64>;
pub type ParamSet32 = nn::ParamSet<f32>;
pub type Mlp = nn::Mlp<f64>;
pub type Mlp32 = nn::Mlp<f32>;
pub type OptimState = nn::OptimState<f64>;
pub type San = snn::San<f64>;
pub type San32 = snn::San<f32>;
pub type SanState = snn::SanState<f64>;



pub type Actor = rl::Actor<f64>;
pub type Agent = rl::Agent<f64>;
pub type Agent32 = rl::Agent<f32>;

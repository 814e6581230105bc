//! Spiking neurons, surrogate gradients, population coding and the spiking actor network.

mod coding;
mod neuron;
mod san;

pub use coding::{decode, encode, encode_backward};
pub use neuron::{clif_step, lif_step, surrogate_grad, ClifParams, LifParams, NeuronStep, SurrogateSpec};
pub use san::{NeuronKind, PopulationTrace, SampleTrace, San, SanConfig, SanState};

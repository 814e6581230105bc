use serde::{Deserialize, Serialize};

use crate::nn::Tensor;
use crate::{Error, Result, Scalar};

/// Leaky integrate-and-fire parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifParams<S> {
    /// Membrane leak λ applied to the previous post-reset potential.
    pub lambda_decay: S,
    pub v_th: S,
    pub v_reset: S,
}

impl<S: Scalar> LifParams<S> {
    pub fn new(lambda_decay: S, v_th: S, v_reset: S) -> Result<Self> {
        let p = Self { lambda_decay, v_th, v_reset };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_decay >= S::zero() && self.lambda_decay <= S::one()) {
            return Err(Error::Config(format!("membrane decay {} outside [0, 1]", self.lambda_decay)));
        }
        if !(self.v_th > self.v_reset) {
            return Err(Error::Config(format!("threshold {} must exceed reset {}", self.v_th, self.v_reset)));
        }
        Ok(())
    }
}

impl<S: Scalar> Default for LifParams<S> {
    fn default() -> Self {
        Self { lambda_decay: S::of(0.75), v_th: S::of(0.5), v_reset: S::zero() }
    }
}

/// Current-based LIF: a decaying synaptic current feeds the membrane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClifParams<S> {
    pub current_decay: S,
    pub voltage_decay: S,
    pub v_th: S,
    pub v_reset: S,
}

impl<S: Scalar> ClifParams<S> {
    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("current", self.current_decay), ("voltage", self.voltage_decay)] {
            if !(d >= S::zero() && d <= S::one()) {
                return Err(Error::Config(format!("{name} decay {d} outside [0, 1]")));
            }
        }
        if !(self.v_th > self.v_reset) {
            return Err(Error::Config(format!("threshold {} must exceed reset {}", self.v_th, self.v_reset)));
        }
        Ok(())
    }

    /// The LIF neuron with the same membrane dynamics (ignores the current state).
    pub fn membrane(&self) -> LifParams<S> {
        LifParams { lambda_decay: self.voltage_decay, v_th: self.v_th, v_reset: self.v_reset }
    }
}

impl<S: Scalar> Default for ClifParams<S> {
    fn default() -> Self {
        Self { current_decay: S::of(0.5), voltage_decay: S::of(0.75), v_th: S::of(0.5), v_reset: S::zero() }
    }
}

/// Rectangular surrogate of the spike derivative: `1/width` inside
/// `|h − v_th| < width/2`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec<S> {
    pub width: S,
}

impl<S: Scalar> SurrogateSpec<S> {
    pub fn rectangular(width: S) -> Result<Self> {
        if !(width > S::zero()) {
            return Err(Error::Config(format!("surrogate width must be positive, got {width}")));
        }
        Ok(Self { width })
    }
}

impl<S: Scalar> Default for SurrogateSpec<S> {
    fn default() -> Self {
        Self { width: S::one() }
    }
}

#[inline]
pub fn surrogate_grad<S: Scalar>(h: S, v_th: S, s: &SurrogateSpec<S>) -> S {
    if (h - v_th).abs() < s.width / S::two() {
        S::one() / s.width
    } else {
        S::zero()
    }
}

/// Heaviside with `Θ(0) = 1`.
#[inline]
pub(crate) fn fires<S: Scalar>(h: S, v_th: S) -> bool {
    h >= v_th
}

/// Result of one neuron update over a tensor of neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronStep<S> {
    pub spikes: Tensor<S>,
    /// Pre-spike membrane potential H.
    pub h: Tensor<S>,
    /// Post-reset membrane potential V.
    pub v_next: Tensor<S>,
    /// Synaptic current (CLIF only).
    pub c_next: Option<Tensor<S>>,
}

#[inline]
pub(crate) fn lif_update<S: Scalar>(p: &LifParams<S>, v: &mut S, current: S) -> (S, S) {
    let h = p.lambda_decay * *v + current;
    let (s, v_next) = if fires(h, p.v_th) { (S::one(), p.v_reset) } else { (S::zero(), h) };
    *v = v_next;
    (h, s)
}

#[inline]
pub(crate) fn clif_update<S: Scalar>(p: &ClifParams<S>, c: &mut S, v: &mut S, current: S) -> (S, S) {
    *c = p.current_decay * *c + current;
    let h = p.voltage_decay * *v + *c;
    let (s, v_next) = if fires(h, p.v_th) { (S::one(), p.v_reset) } else { (S::zero(), h) };
    *v = v_next;
    (h, s)
}

/// `H = λ·V_prev + I`, `S = Θ(H − V_th)`, `V = (1 − S)·H + S·V_reset`.
pub fn lif_step<S: Scalar>(v_prev: &Tensor<S>, input_current: &Tensor<S>, p: &LifParams<S>) -> Result<NeuronStep<S>> {
    v_prev.check_same_shape(input_current, "lif_step")?;
    let mut v = v_prev.clone();
    let mut h = Tensor::zeros_like(v_prev);
    let mut spikes = Tensor::zeros_like(v_prev);
    for (((vi, &i), hi), si) in v.data_mut().iter_mut().zip(input_current.data()).zip(h.data_mut()).zip(spikes.data_mut()) {
        let (hh, ss) = lif_update(p, vi, i);
        *hi = hh;
        *si = ss;
    }
    Ok(NeuronStep { spikes, h, v_next: v, c_next: None })
}

/// `C = κ·C_prev + I`, `H = λ·V_prev + C`, then spike and reset as LIF.
pub fn clif_step<S: Scalar>(
    c_prev: &Tensor<S>,
    v_prev: &Tensor<S>,
    input_current: &Tensor<S>,
    p: &ClifParams<S>,
) -> Result<NeuronStep<S>> {
    v_prev.check_same_shape(input_current, "clif_step")?;
    c_prev.check_same_shape(input_current, "clif_step")?;
    let mut c = c_prev.clone();
    let mut v = v_prev.clone();
    let mut h = Tensor::zeros_like(v_prev);
    let mut spikes = Tensor::zeros_like(v_prev);
    for k in 0..v.len() {
        let (hh, ss) = clif_update(p, &mut c.data_mut()[k], &mut v.data_mut()[k], input_current.data()[k]);
        h.data_mut()[k] = hh;
        spikes.data_mut()[k] = ss;
    }
    Ok(NeuronStep { spikes, h, v_next: v, c_next: Some(c) })
}

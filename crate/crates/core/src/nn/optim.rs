use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimKind {
    Adam,
    Sgd,
}

/// Adaptive-moment optimizer state, with a plain gradient-descent mode.
///
/// Moments are allocated lazily on the first step and are matched to the
/// parameter set by position, so the same state must always be used with the
/// same set.
#[derive(Debug, Clone)]
pub struct OptimState<S> {
    pub kind: OptimKind,
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    step: u64,
    first: Vec<Vec<S>>,
    second: Vec<Vec<S>>,
}

impl<S: Scalar> OptimState<S> {
    pub fn adam(lr: f64) -> Self {
        Self::with_kind(OptimKind::Adam, lr)
    }

    pub fn sgd(lr: f64) -> Self {
        Self::with_kind(OptimKind::Sgd, lr)
    }

    pub fn with_kind(kind: OptimKind, lr: f64) -> Self {
        Self {
            kind,
            lr: S::of(lr),
            beta1: S::of(0.9),
            beta2: S::of(0.999),
            eps: S::of(1e-8),
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update from the accumulated gradients. Gradients are not cleared.
    pub fn step(&mut self, params: &mut ParamSet<S>) -> Result<()> {
        self.step += 1;
        match self.kind {
            OptimKind::Sgd => {
                for (_, p) in params.iter_mut() {
                    for (v, &g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
                        *v -= self.lr * g;
                    }
                }
            }
            OptimKind::Adam => {
                if self.first.is_empty() {
                    self.first = params.iter().map(|(_, p)| vec![S::zero(); p.value.len()]).collect();
                    self.second = self.first.clone();
                } else if self.first.len() != params.len()
                    || self.first.iter().zip(params.iter()).any(|(m, (_, p))| m.len() != p.value.len())
                {
                    return Err(Error::structural("optimizer moments do not match the parameter set"));
                }
                let t = self.step as i32;
                let bc1 = S::one() - self.beta1.powi(t);
                let bc2 = S::one() - self.beta2.powi(t);
                let (b1, b2) = (self.beta1, self.beta2);
                for ((m, v), (_, p)) in self.first.iter_mut().zip(self.second.iter_mut()).zip(params.iter_mut()) {
                    let grad = p.grad.data().to_vec();
                    for (((x, mi), vi), g) in p.value.data_mut().iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(grad) {
                        *mi = b1 * *mi + (S::one() - b1) * g;
                        *vi = b2 * *vi + (S::one() - b2) * g * g;
                        let m_hat = *mi / bc1;
                        let v_hat = *vi / bc2;
                        *x -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                    }
                }
            }
        }
        Ok(())
    }
}

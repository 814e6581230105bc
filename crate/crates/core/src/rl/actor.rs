use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{Activation, Mlp, MlpTape, ParamSet, Tensor};
use crate::snn::{San, SanConfig, SanState};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorKind {
    San,
    Ann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    AnnPolyak,
    SnnPolyak,
    Proxy,
}

impl TargetKind {
    pub const ALL: [TargetKind; 3] = [TargetKind::AnnPolyak, TargetKind::SnnPolyak, TargetKind::Proxy];

    pub fn name(self) -> &'static str {
        match self {
            TargetKind::AnnPolyak => "ann_polyak",
            TargetKind::SnnPolyak => "snn_polyak",
            TargetKind::Proxy => "proxy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown target kind {s:?}")))
    }
}

/// Continuous policy network: ReLU hidden layers and a `tanh` output, so its
/// range matches the spiking decoder. Used for the ANN actor and the proxy.
pub fn continuous_policy<S: Scalar, R: Rng + ?Sized>(
    obs_dim: usize,
    act_dim: usize,
    hidden: &[usize],
    rng: &mut R,
) -> Result<Mlp<S>> {
    let widths: Vec<usize> = std::iter::once(obs_dim).chain(hidden.iter().copied()).chain([act_dim]).collect();
    Mlp::new(&widths, &policy_activations(hidden.len()), rng)
}

pub fn policy_activations(hidden_layers: usize) -> Vec<Activation> {
    let mut acts = vec![Activation::Relu; hidden_layers];
    acts.push(Activation::Tanh);
    acts
}

/// Deterministic policy π(s) ∈ (−1, 1)^act_dim.
#[derive(Debug, Clone, PartialEq)]
pub enum Actor<S> {
    San(San<S>),
    Ann(Mlp<S>),
}

#[derive(Debug, Clone)]
pub enum ActorTape<S> {
    San(SanState<S>),
    Ann(MlpTape<S>),
}

impl<S: Scalar> ActorTape<S> {
    pub fn spike_rate(&self) -> Option<f64> {
        match self {
            ActorTape::San(s) => Some(s.spike_rate()),
            ActorTape::Ann(_) => None,
        }
    }
}

impl<S: Scalar> Actor<S> {
    pub fn new<R: Rng + ?Sized>(kind: ActorKind, cfg: &SanConfig, rng: &mut R) -> Result<Self> {
        Ok(match kind {
            ActorKind::San => Actor::San(San::new(cfg, rng)?),
            ActorKind::Ann => Actor::Ann(continuous_policy(cfg.obs_dim, cfg.act_dim, &cfg.hidden, rng)?),
        })
    }

    /// Rebuilds an actor from stored parameters.
    pub fn from_params(kind: ActorKind, cfg: &SanConfig, params: &ParamSet<S>) -> Result<Self> {
        Ok(match kind {
            ActorKind::San => Actor::San(San::from_params(&cfg.infer_from_params(params)?, params)?),
            ActorKind::Ann => {
                let layers = params.len() / 2;
                if layers == 0 {
                    return Err(Error::structural("no ANN actor parameters found"));
                }
                Actor::Ann(Mlp::from_params(params.clone(), &policy_activations(layers - 1))?)
            }
        })
    }

    pub fn kind(&self) -> ActorKind {
        match self {
            Actor::San(_) => ActorKind::San,
            Actor::Ann(_) => ActorKind::Ann,
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            Actor::San(s) => s.config().obs_dim,
            Actor::Ann(m) => m.in_dim(),
        }
    }

    pub fn act_dim(&self) -> usize {
        match self {
            Actor::San(s) => s.config().act_dim,
            Actor::Ann(m) => m.out_dim(),
        }
    }

    pub fn as_san(&self) -> Option<&San<S>> {
        match self {
            Actor::San(s) => Some(s),
            Actor::Ann(_) => None,
        }
    }

    pub fn act(&self, states: &Tensor<S>) -> Result<Tensor<S>> {
        match self {
            Actor::San(s) => s.act(states),
            Actor::Ann(m) => m.predict(states),
        }
    }

    pub fn forward(&self, states: &Tensor<S>) -> Result<(Tensor<S>, ActorTape<S>)> {
        Ok(match self {
            Actor::San(s) => {
                let (a, st) = s.forward(states)?;
                (a, ActorTape::San(st))
            }
            Actor::Ann(m) => {
                let (a, t) = m.forward(states)?;
                (a, ActorTape::Ann(t))
            }
        })
    }

    /// Accumulates parameter gradients; returns `∂L/∂states`.
    pub fn backward(&mut self, tape: &ActorTape<S>, upstream: &Tensor<S>) -> Result<Tensor<S>> {
        match (self, tape) {
            (Actor::San(s), ActorTape::San(t)) => s.backward(t, upstream),
            (Actor::Ann(m), ActorTape::Ann(t)) => m.backward(t, upstream),
            _ => Err(Error::state("actor tape recorded by a different actor kind")),
        }
    }

    pub fn params(&self) -> &ParamSet<S> {
        match self {
            Actor::San(s) => s.params(),
            Actor::Ann(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<S> {
        match self {
            Actor::San(s) => s.params_mut(),
            Actor::Ann(m) => m.params_mut(),
        }
    }

    /// Re-applies parameter constraints after an update.
    pub fn project(&mut self) {
        if let Actor::San(s) = self {
            s.clamp_sigma();
        }
    }
}

/// Network used in place of π_φ' inside the critic target.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetActor<S> {
    /// Same-architecture copy maintained by Polyak averaging.
    Polyak(Actor<S>),
    /// Continuous network fitted to the online actor's outputs.
    Proxy(Mlp<S>),
}

impl<S: Scalar> TargetActor<S> {
    pub fn act(&self, states: &Tensor<S>) -> Result<Tensor<S>> {
        match self {
            TargetActor::Polyak(a) => a.act(states),
            TargetActor::Proxy(m) => m.predict(states),
        }
    }

    pub fn params(&self) -> &ParamSet<S> {
        match self {
            TargetActor::Polyak(a) => a.params(),
            TargetActor::Proxy(m) => m.params(),
        }
    }

    pub fn proxy(&self) -> Option<&Mlp<S>> {
        match self {
            TargetActor::Proxy(m) => Some(m),
            TargetActor::Polyak(_) => None,
        }
    }
}

/// Mean over rows of the squared Euclidean distance between two output batches.
pub fn output_gap<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<S> {
    a.check_same_shape(b, "output gap")?;
    if a.rank() != 2 || a.rows() == 0 {
        return Err(Error::dim("output gap needs a non-empty [batch × dim] pair"));
    }
    let sum: S = a.data().iter().zip(b.data()).map(|(&x, &y)| (x - y) * (x - y)).sum();
    Ok(sum / S::of(a.rows() as f64))
}

//! Replay, TD3 and the target-actor strategies.

mod actor;
mod buffer;
mod td3;

pub use actor::{continuous_policy, output_gap, policy_activations, Actor, ActorKind, ActorTape, TargetActor, TargetKind};
pub use buffer::{Batch, ReplayBuffer, Transition};
pub use td3::{critic_network, fit_proxy, proxy_loss, proxy_loss_backward, Agent, ProxyFit, StepMetrics, Td3Config};

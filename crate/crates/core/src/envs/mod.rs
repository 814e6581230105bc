//! Small continuous-control tasks with a uniform reset/step interface.

mod double_integrator;
mod pendulum;

pub use double_integrator::{double_integrator_reset, double_integrator_step, DoubleIntegrator};
pub use pendulum::{pendulum_energy, pendulum_reset, pendulum_step, wrap_angle, Pendulum};

use rand::RngCore;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: &'static str,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub max_steps: usize,
    /// Typical observation range, used to draw synthetic states.
    pub obs_low: Vec<f64>,
    pub obs_high: Vec<f64>,
}

impl EnvSpec {
    /// Maps `[−1, 1]` to the action bounds.
    pub fn scale_action(&self, normalized: &[f64]) -> Vec<f64> {
        normalized
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(&a, (&lo, &hi))| lo + (a.clamp(-1.0, 1.0) + 1.0) * 0.5 * (hi - lo))
            .collect()
    }

    pub fn clip_action(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(&a, (&lo, &hi))| if a.is_nan() { 0.0f64.clamp(lo, hi) } else { a.clamp(lo, hi) })
            .collect()
    }
}

/// Physical state plus elapsed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub physical: Vec<f64>,
    pub elapsed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: Vec<f64>,
    pub reward: f64,
    /// True termination.
    pub done: bool,
    /// Time limit reached.
    pub truncated: bool,
}

pub trait Env: Send {
    fn spec(&self) -> &EnvSpec;
    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64>;
    /// Actions outside the bounds are clipped before integration.
    fn step(&mut self, action: &[f64]) -> StepOutcome;
    fn state(&self) -> &EnvState;
    fn set_state(&mut self, state: EnvState) -> Vec<f64>;
}

pub const ENV_NAMES: [&str; 2] = ["pendulum", "double_integrator"];

pub fn make_env(name: &str) -> Result<Box<dyn Env>> {
    match name {
        "pendulum" => Ok(Box::new(Pendulum::default())),
        "double_integrator" => Ok(Box::new(DoubleIntegrator::default())),
        other => Err(Error::Config(format!("unknown environment {other:?}; expected one of {ENV_NAMES:?}"))),
    }
}

/// Runs one episode to termination or truncation. The policy receives the
/// observation and the `deterministic` flag and returns an action in
/// environment units. Returns the undiscounted return and step count.
pub fn episode_rollout<F>(env: &mut dyn Env, mut policy: F, rng: &mut dyn RngCore, deterministic: bool) -> Result<(f64, usize)>
where
    F: FnMut(&[f64], bool) -> Result<Vec<f64>>,
{
    let mut obs = env.reset(rng);
    let mut total = 0.0;
    let mut steps = 0;
    loop {
        let action = policy(&obs, deterministic)?;
        if action.len() != env.spec().act_dim {
            return Err(Error::dim(format!("policy returned {} actions, env expects {}", action.len(), env.spec().act_dim)));
        }
        let out = env.step(&action);
        total += out.reward;
        steps += 1;
        obs = out.obs;
        if out.done || out.truncated {
            return Ok((total, steps));
        }
    }
}

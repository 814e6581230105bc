use std::f64::consts::PI;

use rand::{Rng, RngCore};

use super::{Env, EnvSpec, EnvState, StepOutcome};

const G: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;
const DT: f64 = 0.05;
const MAX_SPEED: f64 = 8.0;
const MAX_TORQUE: f64 = 2.0;
const HORIZON: usize = 200;

/// Maps an angle to `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

fn observe(s: &EnvState) -> Vec<f64> {
    let (th, thdot) = (s.physical[0], s.physical[1]);
    vec![th.cos(), th.sin(), thdot]
}

/// θ ~ U(−π, π), θ̇ ~ U(−1, 1); θ = 0 is upright.
pub fn pendulum_reset<R: Rng + ?Sized>(rng: &mut R) -> (Vec<f64>, EnvState) {
    let s = EnvState { physical: vec![rng.random_range(-PI..PI), rng.random_range(-1.0..1.0)], elapsed: 0 };
    (observe(&s), s)
}

/// Semi-implicit Euler step of a uniform rod under gravity. The cost uses the
/// pre-step angle, speed and torque.
pub fn pendulum_step(state: &EnvState, action: &[f64]) -> (Vec<f64>, f64, bool, bool, EnvState) {
    let u = action[0].clamp(-MAX_TORQUE, MAX_TORQUE);
    let u = if u.is_nan() { 0.0 } else { u };
    let (th, thdot) = (state.physical[0], state.physical[1]);
    let cost = wrap_angle(th).powi(2) + 0.1 * thdot * thdot + 0.001 * u * u;
    let accel = 3.0 * G / (2.0 * LENGTH) * th.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u;
    let new_thdot = (thdot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
    let next = EnvState { physical: vec![th + new_thdot * DT, new_thdot], elapsed: state.elapsed + 1 };
    let truncated = next.elapsed >= HORIZON;
    (observe(&next), -cost, false, truncated, next)
}

/// Mechanical energy of the rod about its pivot.
pub fn pendulum_energy(state: &EnvState) -> f64 {
    let (th, thdot) = (state.physical[0], state.physical[1]);
    0.5 * (MASS * LENGTH * LENGTH / 3.0) * thdot * thdot + MASS * G * (LENGTH / 2.0) * th.cos()
}

#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    state: EnvState,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self {
            spec: EnvSpec {
                name: "pendulum",
                obs_dim: 3,
                act_dim: 1,
                action_low: vec![-MAX_TORQUE],
                action_high: vec![MAX_TORQUE],
                max_steps: HORIZON,
                obs_low: vec![-1.0, -1.0, -MAX_SPEED],
                obs_high: vec![1.0, 1.0, MAX_SPEED],
            },
            state: EnvState { physical: vec![PI, 0.0], elapsed: 0 },
        }
    }
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let (obs, s) = pendulum_reset(rng);
        self.state = s;
        obs
    }

    fn step(&mut self, action: &[f64]) -> StepOutcome {
        let (obs, reward, done, truncated, next) = pendulum_step(&self.state, action);
        self.state = next;
        StepOutcome { obs, reward, done, truncated }
    }

    fn state(&self) -> &EnvState {
        &self.state
    }

    fn set_state(&mut self, state: EnvState) -> Vec<f64> {
        self.state = state;
        observe(&self.state)
    }
}

use rand::{Rng, RngCore};

use super::{Env, EnvSpec, EnvState, StepOutcome};

const DT: f64 = 0.05;
const HORIZON: usize = 200;

/// x, v ~ U(−1, 1).
pub fn double_integrator_reset<R: Rng + ?Sized>(rng: &mut R) -> (Vec<f64>, EnvState) {
    let s = EnvState { physical: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], elapsed: 0 };
    (s.physical.clone(), s)
}

/// `x ← x + dt·v`, `v ← v + dt·u`, cost on the pre-step state.
pub fn double_integrator_step(state: &EnvState, action: &[f64]) -> (Vec<f64>, f64, bool, bool, EnvState) {
    let u = if action[0].is_nan() { 0.0 } else { action[0].clamp(-1.0, 1.0) };
    let (x, v) = (state.physical[0], state.physical[1]);
    let cost = x * x + 0.1 * v * v + 0.01 * u * u;
    let next = EnvState { physical: vec![x + DT * v, v + DT * u], elapsed: state.elapsed + 1 };
    let truncated = next.elapsed >= HORIZON;
    (next.physical.clone(), -cost, false, truncated, next)
}

#[derive(Debug, Clone)]
pub struct DoubleIntegrator {
    spec: EnvSpec,
    state: EnvState,
}

impl Default for DoubleIntegrator {
    fn default() -> Self {
        Self {
            spec: EnvSpec {
                name: "double_integrator",
                obs_dim: 2,
                act_dim: 1,
                action_low: vec![-1.0],
                action_high: vec![1.0],
                max_steps: HORIZON,
                obs_low: vec![-2.0, -2.0],
                obs_high: vec![2.0, 2.0],
            },
            state: EnvState { physical: vec![0.0, 0.0], elapsed: 0 },
        }
    }
}

impl Env for DoubleIntegrator {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let (obs, s) = double_integrator_reset(rng);
        self.state = s;
        obs
    }

    fn step(&mut self, action: &[f64]) -> StepOutcome {
        let (obs, reward, done, truncated, next) = double_integrator_step(&self.state, action);
        self.state = next;
        StepOutcome { obs, reward, done, truncated }
    }

    fn state(&self) -> &EnvState {
        &self.state
    }

    fn set_state(&mut self, state: EnvState) -> Vec<f64> {
        self.state = state;
        self.state.physical.clone()
    }
}

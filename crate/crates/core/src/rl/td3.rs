use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::actor::{continuous_policy, output_gap, Actor, ActorKind, TargetActor, TargetKind};
use super::buffer::{Batch, ReplayBuffer};
use crate::nn::{polyak_update, Activation, Mlp, OptimKind, OptimState, ParamSet, Tensor};
use crate::seeding::{self, Rng as StreamRng};
use crate::snn::SanConfig;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Td3Config {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub policy_delay: usize,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub exploration_noise_std: f64,
    pub warmup_steps: usize,
    pub buffer_capacity: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub proxy_lr: f64,
    /// Gradient steps per proxy maintenance round.
    pub proxy_iters: usize,
    /// Gradient steps fitting the proxy to the initial actor on random states.
    pub proxy_init_iters: usize,
    pub proxy_optimizer: OptimKind,
    /// Draw a new replay batch for every proxy iteration instead of reusing one.
    pub proxy_fresh_batches: bool,
    /// Apply target-policy smoothing noise to the proxy's output.
    pub proxy_target_noise: bool,
    /// With a proxy target, also maintain a Polyak copy of the spiking actor
    /// purely to measure its output gap on the same states.
    pub track_polyak_gap: bool,
    pub critic_hidden: Vec<usize>,
    pub target_kind: TargetKind,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            batch_size: 100,
            policy_delay: 2,
            target_noise_std: 0.2,
            target_noise_clip: 0.5,
            exploration_noise_std: 0.1,
            warmup_steps: 1000,
            buffer_capacity: 1_000_000,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            proxy_lr: 1e-3,
            proxy_iters: 5,
            proxy_init_iters: 200,
            proxy_optimizer: OptimKind::Adam,
            proxy_fresh_batches: true,
            proxy_target_noise: true,
            track_polyak_gap: false,
            critic_hidden: vec![256, 256],
            target_kind: TargetKind::Proxy,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.policy_delay == 0 || self.proxy_iters == 0 {
            return bad("batch_size, policy_delay and proxy_iters must be at least 1");
        }
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity must be at least 1");
        }
        if [self.target_noise_std, self.target_noise_clip, self.exploration_noise_std].iter().any(|&x| !(x >= 0.0)) {
            return bad("noise scales must be non-negative");
        }
        if [self.actor_lr, self.critic_lr, self.proxy_lr].iter().any(|&x| !(x > 0.0)) {
            return bad("learning rates must be positive");
        }
        if self.critic_hidden.is_empty() || self.critic_hidden.contains(&0) {
            return bad("critic_hidden widths must be ≥ 1");
        }
        Ok(())
    }
}

/// One row of the training metrics stream. `None` marks a field that does
/// not apply on this step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepMetrics {
    pub step: u64,
    pub critic_loss: f64,
    pub actor_objective: Option<f64>,
    pub proxy_loss: Option<f64>,
    /// Output gap between the target actor and the online actor after maintenance.
    pub proxy_gap: Option<f64>,
    pub mean_q: f64,
    pub spike_rate: Option<f64>,
    /// Gap of the shadow Polyak copy on the same states (see `track_polyak_gap`).
    pub polyak_gap: Option<f64>,
}

/// Losses recorded while fitting the proxy.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyFit {
    /// Loss on each iteration's batch, evaluated just before its step.
    pub before_step: Vec<f64>,
    /// Loss on the last batch after the final step.
    pub final_loss: f64,
}

/// Proxy output-matching loss `(1/N) Σ ‖proxy(s) − π(s)‖²` with π's outputs as constants.
pub fn proxy_loss<S: Scalar>(proxy: &Mlp<S>, actor: &Actor<S>, states: &Tensor<S>) -> Result<S> {
    output_gap(&proxy.predict(states)?, &actor.act(states)?)
}

/// Accumulates the gradient of the output-matching loss into the proxy and returns the loss.
pub fn proxy_loss_backward<S: Scalar>(proxy: &mut Mlp<S>, states: &Tensor<S>, reference: &Tensor<S>) -> Result<S> {
    let (out, tape) = proxy.forward(states)?;
    let loss = output_gap(&out, reference)?;
    let k = S::two() / S::of(states.rows() as f64);
    let mut upstream = out;
    for (g, &r) in upstream.data_mut().iter_mut().zip(reference.data()) {
        *g = (*g - r) * k;
    }
    proxy.backward(&tape, &upstream)?;
    Ok(loss)
}

/// `iters` optimizer steps on the output-matching loss; `next_states` supplies each iteration's batch.
pub fn fit_proxy<S: Scalar>(
    proxy: &mut Mlp<S>,
    opt: &mut OptimState<S>,
    actor: &Actor<S>,
    iters: usize,
    mut next_states: impl FnMut() -> Result<Tensor<S>>,
) -> Result<ProxyFit> {
    let mut before_step = Vec::with_capacity(iters);
    let mut last = None;
    for _ in 0..iters {
        let states = next_states()?;
        let reference = actor.act(&states)?;
        proxy.params_mut().zero_grad();
        before_step.push(proxy_loss_backward(proxy, &states, &reference)?.as_f64());
        opt.step(proxy.params_mut())?;
        last = Some((states, reference));
    }
    let final_loss = match last {
        Some((s, r)) => output_gap(&proxy.predict(&s)?, &r)?.as_f64(),
        None => return Err(Error::Config("proxy fitting needs at least one iteration".into())),
    };
    Ok(ProxyFit { before_step, final_loss })
}

pub fn critic_network<S: Scalar, R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut R) -> Result<Mlp<S>> {
    let widths: Vec<usize> = std::iter::once(obs_dim + act_dim).chain(hidden.iter().copied()).chain([1]).collect();
    let mut acts = vec![Activation::Relu; hidden.len()];
    acts.push(Activation::Identity);
    Mlp::new(&widths, &acts, rng)
}

/// TD3 learner with a configurable target actor.
#[derive(Debug, Clone)]
pub struct Agent<S> {
    cfg: Td3Config,
    actor: Actor<S>,
    actor_opt: OptimState<S>,
    target: TargetActor<S>,
    proxy_opt: OptimState<S>,
    shadow: Option<Actor<S>>,
    critics: [Mlp<S>; 2],
    critic_targets: [Mlp<S>; 2],
    critic_opts: [OptimState<S>; 2],
    noise_rng: StreamRng,
    gap_rng: StreamRng,
    critic_updates: u64,
    actor_updates: u64,
    maintenance_rounds: u64,
}

impl<S: Scalar> Agent<S> {
    /// Builds every network from the `init` stream of `seed`.
    pub fn new(kind: ActorKind, san: &SanConfig, cfg: &Td3Config, seed: u64) -> Result<Self> {
        cfg.validate()?;
        san.validate()?;
        let mut rng = seeding::stream(seed, seeding::INIT);
        let actor = Actor::new(kind, san, &mut rng)?;
        let target = match cfg.target_kind {
            TargetKind::Proxy => TargetActor::Proxy(continuous_policy(san.obs_dim, san.act_dim, &san.hidden, &mut rng)?),
            _ => TargetActor::Polyak(actor.clone()),
        };
        let critics = [
            critic_network(san.obs_dim, san.act_dim, &cfg.critic_hidden, &mut rng)?,
            critic_network(san.obs_dim, san.act_dim, &cfg.critic_hidden, &mut rng)?,
        ];
        Self::from_parts(cfg, actor, target, critics, seed)
    }

    /// Assembles an agent from given networks; critic targets start as copies.
    pub fn from_parts(cfg: &Td3Config, actor: Actor<S>, target: TargetActor<S>, critics: [Mlp<S>; 2], seed: u64) -> Result<Self> {
        cfg.validate()?;
        match (&target, cfg.target_kind, actor.kind()) {
            (TargetActor::Proxy(_), TargetKind::Proxy, _) => {}
            (TargetActor::Polyak(t), TargetKind::SnnPolyak, ActorKind::San) if t.kind() == ActorKind::San => {}
            (TargetActor::Polyak(t), TargetKind::AnnPolyak, ActorKind::Ann) if t.kind() == ActorKind::Ann => {}
            _ => {
                return Err(Error::Config(format!(
                    "target kind {} does not fit a {:?} actor",
                    cfg.target_kind.name(),
                    actor.kind()
                )))
            }
        }
        target.params().check_compatible(&match &target {
            TargetActor::Polyak(_) => actor.params().clone(),
            TargetActor::Proxy(p) => p.params().clone(),
        })?;
        if let TargetActor::Proxy(p) = &target {
            if p.in_dim() != actor.obs_dim() || p.out_dim() != actor.act_dim() {
                return Err(Error::structural("proxy dimensions differ from the actor's"));
            }
        }
        for c in &critics {
            if c.in_dim() != actor.obs_dim() + actor.act_dim() || c.out_dim() != 1 {
                return Err(Error::structural("critic must map [state, action] to a scalar"));
            }
        }
        let shadow = (cfg.track_polyak_gap && cfg.target_kind == TargetKind::Proxy).then(|| actor.clone());
        Ok(Self {
            actor_opt: OptimState::adam(cfg.actor_lr),
            proxy_opt: OptimState::with_kind(cfg.proxy_optimizer, cfg.proxy_lr),
            critic_opts: [OptimState::adam(cfg.critic_lr), OptimState::adam(cfg.critic_lr)],
            critic_targets: critics.clone(),
            critics,
            actor,
            target,
            shadow,
            noise_rng: seeding::stream(seed, seeding::TARGET_NOISE),
            gap_rng: seeding::stream(seed, seeding::GAP),
            critic_updates: 0,
            actor_updates: 0,
            maintenance_rounds: 0,
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &Td3Config {
        &self.cfg
    }

    pub fn actor(&self) -> &Actor<S> {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut Actor<S> {
        &mut self.actor
    }

    pub fn target(&self) -> &TargetActor<S> {
        &self.target
    }

    pub fn target_mut(&mut self) -> &mut TargetActor<S> {
        &mut self.target
    }

    pub fn shadow(&self) -> Option<&Actor<S>> {
        self.shadow.as_ref()
    }

    pub fn critics(&self) -> &[Mlp<S>; 2] {
        &self.critics
    }

    pub fn critics_mut(&mut self) -> &mut [Mlp<S>; 2] {
        &mut self.critics
    }

    pub fn critic_targets(&self) -> &[Mlp<S>; 2] {
        &self.critic_targets
    }

    pub fn critic_targets_mut(&mut self) -> &mut [Mlp<S>; 2] {
        &mut self.critic_targets
    }

    pub fn critic_optimizers_mut(&mut self) -> &mut [OptimState<S>; 2] {
        &mut self.critic_opts
    }

    pub fn critic_updates(&self) -> u64 {
        self.critic_updates
    }

    pub fn actor_updates(&self) -> u64 {
        self.actor_updates
    }

    pub fn maintenance_rounds(&self) -> u64 {
        self.maintenance_rounds
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.obs_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.actor.act_dim()
    }

    fn critic_input(s: &Tensor<S>, a: &Tensor<S>) -> Result<Tensor<S>> {
        s.hcat(a)
    }

    /// `y = r + (1 − done)·γ·min(Q'_1, Q'_2)` at the smoothed target action.
    pub fn critic_target_value(&mut self, batch: &Batch<S>) -> Result<Vec<S>> {
        let mut a_next = self.target.act(&batch.s_next)?;
        let noisy = self.cfg.target_noise_std > 0.0
            && (self.cfg.target_kind != TargetKind::Proxy || self.cfg.proxy_target_noise);
        let one = S::one();
        if noisy {
            let normal = Normal::new(0.0, self.cfg.target_noise_std).map_err(|e| Error::Config(e.to_string()))?;
            let clip = self.cfg.target_noise_clip;
            for a in a_next.data_mut() {
                let eps = normal.sample(&mut self.noise_rng).clamp(-clip, clip);
                *a = (*a + S::of(eps)).max(-one).min(one);
            }
        }
        let x = Self::critic_input(&batch.s_next, &a_next)?;
        let q1 = self.critic_targets[0].predict(&x)?;
        let q2 = self.critic_targets[1].predict(&x)?;
        let gamma = S::of(self.cfg.gamma);
        Ok((0..batch.len())
            .map(|i| {
                let bootstrap = if batch.done[i] { S::zero() } else { gamma * q1.data()[i].min(q2.data()[i]) };
                batch.r[i] + bootstrap
            })
            .collect())
    }

    /// Per-critic mean squared TD error; accumulates gradients of their mean.
    pub fn critic_loss_backward(&mut self, batch: &Batch<S>, y: &[S]) -> Result<([S; 2], S)> {
        let x = Self::critic_input(&batch.s, &batch.a)?;
        let n = S::of(batch.len() as f64);
        let mut losses = [S::zero(); 2];
        let mut mean_q = S::zero();
        for (c, critic) in self.critics.iter_mut().enumerate() {
            let (q, tape) = critic.forward(&x)?;
            if c == 0 {
                mean_q = q.mean();
            }
            let mut upstream = q;
            let mut sq = S::zero();
            for (g, &t) in upstream.data_mut().iter_mut().zip(y) {
                let d = *g - t;
                sq += d * d;
                // the reported loss averages both critics, so each gets d/N
                *g = d / n;
            }
            losses[c] = sq / n;
            critic.backward(&tape, &upstream)?;
        }
        Ok((losses, mean_q))
    }

    /// One optimizer step on both critics. Returns (mean loss over critics, mean Q_1).
    pub fn critic_update(&mut self, batch: &Batch<S>, y: &[S]) -> Result<(S, S)> {
        for c in &mut self.critics {
            c.params_mut().zero_grad();
        }
        let (losses, mean_q) = self.critic_loss_backward(batch, y)?;
        for (c, opt) in self.critics.iter_mut().zip(&mut self.critic_opts) {
            opt.step(c.params_mut())?;
        }
        self.critic_updates += 1;
        Ok(((losses[0] + losses[1]) / S::two(), mean_q))
    }

    /// Accumulates the gradient of `−mean Q_1(s, π(s))` into the actor.
    /// Returns the objective `mean Q_1` and the actor tape.
    pub fn actor_objective_backward(&mut self, states: &Tensor<S>) -> Result<(S, Option<f64>)> {
        let (a, tape) = self.actor.forward(states)?;
        let x = Self::critic_input(states, &a)?;
        let (q, ctape) = self.critics[0].forward(&x)?;
        let n = states.rows();
        let upstream = Tensor::full(vec![n, 1], -S::one() / S::of(n as f64));
        let dx = self.critics[0].input_grad(&ctape, &upstream)?;
        let obs = states.cols();
        let da = dx.columns(obs, obs + self.actor.act_dim())?;
        self.actor.backward(&tape, &da)?;
        Ok((q.mean(), tape.spike_rate()))
    }

    /// Deterministic policy-gradient step. Returns (objective, spike rate for spiking actors).
    pub fn actor_update(&mut self, states: &Tensor<S>) -> Result<(S, Option<f64>)> {
        self.actor.params_mut().zero_grad();
        let out = self.actor_objective_backward(states)?;
        self.actor_opt.step(self.actor.params_mut())?;
        self.actor.project();
        self.actor_updates += 1;
        Ok(out)
    }

    pub fn polyak_critics(&mut self, tau: S) -> Result<()> {
        for (t, c) in self.critic_targets.iter_mut().zip(&self.critics) {
            polyak_update(t.params_mut(), c.params(), tau)?;
        }
        Ok(())
    }

    /// Proxy maintenance: K gradient steps on the output-matching loss. Returns the final loss.
    pub fn proxy_update<R: Rng + ?Sized>(&mut self, buf: &ReplayBuffer<S>, rng: &mut R) -> Result<f64> {
        let TargetActor::Proxy(proxy) = &mut self.target else {
            return Err(Error::state("proxy_update requires a proxy target"));
        };
        let n = self.cfg.batch_size;
        let fixed = if self.cfg.proxy_fresh_batches { None } else { Some(buf.sample_states(n, rng)?) };
        let fit = fit_proxy(proxy, &mut self.proxy_opt, &self.actor, self.cfg.proxy_iters, || match &fixed {
            Some(s) => Ok(s.clone()),
            None => buf.sample_states(n, rng),
        })?;
        Ok(fit.final_loss)
    }

    /// Fits the proxy to the initial actor on states drawn uniformly from
    /// `[low, high]`. Uses its own Adam state at `proxy_lr`, so the
    /// maintenance optimizer starts fresh afterwards.
    pub fn init_proxy<R: Rng + ?Sized>(&mut self, low: &[f64], high: &[f64], rng: &mut R) -> Result<Option<ProxyFit>> {
        let TargetActor::Proxy(proxy) = &mut self.target else {
            return Ok(None);
        };
        if self.cfg.proxy_init_iters == 0 {
            return Ok(None);
        }
        if low.len() != self.actor.obs_dim() || high.len() != low.len() {
            return Err(Error::dim("state bounds do not match the actor's input width"));
        }
        let n = self.cfg.batch_size;
        let mut opt = OptimState::adam(self.cfg.proxy_lr);
        let fit = fit_proxy(proxy, &mut opt, &self.actor, self.cfg.proxy_init_iters, || {
            let data = (0..n).flat_map(|_| low.iter().zip(high).map(|(&l, &h)| S::of(rng.random_range(l..=h))).collect::<Vec<_>>()).collect();
            Tensor::matrix(n, low.len(), data)
        })?;
        Ok(Some(fit))
    }

    fn maintain_targets<R: Rng + ?Sized>(&mut self, buf: &ReplayBuffer<S>, rng: &mut R, m: &mut StepMetrics) -> Result<()> {
        let tau = S::of(self.cfg.tau);
        self.polyak_critics(tau)?;
        match &mut self.target {
            TargetActor::Polyak(t) => polyak_update(t.params_mut(), self.actor.params(), tau)?,
            TargetActor::Proxy(_) => m.proxy_loss = Some(self.proxy_update(buf, rng)?),
        }
        if let Some(shadow) = &mut self.shadow {
            polyak_update(shadow.params_mut(), self.actor.params(), tau)?;
        }
        self.maintenance_rounds += 1;
        let states = buf.sample_states(self.cfg.batch_size, &mut self.gap_rng)?;
        let online = self.actor.act(&states)?;
        m.proxy_gap = Some(output_gap(&self.target.act(&states)?, &online)?.as_f64());
        if let Some(shadow) = &self.shadow {
            m.polyak_gap = Some(output_gap(&shadow.act(&states)?, &online)?.as_f64());
        }
        Ok(())
    }

    /// One training iteration: critic step every call; actor step and target
    /// maintenance every `policy_delay`-th call.
    pub fn td3_step<R: Rng + ?Sized>(&mut self, buf: &ReplayBuffer<S>, rng: &mut R) -> Result<StepMetrics> {
        if buf.len() < self.cfg.batch_size {
            return Err(Error::state(format!(
                "replay buffer holds {} transitions, batch needs {}",
                buf.len(),
                self.cfg.batch_size
            )));
        }
        let batch = buf.sample(self.cfg.batch_size, rng)?;
        let y = self.critic_target_value(&batch)?;
        let (critic_loss, mean_q) = self.critic_update(&batch, &y)?;
        let mut m = StepMetrics {
            step: self.critic_updates,
            critic_loss: critic_loss.as_f64(),
            mean_q: mean_q.as_f64(),
            ..StepMetrics::default()
        };
        if !m.critic_loss.is_finite() {
            return Err(Error::numeric(format!("critic loss became {} at update {}", m.critic_loss, m.step)));
        }
        if self.critic_updates % self.cfg.policy_delay as u64 == 0 {
            let (objective, spike_rate) = self.actor_update(&batch.s)?;
            m.actor_objective = Some(objective.as_f64());
            m.spike_rate = spike_rate;
            if !objective.as_f64().is_finite() || !self.actor.params().all_finite() {
                return Err(Error::numeric(format!("actor update diverged at update {}", m.step)));
            }
            self.maintain_targets(buf, rng, &mut m)?;
            if m.proxy_loss.is_some_and(|l| !l.is_finite()) {
                return Err(Error::numeric(format!("proxy loss became non-finite at update {}", m.step)));
            }
        }
        Ok(m)
    }

    /// Deterministic action for one observation.
    pub fn act(&self, obs: &[S]) -> Result<Vec<S>> {
        Ok(self.actor.act(&Tensor::matrix(1, obs.len(), obs.to_vec())?)?.into_data())
    }

    /// Uniform random action during warmup, otherwise `π(obs)` plus clipped Gaussian noise.
    pub fn explore_action<R: Rng + ?Sized>(&self, obs: &[S], rng: &mut R, env_step: usize) -> Result<Vec<S>> {
        let one = S::one();
        if env_step < self.cfg.warmup_steps {
            return Ok((0..self.act_dim()).map(|_| S::of(rng.random_range(-1.0..=1.0))).collect());
        }
        let mut a = self.act(obs)?;
        if self.cfg.exploration_noise_std > 0.0 {
            let normal = Normal::new(0.0, self.cfg.exploration_noise_std).map_err(|e| Error::Config(e.to_string()))?;
            for x in &mut a {
                *x = (*x + S::of(normal.sample(rng))).max(-one).min(one);
            }
        }
        Ok(a)
    }

    /// All network parameters under fixed prefixes.
    pub fn checkpoint_params(&self) -> ParamSet<S> {
        let mut p = self.actor.params().prefixed("actor.");
        let target_prefix = match self.target {
            TargetActor::Polyak(_) => "target.",
            TargetActor::Proxy(_) => "proxy.",
        };
        p.extend(self.target.params().prefixed(target_prefix));
        for (i, (c, t)) in self.critics.iter().zip(&self.critic_targets).enumerate() {
            p.extend(c.params().prefixed(&format!("critic{}.", i + 1)));
            p.extend(t.params().prefixed(&format!("critic{}_target.", i + 1)));
        }
        p
    }
}

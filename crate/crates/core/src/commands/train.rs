use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use crate::analysis::mean_std;
use crate::config::RunConfig;
use crate::envs::{episode_rollout, make_env, Env};
use crate::nn::write_checkpoint;
use crate::rl::{Agent, ReplayBuffer, StepMetrics, Transition};
use crate::seeding::{self, Rng};
use crate::{Error, Result};

/// Returns and lengths of one evaluation round.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRound {
    /// Environment steps taken when the round ran.
    pub env_step: usize,
    pub episodes: Vec<(f64, usize)>,
}

impl EvalRound {
    pub fn mean_return(&self) -> f64 {
        self.episodes.iter().map(|e| e.0).sum::<f64>() / self.episodes.len() as f64
    }
}

/// Environment loop around an [`Agent`]: one environment step, then one
/// TD3 iteration once warmup is over.
pub struct Trainer {
    cfg: RunConfig,
    env: Box<dyn Env>,
    eval_env: Box<dyn Env>,
    agent: Agent<f64>,
    buffer: ReplayBuffer<f64>,
    env_rng: Rng,
    explore_rng: Rng,
    buffer_rng: Rng,
    eval_rng: Rng,
    obs: Vec<f64>,
    env_steps: usize,
    metrics: Vec<StepMetrics>,
    evals: Vec<EvalRound>,
}

impl Trainer {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let san = cfg.san_for_env()?;
        let mut env = make_env(&cfg.env)?;
        let mut agent = Agent::new(cfg.actor, &san, &cfg.td3, cfg.seed)?;
        let spec = env.spec().clone();
        agent.init_proxy(&spec.obs_low, &spec.obs_high, &mut seeding::stream(cfg.seed, seeding::PROXY))?;
        let mut env_rng = seeding::stream(cfg.seed, seeding::ENV);
        let obs = env.reset(&mut env_rng);
        Ok(Self {
            eval_env: make_env(&cfg.env)?,
            buffer: ReplayBuffer::new(cfg.td3.buffer_capacity)?,
            explore_rng: seeding::stream(cfg.seed, seeding::EXPLORE),
            buffer_rng: seeding::stream(cfg.seed, seeding::BUFFER),
            eval_rng: seeding::stream(cfg.seed, seeding::EVAL),
            cfg: cfg.clone(),
            env,
            agent,
            env_rng,
            obs,
            env_steps: 0,
            metrics: Vec::new(),
            evals: Vec::new(),
        })
    }

    pub fn agent(&self) -> &Agent<f64> {
        &self.agent
    }

    pub fn buffer(&self) -> &ReplayBuffer<f64> {
        &self.buffer
    }

    pub fn env_steps(&self) -> usize {
        self.env_steps
    }

    pub fn metrics(&self) -> &[StepMetrics] {
        &self.metrics
    }

    pub fn evals(&self) -> &[EvalRound] {
        &self.evals
    }

    /// One environment step followed by at most one TD3 iteration.
    pub fn step(&mut self) -> Result<Option<&StepMetrics>> {
        let a = self.agent.explore_action(&self.obs, &mut self.explore_rng, self.env_steps)?;
        let out = self.env.step(&self.env.spec().scale_action(&a));
        if !out.reward.is_finite() || out.obs.iter().any(|x| !x.is_finite()) {
            return Err(Error::numeric(format!("environment produced non-finite values at step {}", self.env_steps)));
        }
        self.buffer.push(Transition { s: std::mem::take(&mut self.obs), a, r: out.reward, s_next: out.obs.clone(), done: out.done });
        self.env_steps += 1;
        self.obs = if out.done || out.truncated { self.env.reset(&mut self.env_rng) } else { out.obs };

        let mut trained = false;
        if self.env_steps >= self.cfg.td3.warmup_steps && self.buffer.len() >= self.cfg.td3.batch_size {
            let m = self.agent.td3_step(&self.buffer, &mut self.buffer_rng)?;
            self.metrics.push(m);
            trained = true;
        }
        if self.cfg.eval_interval > 0 && self.env_steps % self.cfg.eval_interval == 0 {
            self.evaluate()?;
        }
        Ok(if trained { self.metrics.last() } else { None })
    }

    pub fn run_until(&mut self, env_steps: usize) -> Result<()> {
        while self.env_steps < env_steps {
            self.step()?;
        }
        Ok(())
    }

    /// Evaluates now unless the latest round already ran at this step.
    pub fn finish(&mut self) -> Result<&EvalRound> {
        if self.evals.last().is_none_or(|e| e.env_step != self.env_steps) {
            self.evaluate()?;
        }
        Ok(self.evals.last().expect("just evaluated"))
    }

    /// `eval_episodes` deterministic episodes on a separate environment instance.
    pub fn evaluate(&mut self) -> Result<&EvalRound> {
        let agent = &self.agent;
        let mut episodes = Vec::with_capacity(self.cfg.eval_episodes);
        for _ in 0..self.cfg.eval_episodes {
            let spec = self.eval_env.spec().clone();
            let ep = episode_rollout(self.eval_env.as_mut(), |obs, _| Ok(spec.scale_action(&agent.act(obs)?)), &mut self.eval_rng, true)?;
            episodes.push(ep);
        }
        self.evals.push(EvalRound { env_step: self.env_steps, episodes });
        Ok(self.evals.last().expect("just pushed"))
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_metrics_csv(path: &Path, metrics: &[StepMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "critic_loss", "actor_objective", "proxy_loss", "proxy_gap", "mean_q", "spike_rate", "polyak_gap"])?;
    for m in metrics {
        w.write_record([
            m.step.to_string(),
            m.critic_loss.to_string(),
            opt(m.actor_objective),
            opt(m.proxy_loss),
            opt(m.proxy_gap),
            m.mean_q.to_string(),
            opt(m.spike_rate),
            opt(m.polyak_gap),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_eval_csv(path: &Path, round: &EvalRound) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "return", "steps"])?;
    for (i, (ret, steps)) in round.episodes.iter().enumerate() {
        w.write_record([i.to_string(), ret.to_string(), steps.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_eval_summary(path: &Path, cfg: &RunConfig, rounds: &[EvalRound]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["env_step", "mean_return", "std_return", "episodes"])?;
    for r in rounds {
        let returns: Vec<f64> = r.episodes.iter().map(|e| e.0).collect();
        let (mean, std) = if returns.len() > 1 { mean_std(&returns, cfg.analysis.std_convention)? } else { (returns[0], 0.0) };
        w.write_record([r.env_step.to_string(), mean.to_string(), std.to_string(), returns.len().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Result of a finished training run.
pub struct TrainOutcome {
    pub trainer: Trainer,
    pub final_mean_return: f64,
}

/// Trains for `cfg.total_steps` environment steps and writes the run directory:
/// `resolved-config.toml`, `metrics.csv`, `eval.csv` (final evaluation),
/// `eval_summary.csv` (every evaluation) and `checkpoint.bin`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(cfg)?;
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("resolved-config.toml"), cfg.to_toml()?)?;
    trainer.run_until(cfg.total_steps)?;
    let final_mean_return = trainer.finish()?.mean_return();
    write_metrics_csv(&dir.join("metrics.csv"), trainer.metrics())?;
    write_eval_csv(&dir.join("eval.csv"), trainer.evals().last().expect("finished"))?;
    write_eval_summary(&dir.join("eval_summary.csv"), cfg, trainer.evals())?;
    write_checkpoint(&trainer.agent().checkpoint_params(), BufWriter::new(File::create(dir.join("checkpoint.bin"))?))?;
    Ok(TrainOutcome { trainer, final_mean_return })
}

//! Library entry points behind the command-line subcommands.

mod apg;
mod drift;
mod energy;
mod train;

pub use apg::{cmd_apg, read_score_file};
pub use drift::{cmd_drift, collect_states, run_drift, DriftInputs, DriftKindSummary, DriftSummary};
pub use energy::{cmd_energy, measure_energy};
pub use train::{cmd_train, write_eval_csv, write_metrics_csv, EvalRound, TrainOutcome, Trainer};

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::config::RunConfig;
use crate::envs::{episode_rollout, make_env};
use crate::nn::{read_checkpoint, Mlp, ParamSet};
use crate::rl::{policy_activations, Actor, ActorKind};
use crate::seeding;
use crate::{Error, Result};

/// Networks restored from a training checkpoint.
pub struct LoadedCheckpoint {
    pub actor: Actor<f64>,
    /// The proxy target, when the run used one.
    pub proxy: Option<Mlp<f64>>,
}

/// Restores the online actor (and proxy, if present). The actor kind is
/// read from the stored parameter names; neuron constants come from `cfg`.
pub fn load_checkpoint(cfg: &RunConfig, path: &Path) -> Result<LoadedCheckpoint> {
    let all: ParamSet<f64> = read_checkpoint(BufReader::new(File::open(path)?))?;
    let actor_params = all.strip_prefix("actor.");
    if actor_params.is_empty() {
        return Err(Error::Checkpoint(format!("{} holds no actor parameters", path.display())));
    }
    let kind = if actor_params.contains("enc.mu") { ActorKind::San } else { ActorKind::Ann };
    let actor = Actor::from_params(kind, &cfg.san_for_env()?, &actor_params)?;
    let proxy_params = all.strip_prefix("proxy.");
    let proxy = if proxy_params.is_empty() {
        None
    } else {
        let layers = proxy_params.len() / 2;
        Some(Mlp::from_params(proxy_params, &policy_activations(layers.saturating_sub(1)))?)
    };
    let env = make_env(&cfg.env)?;
    if actor.obs_dim() != env.spec().obs_dim || actor.act_dim() != env.spec().act_dim {
        return Err(Error::structural(format!(
            "checkpoint actor maps {} → {} but {} needs {} → {}",
            actor.obs_dim(),
            actor.act_dim(),
            cfg.env,
            env.spec().obs_dim,
            env.spec().act_dim
        )));
    }
    Ok(LoadedCheckpoint { actor, proxy })
}

/// Deterministic evaluation of a stored actor; writes `eval.csv` to `cfg.out_dir`.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path) -> Result<EvalRound> {
    let actor = load_checkpoint(cfg, checkpoint)?.actor;
    let mut env = make_env(&cfg.env)?;
    let spec = env.spec().clone();
    let mut rng = seeding::stream(cfg.seed, seeding::EVAL);
    let mut episodes = Vec::with_capacity(cfg.eval_episodes);
    for _ in 0..cfg.eval_episodes {
        episodes.push(episode_rollout(env.as_mut(), |obs, _| Ok(spec.scale_action(&act_one(&actor, obs)?)), &mut rng, true)?);
    }
    let round = EvalRound { env_step: 0, episodes };
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_eval_csv(&cfg.out_dir.join("eval.csv"), &round)?;
    Ok(round)
}

pub(crate) fn act_one(actor: &Actor<f64>, obs: &[f64]) -> Result<Vec<f64>> {
    Ok(actor.act(&crate::nn::Tensor::matrix(1, obs.len(), obs.to_vec())?)?.into_data())
}

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use super::{act_one, load_checkpoint};
use crate::analysis::{drift_experiment, jump_metric, DriftConfig, DriftTrace, ProxyFitting};
use crate::config::RunConfig;
use crate::envs::make_env;
use crate::nn::{OptimState, Tensor};
use crate::rl::{continuous_policy, fit_proxy, output_gap, Actor, TargetActor, TargetKind};
use crate::seeding;
use crate::snn::San;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftKindSummary {
    pub jump_count: usize,
    pub max_step_change: f64,
    /// Output gap to the online network on the probes after the last round.
    pub final_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftSummary {
    pub delta: f64,
    pub steps: usize,
    pub tau: f64,
    pub kinds: BTreeMap<String, DriftKindSummary>,
}

/// Rolls out `actor` with exploration noise for `steps` environment steps
/// and returns the visited states as rows.
pub fn collect_states<R: Rng + ?Sized>(cfg: &RunConfig, actor: &Actor<f64>, steps: usize, rng: &mut R) -> Result<Tensor<f64>> {
    let mut env = make_env(&cfg.env)?;
    let spec = env.spec().clone();
    let normal = rand_distr::Normal::new(0.0, cfg.td3.exploration_noise_std.max(1e-12)).map_err(|e| Error::Config(e.to_string()))?;
    let mut env_rng = seeding::stream(cfg.seed, seeding::ENV);
    let mut obs = env.reset(&mut env_rng);
    let mut data = Vec::with_capacity(steps * spec.obs_dim);
    for _ in 0..steps {
        data.extend_from_slice(&obs);
        let mut a = act_one(actor, &obs)?;
        for x in &mut a {
            *x = (*x + rand_distr::Distribution::sample(&normal, rng)).clamp(-1.0, 1.0);
        }
        let out = env.step(&spec.scale_action(&a));
        obs = if out.done || out.truncated { env.reset(&mut env_rng) } else { out.obs };
    }
    Tensor::matrix(steps, spec.obs_dim, data)
}

pub(crate) fn sample_rows<R: Rng + ?Sized>(pool: &Tensor<f64>, n: usize, rng: &mut R) -> Result<Tensor<f64>> {
    let mut data = Vec::with_capacity(n * pool.cols());
    for _ in 0..n {
        data.extend_from_slice(pool.row(rng.random_range(0..pool.rows())));
    }
    Tensor::matrix(n, pool.cols(), data)
}

/// Frozen online networks and the states a drift experiment runs on.
pub struct DriftInputs<'a> {
    pub online: &'a Actor<f64>,
    /// Continuous network followed by the ANN Polyak trace; fitted to `online` when absent.
    pub ann_online: Option<Actor<f64>>,
    /// States the proxy is fitted on.
    pub pool: &'a Tensor<f64>,
    pub probes: &'a Tensor<f64>,
}

/// Runs every kind in `cfg.drift.kinds` against the frozen online networks.
/// Targets start from random initialisations; the ANN Polyak target and the
/// proxy share theirs. Jumps are counted at `delta_factor` times the ANN
/// Polyak trace's largest step when that trace is present.
pub fn run_drift(cfg: &RunConfig, inputs: DriftInputs<'_>) -> Result<(Vec<DriftTrace>, DriftSummary)> {
    let DriftInputs { online, ann_online, pool, probes } = inputs;
    if cfg.drift.kinds.is_empty() {
        return Err(Error::Config("drift.kinds is empty".into()));
    }
    let mut rng = seeding::stream(cfg.seed, seeding::DRIFT);
    let dcfg = DriftConfig {
        steps: cfg.drift.steps,
        tau: cfg.td3.tau,
        proxy_iters: cfg.td3.proxy_iters,
        batch_size: cfg.td3.batch_size,
    };
    let (obs, act) = (online.obs_dim(), online.act_dim());
    let hidden = match online {
        Actor::San(s) => s.config().hidden.clone(),
        Actor::Ann(m) => m.widths()[1..m.widths().len() - 1].to_vec(),
    };
    let ann_start = continuous_policy(obs, act, &hidden, &mut rng)?;
    let san_start = match online {
        Actor::San(s) => Some(San::new(s.config(), &mut rng)?),
        Actor::Ann(_) => None,
    };

    let mut traces = Vec::new();
    for &kind in &cfg.drift.kinds {
        let trace = match kind {
            TargetKind::AnnPolyak => {
                let ann_online = match (online, &ann_online) {
                    (Actor::Ann(_), _) => online.clone(),
                    (Actor::San(_), Some(a)) => a.clone(),
                    (Actor::San(_), None) => {
                        let mut net = continuous_policy(obs, act, &hidden, &mut rng)?;
                        let mut opt = OptimState::adam(cfg.td3.proxy_lr);
                        let n = cfg.td3.batch_size;
                        fit_proxy(&mut net, &mut opt, online, cfg.drift.ann_fit_iters.max(1), || sample_rows(pool, n, &mut rng))?;
                        Actor::Ann(net)
                    }
                };
                let target = TargetActor::Polyak(Actor::Ann(ann_start.clone()));
                drift_experiment::<f64, seeding::Rng>(kind, &ann_online, target, probes, &dcfg, None)?
            }
            TargetKind::SnnPolyak => {
                let Some(start) = &san_start else {
                    return Err(Error::Config("snn_polyak drift needs a spiking online actor".into()));
                };
                let target = TargetActor::Polyak(Actor::San(start.clone()));
                drift_experiment::<f64, seeding::Rng>(kind, online, target, probes, &dcfg, None)?
            }
            TargetKind::Proxy => {
                let mut proxy_rng = seeding::stream(cfg.seed, seeding::PROXY);
                let fitting = ProxyFitting {
                    pool,
                    opt: OptimState::with_kind(cfg.drift.proxy_optimizer, cfg.drift.proxy_step(cfg.td3.tau)),
                    rng: &mut proxy_rng,
                };
                drift_experiment(kind, online, TargetActor::Proxy(ann_start.clone()), probes, &dcfg, Some(fitting))?
            }
        };
        traces.push(trace);
    }

    let ann_max = traces
        .iter()
        .find(|t| t.kind == TargetKind::AnnPolyak && t.rows.len() >= 2)
        .map(|t| jump_metric(t, f64::INFINITY).map(|(_, m)| m))
        .transpose()?;
    let delta = ann_max.map_or(cfg.drift.delta, |m| cfg.drift.delta_factor * m);
    let online_out = online.act(probes)?.to_f64_vec();
    let mut kinds = BTreeMap::new();
    for trace in &traces {
        let (jump_count, max_step_change) = if trace.rows.len() >= 2 { jump_metric(trace, delta)? } else { (0, 0.0) };
        let last = trace.rows.last().expect("row 0 is always present");
        let final_gap = final_gap(last, &online_out, probes.rows(), act)?;
        kinds.insert(trace.kind.name().to_string(), DriftKindSummary { jump_count, max_step_change, final_gap });
    }
    Ok((traces, DriftSummary { delta, steps: cfg.drift.steps, tau: cfg.td3.tau, kinds }))
}

/// Drift experiment from the command line. The online spiking actor comes
/// from `checkpoint`, or is freshly initialised when `random_init` is set;
/// the ANN Polyak trace follows the checkpoint's proxy when it has one.
/// States come from rollouts of the online actor with exploration noise,
/// and the probes are drawn from them once. Writes `drift_<kind>.csv` per
/// kind and `drift_summary.json` to `cfg.out_dir`.
pub fn cmd_drift(cfg: &RunConfig, checkpoint: Option<&Path>, random_init: bool) -> Result<DriftSummary> {
    let (online, stored_proxy) = match (checkpoint, random_init) {
        (Some(p), _) => {
            let c = load_checkpoint(cfg, p)?;
            (c.actor, c.proxy)
        }
        (None, true) => (Actor::new(cfg.actor, &cfg.san_for_env()?, &mut seeding::stream(cfg.seed, seeding::INIT))?, None),
        (None, false) => return Err(Error::Config("drift needs a checkpoint or random initialisation".into())),
    };
    let pool = collect_states(cfg, &online, cfg.drift.collect_steps.max(1), &mut seeding::stream(cfg.seed, seeding::EXPLORE))?;
    let probes = sample_rows(&pool, cfg.drift.probes, &mut seeding::stream(cfg.seed, seeding::BUFFER))?;
    let inputs = DriftInputs { online: &online, ann_online: stored_proxy.map(Actor::Ann), pool: &pool, probes: &probes };
    let (traces, summary) = run_drift(cfg, inputs)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    for trace in &traces {
        trace.write_csv(BufWriter::new(File::create(cfg.out_dir.join(format!("drift_{}.csv", trace.kind.name())))?))?;
    }
    std::fs::write(cfg.out_dir.join("drift_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

fn final_gap(last: &[f64], online: &[f64], rows: usize, cols: usize) -> Result<f64> {
    output_gap(&Tensor::matrix(rows, cols, last.to_vec())?, &Tensor::matrix(rows, cols, online.to_vec())?)
}


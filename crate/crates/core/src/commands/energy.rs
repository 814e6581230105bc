use std::path::Path;

use crate::analysis::{energy_estimate, san_energy, EnergyRecord, EnergyReport, NetKind};
use crate::config::RunConfig;
use crate::envs::{episode_rollout, make_env};
use crate::rl::Actor;
use crate::seeding;
use crate::Result;

use super::load_checkpoint;

/// Per-inference energy of `actor`, averaged over deterministic episodes.
pub fn measure_energy(cfg: &RunConfig, actor: &Actor<f64>) -> Result<EnergyReport> {
    let convention = cfg.energy.flop_convention;
    match actor {
        Actor::Ann(net) => energy_estimate(NetKind::Ann, EnergyRecord::Ann { widths: net.widths() }, convention),
        Actor::San(san) => {
            let mut env = make_env(&cfg.env)?;
            let spec = env.spec().clone();
            let mut rng = seeding::stream(cfg.seed, seeding::EVAL);
            let mut counts = vec![0u64; san.config().population_sizes().len()];
            let mut inferences = 0u64;
            for _ in 0..cfg.energy.episodes {
                episode_rollout(
                    env.as_mut(),
                    |obs, _| {
                        let x = crate::nn::Tensor::matrix(1, obs.len(), obs.to_vec())?;
                        let (a, state) = san.forward(&x)?;
                        counts.iter_mut().zip(&state.spike_counts).for_each(|(c, s)| *c += s);
                        inferences += 1;
                        Ok(spec.scale_action(a.data()))
                    },
                    &mut rng,
                    true,
                )?;
            }
            san_energy(san.config(), &counts, inferences, convention)
        }
    }
}

/// Loads a checkpoint, measures its energy and writes `energy.json` to `cfg.out_dir`.
pub fn cmd_energy(cfg: &RunConfig, checkpoint: &Path) -> Result<EnergyReport> {
    let actor = load_checkpoint(cfg, checkpoint)?.actor;
    let report = measure_energy(cfg, &actor)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("energy.json"), report.to_json()?)?;
    Ok(report)
}

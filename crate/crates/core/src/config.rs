//! Run configuration: a TOML file whose every key has a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{FlopConvention, StdConvention};
use crate::envs::make_env;
use crate::nn::OptimKind;
use crate::rl::{ActorKind, TargetKind, Td3Config};
use crate::snn::SanConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftSection {
    pub kinds: Vec<TargetKind>,
    /// Maintenance rounds per trace.
    pub steps: usize,
    pub probes: usize,
    /// Environment steps collected with the online actor to fill the state pool.
    pub collect_steps: usize,
    /// Adam iterations fitting a continuous online network when the checkpoint has none.
    pub ann_fit_iters: usize,
    /// Jump threshold as a multiple of the ANN Polyak trace's largest step.
    pub delta_factor: f64,
    /// Threshold used when no ANN Polyak trace is requested.
    pub delta: f64,
    /// Proxy maintenance rule during drift traces. The default is plain
    /// gradient descent with step `proxy_lr`, or tau / 2 when unset.
    pub proxy_optimizer: OptimKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proxy_lr: Option<f64>,
}

impl DriftSection {
    pub fn proxy_step(&self, tau: f64) -> f64 {
        self.proxy_lr.unwrap_or(tau / 2.0)
    }
}

impl Default for DriftSection {
    fn default() -> Self {
        Self {
            kinds: TargetKind::ALL.to_vec(),
            steps: 1000,
            probes: 8,
            collect_steps: 2000,
            ann_fit_iters: 2000,
            delta_factor: 10.0,
            delta: 0.01,
            proxy_optimizer: OptimKind::Sgd,
            proxy_lr: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergySection {
    pub episodes: usize,
    pub flop_convention: FlopConvention,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self { episodes: 10, flop_convention: FlopConvention::Mac }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub std_convention: StdConvention,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { std_convention: StdConvention::Sample }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub env: String,
    pub actor: ActorKind,
    pub seed: u64,
    pub total_steps: usize,
    /// Environment steps between evaluations; 0 evaluates only at the end.
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub out_dir: PathBuf,
    pub san: SanConfig,
    pub td3: Td3Config,
    pub drift: DriftSection,
    pub energy: EnergySection,
    pub analysis: AnalysisSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: "pendulum".into(),
            actor: ActorKind::San,
            seed: 0,
            total_steps: 150_000,
            eval_interval: 5000,
            eval_episodes: 10,
            out_dir: PathBuf::from("runs/default"),
            san: SanConfig::default(),
            td3: Td3Config::default(),
            drift: DriftSection::default(),
            energy: EnergySection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SAN configuration with the environment's dimensions filled in.
    pub fn san_for_env(&self) -> Result<SanConfig> {
        let env = make_env(&self.env)?;
        Ok(self.san.clone().with_dims(env.spec().obs_dim, env.spec().act_dim))
    }

    pub fn validate(&self) -> Result<()> {
        self.san_for_env()?.validate()?;
        self.td3.validate()?;
        let expected = match self.actor {
            ActorKind::Ann => [TargetKind::AnnPolyak, TargetKind::Proxy],
            ActorKind::San => [TargetKind::SnnPolyak, TargetKind::Proxy],
        };
        if !expected.contains(&self.td3.target_kind) {
            return Err(Error::Config(format!(
                "td3.target_kind = {:?} cannot be used with actor = {:?}",
                self.td3.target_kind.name(),
                self.actor
            )));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be at least 1".into()));
        }
        if self.drift.probes == 0 {
            return Err(Error::Config("drift.probes must be at least 1".into()));
        }
        if let Some(lr) = self.drift.proxy_lr.filter(|lr| !(*lr > 0.0)) {
            return Err(Error::Config(format!("drift.proxy_lr must be positive, got {lr}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn drift_proxy_step_defaults_to_half_tau() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.drift.proxy_optimizer, OptimKind::Sgd);
        assert_eq!(cfg.drift.proxy_step(0.005), 0.0025);
        let cfg = RunConfig::from_toml_str("[drift]\nproxy_lr = 0.01\n").unwrap();
        assert_eq!(cfg.drift.proxy_step(0.005), 0.01);
        assert!(RunConfig::from_toml_str("[drift]\nproxy_lr = -1.0\n").is_err());
    }

    #[test]
    fn overrides_and_round_trip() {
        let text = "seed = 7\nenv = \"double_integrator\"\n[san]\nneuron = \"clif\"\nhidden = [16, 8]\n[td3]\ntarget_kind = \"snn_polyak\"\nproxy_iters = 3\n";
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!((cfg.seed, cfg.san.hidden.clone(), cfg.td3.proxy_iters), (7, vec![16, 8], 3));
        let again = RunConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_name_the_key() {
        for text in ["sede = 1", "[td3]\ngama = 0.5", "[san]\nobs_dim = 3"] {
            match RunConfig::from_toml_str(text) {
                Err(Error::Config(m)) => assert!(m.contains("unknown field"), "{m}"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in ["[td3]\ngamma = 0.0", "[td3]\ntau = 2.0", "[san]\ntimesteps = 0", "env = \"hopper\"", "actor = \"ann\"\n[td3]\ntarget_kind = \"snn_polyak\""] {
            assert!(matches!(RunConfig::from_toml_str(text), Err(Error::Config(_))), "{text}");
        }
    }
}

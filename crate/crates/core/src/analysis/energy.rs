use serde::{Deserialize, Serialize};

use crate::snn::{SanConfig, SanState};
use crate::{Error, Result};

pub const FLOP_ENERGY_PJ: f64 = 12.5;
pub const SOP_ENERGY_FJ: f64 = 77.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Ann,
    San,
}

/// How a multiply-accumulate is billed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FlopConvention {
    /// One FLOP per multiply-accumulate.
    #[default]
    Mac,
    /// A multiply and an add per multiply-accumulate.
    MulAdd,
}

impl FlopConvention {
    fn per_mac(self) -> f64 {
        match self {
            FlopConvention::Mac => 1.0,
            FlopConvention::MulAdd => 2.0,
        }
    }
}

/// Operation counts and energy per inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub net_kind: NetKind,
    pub flop_convention: FlopConvention,
    pub flops: f64,
    pub sops: f64,
    pub flop_energy_pj: f64,
    pub sop_energy_fj: f64,
    pub total_nj: f64,
    /// Inferences the counts were averaged over.
    pub inferences: u64,
    /// Spikes per neuron per timestep (spiking actors only).
    pub spike_rate: Option<f64>,
}

pub fn total_nj(flops: f64, sops: f64) -> f64 {
    flops * FLOP_ENERGY_PJ * 1e-3 + sops * SOP_ENERGY_FJ * 1e-6
}

impl EnergyReport {
    pub fn from_counts(net_kind: NetKind, convention: FlopConvention, flops: f64, sops: f64, inferences: u64) -> Self {
        Self {
            net_kind,
            flop_convention: convention,
            flops,
            sops,
            flop_energy_pj: FLOP_ENERGY_PJ,
            sop_energy_fj: SOP_ENERGY_FJ,
            total_nj: total_nj(flops, sops),
            inferences,
            spike_rate: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// What an energy estimate is computed from.
pub enum EnergyRecord<'a> {
    /// Layer widths of a dense network, input first.
    Ann { widths: &'a [usize] },
    /// Spike record of one or more spiking forward passes.
    San { cfg: &'a SanConfig, state: Option<&'a SanState<f64>> },
}

/// Dense networks: one MAC per weight; biases and activations are not billed.
/// Spiking networks: one SOP per spike per outgoing synapse, plus FLOPs for
/// the Gaussian encoder (subtract, divide, square, exp) and the decoder
/// (one MAC per output neuron and a tanh per action).
pub fn energy_estimate(kind: NetKind, record: EnergyRecord<'_>, convention: FlopConvention) -> Result<EnergyReport> {
    match (kind, record) {
        (NetKind::Ann, EnergyRecord::Ann { widths }) => {
            let macs: usize = widths.windows(2).map(|w| w[0] * w[1]).sum();
            Ok(EnergyReport::from_counts(NetKind::Ann, convention, macs as f64 * convention.per_mac(), 0.0, 1))
        }
        (NetKind::San, EnergyRecord::San { cfg, state }) => {
            let state = state.ok_or_else(|| Error::state("spiking energy estimate needs a recorded spike state"))?;
            san_energy(cfg, &state.spike_counts, state.samples.len() as u64, convention)
        }
        _ => Err(Error::Config("energy record does not match the network kind".into())),
    }
}

/// Spiking-actor estimate from per-population spike totals accumulated over `inferences` forward passes.
pub fn san_energy(cfg: &SanConfig, spike_counts: &[u64], inferences: u64, convention: FlopConvention) -> Result<EnergyReport> {
    let sizes = cfg.population_sizes();
    if inferences == 0 || spike_counts.len() != sizes.len() {
        return Err(Error::state("spike record is empty or does not match the network"));
    }
    let n = inferences as f64;
    let fan_out: Vec<usize> = sizes.iter().skip(1).copied().chain([cfg.output_size()]).collect();
    let sops: f64 = spike_counts.iter().zip(&fan_out).map(|(&c, &f)| c as f64 * f as f64).sum::<f64>() / n;
    let encoder = 4.0 * (cfg.obs_dim * cfg.enc_pop) as f64;
    let decoder = cfg.output_size() as f64 * convention.per_mac() + cfg.act_dim as f64;
    let mut report = EnergyReport::from_counts(NetKind::San, convention, encoder + decoder, sops, inferences);
    let slots = sizes.iter().sum::<usize>() as f64 * cfg.timesteps as f64 * n;
    report.spike_rate = Some(spike_counts.iter().sum::<u64>() as f64 / slots);
    Ok(report)
}

//! Target-drift traces, output gaps, energy estimates, APG and seed variance.

mod drift;
mod energy;
mod metrics;

pub use drift::{drift_experiment, gap_trace, jump_metric, DriftConfig, DriftTrace, ProxyFitting};
pub use energy::{energy_estimate, san_energy, total_nj, EnergyRecord, EnergyReport, FlopConvention, NetKind, FLOP_ENERGY_PJ, SOP_ENERGY_FJ};
pub use metrics::{apg, mean_std, seed_variance_summary, SeedTable, StdConvention};

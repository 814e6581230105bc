use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Average performance gain in percent: `(mean_env perf/baseline − 1)·100`.
pub fn apg(perf: &BTreeMap<String, f64>, baseline: &BTreeMap<String, f64>) -> Result<f64> {
    if perf.is_empty() {
        return Err(Error::structural("APG needs at least one environment"));
    }
    for k in perf.keys().chain(baseline.keys()) {
        if !perf.contains_key(k) || !baseline.contains_key(k) {
            return Err(Error::structural(format!("environment {k:?} missing from one side of the APG comparison")));
        }
    }
    let mut sum = 0.0;
    for (env, &p) in perf {
        let b = baseline[env];
        if b == 0.0 {
            return Err(Error::numeric(format!("zero baseline for {env:?}")));
        }
        sum += p / b;
    }
    Ok((sum / perf.len() as f64 - 1.0) * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StdConvention {
    /// `n − 1` denominator.
    #[default]
    Sample,
    /// `n` denominator.
    Population,
}

pub fn mean_std(xs: &[f64], convention: StdConvention) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::state("standard deviation needs at least two values"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let denom = match convention {
        StdConvention::Sample => n - 1.0,
        StdConvention::Population => n,
    };
    Ok((mean, (ss / denom).sqrt()))
}

/// Returns per method → env → seed.
pub type SeedTable = BTreeMap<String, BTreeMap<String, BTreeMap<u64, f64>>>;

/// Per method: mean over environments of `std over seeds / |mean over seeds|`.
pub fn seed_variance_summary(table: &SeedTable, convention: StdConvention) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (method, envs) in table {
        if envs.is_empty() {
            return Err(Error::structural(format!("method {method:?} has no environments")));
        }
        let mut sum = 0.0;
        for (env, seeds) in envs {
            let xs: Vec<f64> = seeds.values().copied().collect();
            let (mean, std) = mean_std(&xs, convention)
                .map_err(|_| Error::state(format!("{method}/{env}: at least two seeds are required")))?;
            if std == 0.0 {
                continue;
            }
            if mean == 0.0 {
                return Err(Error::numeric(format!("{method}/{env}: zero mean return")));
            }
            sum += std / mean.abs();
        }
        out.insert(method.clone(), sum / envs.len() as f64);
    }
    Ok(out)
}

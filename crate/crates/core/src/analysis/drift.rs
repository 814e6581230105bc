use std::io::Write;

use rand::Rng;

use crate::nn::{polyak_update, OptimState, Tensor};
use crate::rl::{fit_proxy, output_gap, Actor, ActorKind, TargetActor, TargetKind};
use crate::{Error, Result, Scalar};

/// Target outputs on the probe states, one row per maintenance round.
/// Row 0 is the starting target; each row flattens `[probes × act_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTrace {
    pub kind: TargetKind,
    pub rows: Vec<Vec<f64>>,
}

impl DriftTrace {
    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["step".to_string()];
        header.extend((0..self.width()).map(|k| format!("dim_{k}")));
        out.write_record(&header)?;
        for (step, row) in self.rows.iter().enumerate() {
            let mut rec = vec![step.to_string()];
            rec.extend(row.iter().map(|x| x.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    pub steps: usize,
    pub tau: f64,
    /// Proxy gradient steps per round.
    pub proxy_iters: usize,
    /// States per proxy gradient step, drawn from the fitting pool.
    pub batch_size: usize,
}

/// Sampling pool for proxy fitting plus the optimizer that drives it.
pub struct ProxyFitting<'a, S, R: ?Sized> {
    pub pool: &'a Tensor<S>,
    pub opt: OptimState<S>,
    pub rng: &'a mut R,
}

fn sample_rows<S: Scalar, R: Rng + ?Sized>(pool: &Tensor<S>, n: usize, rng: &mut R) -> Result<Tensor<S>> {
    if pool.rows() == 0 {
        return Err(Error::state("empty proxy fitting pool"));
    }
    let mut data = Vec::with_capacity(n * pool.cols());
    for _ in 0..n {
        data.extend_from_slice(pool.row(rng.random_range(0..pool.rows())));
    }
    Tensor::matrix(n, pool.cols(), data)
}

/// Maintains `target` against a frozen `online` actor for `cfg.steps` rounds,
/// recording its outputs on `probes` after every round.
pub fn drift_experiment<S: Scalar, R: Rng + ?Sized>(
    kind: TargetKind,
    online: &Actor<S>,
    mut target: TargetActor<S>,
    probes: &Tensor<S>,
    cfg: &DriftConfig,
    fitting: Option<ProxyFitting<'_, S, R>>,
) -> Result<DriftTrace> {
    match (kind, &target, online.kind()) {
        (TargetKind::AnnPolyak, TargetActor::Polyak(t), ActorKind::Ann) if t.kind() == ActorKind::Ann => {}
        (TargetKind::SnnPolyak, TargetActor::Polyak(t), ActorKind::San) if t.kind() == ActorKind::San => {}
        (TargetKind::Proxy, TargetActor::Proxy(_), _) => {}
        _ => return Err(Error::Config(format!("{} drift needs a matching online/target pair", kind.name()))),
    }
    let tau = S::of(cfg.tau);
    let mut fitting = fitting;
    if kind == TargetKind::Proxy && fitting.is_none() {
        return Err(Error::Config("proxy drift needs a fitting pool and optimizer".into()));
    }
    let mut rows = Vec::with_capacity(cfg.steps + 1);
    rows.push(target.act(probes)?.to_f64_vec());
    for _ in 0..cfg.steps {
        match &mut target {
            TargetActor::Polyak(t) => polyak_update(t.params_mut(), online.params(), tau)?,
            TargetActor::Proxy(p) => {
                let f = fitting.as_mut().expect("checked above");
                let (pool, rng, n) = (f.pool, &mut *f.rng, cfg.batch_size);
                fit_proxy(p, &mut f.opt, online, cfg.proxy_iters, || sample_rows(pool, n, rng))?;
            }
        }
        rows.push(target.act(probes)?.to_f64_vec());
    }
    Ok(DriftTrace { kind, rows })
}

/// Counts consecutive-row changes (max-abs) above `delta`; also returns the largest change.
pub fn jump_metric(trace: &DriftTrace, delta: f64) -> Result<(usize, f64)> {
    if trace.rows.len() < 2 {
        return Err(Error::state("jump metric needs at least two trace rows"));
    }
    let mut jumps = 0;
    let mut max_change = 0.0f64;
    for pair in trace.rows.windows(2) {
        let change = pair[0].iter().zip(&pair[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change > delta {
            jumps += 1;
        }
        max_change = max_change.max(change);
    }
    Ok((jumps, max_change))
}

/// Mean squared output gap between a target network and the online actor.
pub fn gap_trace<S: Scalar>(target: &TargetActor<S>, online: &Actor<S>, states: &Tensor<S>) -> Result<f64> {
    Ok(output_gap(&target.act(states)?, &online.act(states)?)?.as_f64())
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coding::{decode, encode, encode_backward};
use super::neuron::{clif_update, lif_update, surrogate_grad, ClifParams, LifParams, SurrogateSpec};
use crate::nn::{axpy, dot, ParamSet, Tensor};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronKind {
    Lif,
    Clif,
}

/// Architecture and neuron constants of a spiking actor network.
///
/// `obs_dim` and `act_dim` come from the environment and are not read from
/// configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SanConfig {
    pub timesteps: usize,
    #[serde(skip)]
    pub obs_dim: usize,
    #[serde(skip)]
    pub act_dim: usize,
    /// Encoder neurons per observation dimension.
    pub enc_pop: usize,
    pub hidden: Vec<usize>,
    /// Output neurons per action dimension.
    pub out_pop: usize,
    pub neuron: NeuronKind,
    pub lambda_decay: f64,
    pub v_th: f64,
    pub v_reset: f64,
    pub current_decay: f64,
    pub voltage_decay: f64,
    pub surrogate_width: f64,
    /// Receptive-field centres start evenly spaced over `[enc_mean_low, enc_mean_high]`.
    pub enc_mean_low: f64,
    pub enc_mean_high: f64,
    pub enc_std: f64,
    /// Lower clamp applied to learned receptive-field widths after each update.
    pub min_sigma: f64,
}

impl Default for SanConfig {
    fn default() -> Self {
        Self {
            timesteps: 5,
            obs_dim: 1,
            act_dim: 1,
            enc_pop: 10,
            hidden: vec![256, 256],
            out_pop: 10,
            neuron: NeuronKind::Lif,
            lambda_decay: 0.75,
            v_th: 0.5,
            v_reset: 0.0,
            current_decay: 0.5,
            voltage_decay: 0.75,
            surrogate_width: 1.0,
            enc_mean_low: -3.0,
            enc_mean_high: 3.0,
            enc_std: 0.15f64.sqrt(),
            min_sigma: 1e-2,
        }
    }
}

impl SanConfig {
    pub fn with_dims(mut self, obs_dim: usize, act_dim: usize) -> Self {
        self.obs_dim = obs_dim;
        self.act_dim = act_dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.timesteps == 0 {
            return Err(Error::Config("timesteps must be at least 1".into()));
        }
        let widths = [self.obs_dim, self.act_dim, self.enc_pop, self.out_pop];
        if widths.iter().chain(&self.hidden).any(|&w| w == 0) || self.hidden.is_empty() {
            return Err(Error::Config(format!("all SAN widths must be ≥ 1: {self:?}")));
        }
        if !(self.enc_std > 0.0) || !(self.min_sigma > 0.0) {
            return Err(Error::Config("receptive-field widths must be positive".into()));
        }
        self.lif::<f64>().validate()?;
        self.clif::<f64>().validate()?;
        SurrogateSpec::rectangular(self.surrogate_width)?;
        Ok(())
    }

    pub fn lif<S: Scalar>(&self) -> LifParams<S> {
        LifParams { lambda_decay: S::of(self.lambda_decay), v_th: S::of(self.v_th), v_reset: S::of(self.v_reset) }
    }

    pub fn clif<S: Scalar>(&self) -> ClifParams<S> {
        ClifParams {
            current_decay: S::of(self.current_decay),
            voltage_decay: S::of(self.voltage_decay),
            v_th: S::of(self.v_th),
            v_reset: S::of(self.v_reset),
        }
    }

    /// Sizes of the spiking populations: encoder first, then the hidden layers.
    pub fn population_sizes(&self) -> Vec<usize> {
        std::iter::once(self.obs_dim * self.enc_pop).chain(self.hidden.iter().copied()).collect()
    }

    pub fn output_size(&self) -> usize {
        self.act_dim * self.out_pop
    }

    /// Reads the architecture from parameter shapes, keeping neuron constants from `self`.
    pub fn infer_from_params<S: Scalar>(&self, params: &ParamSet<S>) -> Result<Self> {
        let mu = params.value("enc.mu")?;
        let dec = params.value("dec.w")?;
        if mu.rank() != 2 || dec.rank() != 2 {
            return Err(Error::structural("encoder/decoder parameters must be matrices"));
        }
        let mut hidden = Vec::new();
        while let Ok(w) = params.value(&format!("l{}.w", hidden.len())) {
            hidden.push(w.cols());
        }
        let mut cfg = self.clone();
        cfg.obs_dim = mu.shape()[0];
        cfg.enc_pop = mu.shape()[1];
        cfg.act_dim = dec.shape()[0];
        cfg.out_pop = dec.shape()[1];
        cfg.hidden = hidden;
        Ok(cfg)
    }
}

/// Recorded dynamics of one spiking population over all timesteps, `[T × n]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTrace<S> {
    pub size: usize,
    pub kind: NeuronKind,
    /// Input current I.
    pub current: Vec<S>,
    /// Synaptic current state (CLIF populations only).
    pub synaptic: Vec<S>,
    /// Pre-spike potential H.
    pub h: Vec<S>,
    /// Spikes S ∈ {0, 1}.
    pub s: Vec<S>,
    /// Post-reset potential V.
    pub v: Vec<S>,
}

impl<S: Scalar> PopulationTrace<S> {
    fn new(size: usize, kind: NeuronKind, timesteps: usize) -> Self {
        let n = size * timesteps;
        Self {
            size,
            kind,
            current: vec![S::zero(); n],
            synaptic: if kind == NeuronKind::Clif { vec![S::zero(); n] } else { Vec::new() },
            h: vec![S::zero(); n],
            s: vec![S::zero(); n],
            v: vec![S::zero(); n],
        }
    }

    pub fn spikes_at(&self, t: usize) -> &[S] {
        &self.s[t * self.size..(t + 1) * self.size]
    }

    pub fn spike_count(&self) -> u64 {
        self.s.iter().filter(|&&x| x == S::one()).count() as u64
    }
}

/// Everything recorded while unrolling one input.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrace<S> {
    pub obs: Vec<S>,
    /// Encoder activations (constant input current of the encoder neurons).
    pub encoding: Vec<S>,
    pub populations: Vec<PopulationTrace<S>>,
    /// Final accumulated membrane of the non-firing output layer.
    pub out_membrane: Vec<S>,
    pub action: Vec<S>,
}

/// Batch of recorded forward passes plus spike bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SanState<S> {
    pub samples: Vec<SampleTrace<S>>,
    /// Total spikes per population, summed over timesteps and samples.
    pub spike_counts: Vec<u64>,
    pub timesteps: usize,
}

impl<S: Scalar> SanState<S> {
    pub fn total_spikes(&self) -> u64 {
        self.spike_counts.iter().sum()
    }

    /// Spikes per neuron per timestep, over all populations and samples.
    pub fn spike_rate(&self) -> f64 {
        let neurons: usize = self.samples.first().map_or(0, |s| s.populations.iter().map(|p| p.size).sum());
        let slots = neurons * self.timesteps * self.samples.len();
        if slots == 0 {
            return 0.0;
        }
        self.total_spikes() as f64 / slots as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    mu: usize,
    sigma: usize,
    layers: Vec<(usize, usize)>,
    out_w: usize,
    out_b: usize,
    dec_w: usize,
}

/// Population-coded spiking actor network.
///
/// Observations are encoded by Gaussian receptive fields whose activations
/// drive a population of LIF encoder neurons as a constant current. Spikes
/// propagate through the hidden layers with `I = S·W + b`. The output layer
/// integrates its current without leak, threshold or reset, and each action is
/// decoded as `tanh` of a weighted mean membrane over its output population.
#[derive(Debug, Clone, PartialEq)]
pub struct San<S> {
    cfg: SanConfig,
    params: ParamSet<S>,
    layout: Layout,
    encoder_lif: LifParams<S>,
    lif: LifParams<S>,
    clif: ClifParams<S>,
    surrogate: SurrogateSpec<S>,
}

impl<S: Scalar> San<S> {
    /// Network with all parameters zero except the receptive fields.
    pub fn zeros(cfg: &SanConfig) -> Result<Self> {
        cfg.validate()?;
        let sizes = cfg.population_sizes();
        let mut params = ParamSet::new();
        let pop = cfg.enc_pop;
        let mut mu = Vec::with_capacity(cfg.obs_dim * pop);
        for _ in 0..cfg.obs_dim {
            for j in 0..pop {
                let frac = if pop == 1 { 0.5 } else { j as f64 / (pop - 1) as f64 };
                mu.push(S::of(cfg.enc_mean_low + frac * (cfg.enc_mean_high - cfg.enc_mean_low)));
            }
        }
        params.insert("enc.mu", Tensor::new(vec![cfg.obs_dim, pop], mu)?);
        params.insert("enc.sigma", Tensor::full(vec![cfg.obs_dim, pop], S::of(cfg.enc_std)));
        for l in 0..cfg.hidden.len() {
            params.insert(format!("l{l}.w"), Tensor::zeros(vec![sizes[l], sizes[l + 1]]));
            params.insert(format!("l{l}.b"), Tensor::zeros(vec![sizes[l + 1]]));
        }
        let top = *sizes.last().expect("hidden layers");
        params.insert("out.w", Tensor::zeros(vec![top, cfg.output_size()]));
        params.insert("out.b", Tensor::zeros(vec![cfg.output_size()]));
        params.insert("dec.w", Tensor::zeros(vec![cfg.act_dim, cfg.out_pop]));
        let layout = Layout {
            mu: params.index_of("enc.mu")?,
            sigma: params.index_of("enc.sigma")?,
            layers: (0..cfg.hidden.len())
                .map(|l| Ok((params.index_of(&format!("l{l}.w"))?, params.index_of(&format!("l{l}.b"))?)))
                .collect::<Result<_>>()?,
            out_w: params.index_of("out.w")?,
            out_b: params.index_of("out.b")?,
            dec_w: params.index_of("dec.w")?,
        };
        Ok(Self {
            cfg: cfg.clone(),
            params,
            layout,
            encoder_lif: cfg.lif(),
            lif: cfg.lif(),
            clif: cfg.clif(),
            surrogate: SurrogateSpec::rectangular(S::of(cfg.surrogate_width))?,
        })
    }

    /// Synaptic weights, biases and decoder weights from `U(±1/sqrt(fan_in))`.
    pub fn new<R: Rng + ?Sized>(cfg: &SanConfig, rng: &mut R) -> Result<Self> {
        let mut san = Self::zeros(cfg)?;
        let sizes = cfg.population_sizes();
        let mut fill = |params: &mut ParamSet<S>, idx: usize, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for x in params.by_index_mut(idx).value.data_mut() {
                *x = S::of(rng.random_range(-bound..=bound));
            }
        };
        let layout = san.layout.clone();
        for (l, &(w, b)) in layout.layers.iter().enumerate() {
            fill(&mut san.params, w, sizes[l]);
            fill(&mut san.params, b, sizes[l]);
        }
        let top = *sizes.last().expect("hidden layers");
        fill(&mut san.params, layout.out_w, top);
        fill(&mut san.params, layout.out_b, top);
        fill(&mut san.params, layout.dec_w, cfg.out_pop);
        Ok(san)
    }

    /// Rebuilds a network from stored parameters; names and shapes must match `cfg`.
    pub fn from_params(cfg: &SanConfig, params: &ParamSet<S>) -> Result<Self> {
        let mut san = Self::zeros(cfg)?;
        san.params.copy_values_from(params)?;
        Ok(san)
    }

    pub fn config(&self) -> &SanConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet<S> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<S> {
        &mut self.params
    }

    pub fn surrogate(&self) -> SurrogateSpec<S> {
        self.surrogate
    }

    fn population_kind(&self, p: usize) -> NeuronKind {
        if p == 0 {
            NeuronKind::Lif
        } else {
            self.cfg.neuron
        }
    }

    fn threshold_and_reset(&self, p: usize) -> (S, S) {
        match self.population_kind(p) {
            NeuronKind::Lif if p == 0 => (self.encoder_lif.v_th, self.encoder_lif.v_reset),
            NeuronKind::Lif => (self.lif.v_th, self.lif.v_reset),
            NeuronKind::Clif => (self.clif.v_th, self.clif.v_reset),
        }
    }

    /// Keeps learned receptive-field widths at or above `min_sigma`.
    pub fn clamp_sigma(&mut self) {
        let floor = S::of(self.cfg.min_sigma);
        for s in self.params.by_index_mut(self.layout.sigma).value.data_mut() {
            if !(*s >= floor) {
                *s = floor;
            }
        }
    }

    fn check_states(&self, states: &Tensor<S>) -> Result<()> {
        if states.rank() != 2 || states.cols() != self.cfg.obs_dim {
            return Err(Error::dim(format!(
                "SAN expects [batch × {}] states, got {:?}",
                self.cfg.obs_dim,
                states.shape()
            )));
        }
        Ok(())
    }

    fn step_population(&self, p: usize, t: usize, trace: &mut PopulationTrace<S>, current: &[S], v: &mut [S], c: &mut [S]) {
        let n = trace.size;
        let base = t * n;
        trace.current[base..base + n].copy_from_slice(current);
        match self.population_kind(p) {
            NeuronKind::Lif => {
                let params = if p == 0 { &self.encoder_lif } else { &self.lif };
                for i in 0..n {
                    let (h, s) = lif_update(params, &mut v[i], current[i]);
                    trace.h[base + i] = h;
                    trace.s[base + i] = s;
                    trace.v[base + i] = v[i];
                }
            }
            NeuronKind::Clif => {
                for i in 0..n {
                    let (h, s) = clif_update(&self.clif, &mut c[i], &mut v[i], current[i]);
                    trace.synaptic[base + i] = c[i];
                    trace.h[base + i] = h;
                    trace.s[base + i] = s;
                    trace.v[base + i] = v[i];
                }
            }
        }
    }

    /// `bias + Σ_{i spiking} W[i, :]`
    fn synaptic_current(weights: &[S], bias: &[S], spikes: &[S], out: &mut Vec<S>) {
        let fan_out = bias.len();
        out.clear();
        out.extend_from_slice(bias);
        for (i, &s) in spikes.iter().enumerate() {
            if s != S::zero() {
                axpy(S::one(), &weights[i * fan_out..(i + 1) * fan_out], out);
            }
        }
    }

    fn run_sample(&self, obs: &[S]) -> SampleTrace<S> {
        let t_steps = self.cfg.timesteps;
        let sizes = self.cfg.population_sizes();
        let p = &self.params;
        let mu = p.by_index(self.layout.mu).value.data();
        let sigma = p.by_index(self.layout.sigma).value.data();
        let encoding = encode(obs, mu, sigma, self.cfg.enc_pop);
        let mut populations: Vec<PopulationTrace<S>> = sizes
            .iter()
            .enumerate()
            .map(|(k, &n)| PopulationTrace::new(n, self.population_kind(k), t_steps))
            .collect();
        let mut v: Vec<Vec<S>> = sizes.iter().map(|&n| vec![S::zero(); n]).collect();
        let mut c: Vec<Vec<S>> = sizes.iter().map(|&n| vec![S::zero(); n]).collect();
        let mut out_membrane = vec![S::zero(); self.cfg.output_size()];
        let mut current = Vec::new();
        let out_w = p.by_index(self.layout.out_w).value.data();
        let out_b = p.by_index(self.layout.out_b).value.data();
        let top = sizes.len() - 1;
        for t in 0..t_steps {
            self.step_population(0, t, &mut populations[0], &encoding, &mut v[0], &mut c[0]);
            for (l, &(wi, bi)) in self.layout.layers.iter().enumerate() {
                let spikes = populations[l].spikes_at(t);
                Self::synaptic_current(p.by_index(wi).value.data(), p.by_index(bi).value.data(), spikes, &mut current);
                self.step_population(l + 1, t, &mut populations[l + 1], &current, &mut v[l + 1], &mut c[l + 1]);
            }
            Self::synaptic_current(out_w, out_b, populations[top].spikes_at(t), &mut current);
            axpy(S::one(), &current, &mut out_membrane);
        }
        let dec_w = p.by_index(self.layout.dec_w).value.data();
        let action = decode(&out_membrane, t_steps, dec_w, self.cfg.out_pop);
        SampleTrace { obs: obs.to_vec(), encoding, populations, out_membrane, action }
    }

    /// Unrolls every row of `states` for `timesteps` steps and records the dynamics.
    pub fn forward(&self, states: &Tensor<S>) -> Result<(Tensor<S>, SanState<S>)> {
        self.check_states(states)?;
        let samples: Vec<SampleTrace<S>> = (0..states.rows()).map(|r| self.run_sample(states.row(r))).collect();
        let mut spike_counts = vec![0u64; self.cfg.population_sizes().len()];
        let mut actions = Vec::with_capacity(samples.len() * self.cfg.act_dim);
        for s in &samples {
            for (count, pop) in spike_counts.iter_mut().zip(&s.populations) {
                *count += pop.spike_count();
            }
            actions.extend_from_slice(&s.action);
        }
        let actions = Tensor::matrix(samples.len(), self.cfg.act_dim, actions)?;
        Ok((actions, SanState { samples, spike_counts, timesteps: self.cfg.timesteps }))
    }

    /// Actions only.
    pub fn act(&self, states: &Tensor<S>) -> Result<Tensor<S>> {
        self.check_states(states)?;
        let mut actions = Vec::with_capacity(states.rows() * self.cfg.act_dim);
        for r in 0..states.rows() {
            actions.extend(self.run_sample(states.row(r)).action);
        }
        Tensor::matrix(states.rows(), self.cfg.act_dim, actions)
    }

    /// Backpropagation through the unrolled network with the rectangular
    /// surrogate standing in for `dS/dH`, including on the reset path.
    /// Accumulates parameter gradients and returns `∂L/∂states`.
    pub fn backward(&mut self, state: &SanState<S>, upstream: &Tensor<S>) -> Result<Tensor<S>> {
        if state.samples.is_empty() {
            return Err(Error::state("SAN backward called without a recorded forward pass"));
        }
        if state.timesteps != self.cfg.timesteps
            || state.samples[0].populations.len() != self.cfg.population_sizes().len()
        {
            return Err(Error::state("SAN state was recorded by a different architecture"));
        }
        if upstream.rows() != state.samples.len() || upstream.cols() != self.cfg.act_dim {
            return Err(Error::dim(format!(
                "upstream gradient {:?} for {} samples × {} actions",
                upstream.shape(),
                state.samples.len(),
                self.cfg.act_dim
            )));
        }
        let mut grads: Vec<Vec<S>> = self.params.iter().map(|(_, p)| vec![S::zero(); p.value.len()]).collect();
        let mut input_grad = Vec::with_capacity(state.samples.len() * self.cfg.obs_dim);
        for (r, sample) in state.samples.iter().enumerate() {
            input_grad.extend(self.backward_sample(sample, upstream.row(r), &mut grads));
        }
        for (i, g) in grads.iter().enumerate() {
            axpy(S::one(), g, self.params.by_index_mut(i).grad.data_mut());
        }
        Tensor::matrix(state.samples.len(), self.cfg.obs_dim, input_grad)
    }

    fn backward_sample(&self, sample: &SampleTrace<S>, upstream: &[S], grads: &mut [Vec<S>]) -> Vec<S> {
        let t_steps = self.cfg.timesteps;
        let inv_t = S::one() / S::of(t_steps as f64);
        let pop_out = self.cfg.out_pop;
        let p = &self.params;
        let dec_w = p.by_index(self.layout.dec_w).value.data();
        let out_w = p.by_index(self.layout.out_w).value.data();
        let sizes = self.cfg.population_sizes();
        let top = sizes.len() - 1;

        // decoder: m_j = Σ_k w_jk V_jk / T, a_j = tanh(m_j)
        let n_out = self.cfg.output_size();
        let mut g_out = vec![S::zero(); n_out];
        if upstream.iter().all(|&g| g == S::zero()) {
            return vec![S::zero(); self.cfg.obs_dim];
        }
        for j in 0..self.cfg.act_dim {
            let a = sample.action[j];
            let gm = upstream[j] * (S::one() - a * a);
            for k in 0..pop_out {
                let o = j * pop_out + k;
                grads[self.layout.dec_w][o] += gm * sample.out_membrane[o] * inv_t;
                g_out[o] = gm * dec_w[o] * inv_t;
            }
        }
        // every timestep's output current contributes to the final membrane
        let steps = S::of(t_steps as f64);
        axpy(steps, &g_out, &mut grads[self.layout.out_b]);
        let top_pop = &sample.populations[top];
        let n_top = sizes[top];
        for i in 0..n_top {
            let count: S = (0..t_steps).map(|t| top_pop.s[t * n_top + i]).sum();
            if count != S::zero() {
                axpy(count, &g_out, &mut grads[self.layout.out_w][i * n_out..(i + 1) * n_out]);
            }
        }
        let g_top: Vec<S> = (0..n_top).map(|i| dot(&out_w[i * n_out..(i + 1) * n_out], &g_out)).collect();
        let mut spatial: Vec<S> = (0..t_steps).flat_map(|_| g_top.iter().copied()).collect();

        let mut g_encoding = vec![S::zero(); sizes[0]];
        for pi in (0..=top).rev() {
            let pop = &sample.populations[pi];
            let n = pop.size;
            let kind = self.population_kind(pi);
            let (v_th, v_reset) = self.threshold_and_reset(pi);
            let (leak, current_decay) = match kind {
                NeuronKind::Lif if pi == 0 => (self.encoder_lif.lambda_decay, S::zero()),
                NeuronKind::Lif => (self.lif.lambda_decay, S::zero()),
                NeuronKind::Clif => (self.clif.voltage_decay, self.clif.current_decay),
            };
            let mut g_v_next = vec![S::zero(); n];
            let mut g_c_next = vec![S::zero(); n];
            let mut g_current = vec![S::zero(); n];
            let below = if pi > 0 { sizes[pi - 1] } else { 0 };
            let mut spatial_below = vec![S::zero(); t_steps * below];
            for t in (0..t_steps).rev() {
                let base = t * n;
                let mut any = false;
                for i in 0..n {
                    let h = pop.h[base + i];
                    let s = pop.s[base + i];
                    let g_v = g_v_next[i];
                    let g_s = spatial[base + i] + g_v * (v_reset - h);
                    let g_h = g_v * (S::one() - s) + g_s * surrogate_grad(h, v_th, &self.surrogate);
                    let g_i = match kind {
                        NeuronKind::Lif => g_h,
                        NeuronKind::Clif => {
                            let g_c = g_h + current_decay * g_c_next[i];
                            g_c_next[i] = g_c;
                            g_c
                        }
                    };
                    g_v_next[i] = leak * g_h;
                    g_current[i] = g_i;
                    any |= g_i != S::zero();
                }
                if !any {
                    continue;
                }
                if pi == 0 {
                    axpy(S::one(), &g_current, &mut g_encoding);
                    continue;
                }
                let (wi, bi) = self.layout.layers[pi - 1];
                axpy(S::one(), &g_current, &mut grads[bi]);
                let src = &sample.populations[pi - 1];
                let w = p.by_index(wi).value.data();
                for (k, &s) in src.spikes_at(t).iter().enumerate() {
                    if s != S::zero() {
                        axpy(S::one(), &g_current, &mut grads[wi][k * n..(k + 1) * n]);
                    }
                }
                for k in 0..below {
                    spatial_below[t * below + k] = dot(&w[k * n..(k + 1) * n], &g_current);
                }
            }
            spatial = spatial_below;
        }

        let mu = p.by_index(self.layout.mu).value.data();
        let sigma = p.by_index(self.layout.sigma).value.data();
        let (gm, gs) = if self.layout.mu < self.layout.sigma {
            let (a, b) = grads.split_at_mut(self.layout.sigma);
            (&mut a[self.layout.mu], &mut b[0])
        } else {
            let (a, b) = grads.split_at_mut(self.layout.mu);
            (&mut b[0], &mut a[self.layout.sigma])
        };
        encode_backward(&sample.obs, mu, sigma, &sample.encoding, &g_encoding, self.cfg.enc_pop, gm, gs)
    }

    pub fn cast<T: Scalar>(&self) -> Result<San<T>> {
        San::from_params(&self.cfg, &self.params.cast())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(neuron: NeuronKind) -> SanConfig {
        SanConfig { timesteps: 3, enc_pop: 3, hidden: vec![4, 3], out_pop: 2, neuron, ..SanConfig::default() }
            .with_dims(2, 1)
    }

    fn states(rows: &[[f64; 2]]) -> Tensor<f64> {
        Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn zero_network_is_silent() {
        let san = San::<f64>::zeros(&tiny(NeuronKind::Lif)).unwrap();
        let (a, st) = san.forward(&states(&[[10.0, -10.0]])).unwrap();
        assert_eq!(a.data(), &[0.0]);
        // far-away observations give negligible encoder drive
        assert_eq!(st.total_spikes(), 0);
    }

    #[test]
    fn spike_counts_match_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let san = San::<f64>::new(&tiny(NeuronKind::Clif), &mut rng).unwrap();
        let (_, st) = san.forward(&states(&[[0.1, 0.2], [-1.0, 2.0], [0.5, 0.5]])).unwrap();
        let mut counted = vec![0u64; st.spike_counts.len()];
        for s in &st.samples {
            for (c, p) in counted.iter_mut().zip(&s.populations) {
                *c += p.s.iter().map(|&x| x as u64).sum::<u64>();
                assert!(p.s.iter().all(|&x| x == 0.0 || x == 1.0));
            }
        }
        assert_eq!(counted, st.spike_counts);
    }

    #[test]
    fn reset_after_every_spike() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let san = San::<f64>::new(&tiny(NeuronKind::Lif), &mut rng).unwrap();
        let (_, st) = san.forward(&states(&[[0.0, 0.0], [1.0, -1.0]])).unwrap();
        for s in &st.samples {
            for p in &s.populations {
                for (spk, v) in p.s.iter().zip(&p.v) {
                    if *spk == 1.0 {
                        assert_eq!(*v, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let san = San::<f64>::new(&tiny(NeuronKind::Lif), &mut rng).unwrap();
        let x = states(&[[0.3, -0.4]]);
        let (a, s1) = san.forward(&x).unwrap();
        let (b, s2) = san.forward(&x).unwrap();
        assert_eq!(a.data()[0].to_bits(), b.data()[0].to_bits());
        assert_eq!(s1, s2);
        assert_eq!(san.act(&x).unwrap(), a);
    }

    #[test]
    fn single_path_hand_trace() {
        // one observation, one encoder neuron at its receptive-field centre,
        // one hidden neuron, one output neuron, T = 1
        let cfg = SanConfig { timesteps: 1, enc_pop: 1, hidden: vec![1], out_pop: 1, ..SanConfig::default() }
            .with_dims(1, 1);
        let mut san = San::<f64>::zeros(&cfg).unwrap();
        let mu = san.params().value("enc.mu").unwrap().data()[0];
        let (w_hidden, w_out, w_dec) = (0.8, 1.7, 0.6);
        san.params_mut().value_mut("l0.w").unwrap().data_mut()[0] = w_hidden;
        san.params_mut().value_mut("out.w").unwrap().data_mut()[0] = w_out;
        san.params_mut().value_mut("dec.w").unwrap().data_mut()[0] = w_dec;
        let (a, st) = san.forward(&Tensor::matrix(1, 1, vec![mu]).unwrap()).unwrap();
        let trace = &st.samples[0];
        assert_eq!(trace.encoding, vec![1.0]);
        assert_eq!(trace.populations[0].s, vec![1.0]);
        assert_eq!(trace.populations[1].s, vec![1.0]);
        assert!((a.data()[0] - (w_dec * w_out).tanh()).abs() < 1e-15);
    }

    #[test]
    fn zero_upstream_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut san = San::<f64>::new(&tiny(NeuronKind::Lif), &mut rng).unwrap();
        let (_, st) = san.forward(&states(&[[0.2, 0.1]])).unwrap();
        san.backward(&st, &Tensor::matrix(1, 1, vec![0.0]).unwrap()).unwrap();
        assert!(san.params().flat_grads().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_without_forward_is_state_error() {
        let mut san = San::<f64>::zeros(&tiny(NeuronKind::Lif)).unwrap();
        let err = san.backward(&SanState::default(), &Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn silent_hidden_layers_only_feed_output_bias() {
        // hidden currents far below threshold: no spikes and no surrogate window hits,
        // so only the output bias and decoder receive gradient
        let cfg = tiny(NeuronKind::Lif);
        let mut san = San::<f64>::zeros(&cfg).unwrap();
        for name in ["l0.b", "l1.b"] {
            san.params_mut().value_mut(name).unwrap().fill(-5.0);
        }
        san.params_mut().value_mut("out.b").unwrap().fill(0.3);
        san.params_mut().value_mut("dec.w").unwrap().fill(0.5);
        let (_, st) = san.forward(&states(&[[0.0, 0.0]])).unwrap();
        assert_eq!(st.spike_counts[1..], [0, 0]);
        san.backward(&st, &Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap();
        for name in ["l0.w", "l0.b", "l1.w", "l1.b", "out.w", "enc.mu", "enc.sigma"] {
            assert!(san.params().grad(name).unwrap().data().iter().all(|&g| g == 0.0), "{name}");
        }
        assert!(san.params().grad("out.b").unwrap().data().iter().all(|&g| g != 0.0));
        assert!(san.params().grad("dec.w").unwrap().data().iter().all(|&g| g != 0.0));
    }

    #[test]
    fn wrong_state_width_is_dimension_error() {
        let san = San::<f64>::zeros(&tiny(NeuronKind::Lif)).unwrap();
        assert!(matches!(san.act(&Tensor::matrix(1, 3, vec![0.0; 3]).unwrap()), Err(Error::Dimension(_))));
    }

    #[test]
    fn infer_config_from_params() {
        let cfg = tiny(NeuronKind::Lif);
        let san = San::<f64>::zeros(&cfg).unwrap();
        let inferred = SanConfig::default().infer_from_params(san.params()).unwrap();
        assert_eq!((inferred.obs_dim, inferred.act_dim, inferred.enc_pop, inferred.out_pop), (2, 1, 3, 2));
        assert_eq!(inferred.hidden, vec![4, 3]);
    }
}

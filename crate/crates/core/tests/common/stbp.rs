//! Independent reverse pass for the spiking actor: the whole unrolled
//! network is rebuilt on the scalar tape from the neuron equations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spikerl::nn::{ParamSet, Tensor};
use spikerl::snn::{NeuronKind, San, SanConfig};

use super::rel_err;
use super::tape::{Tape, Var};

pub struct Leaves {
    pub params: Vec<(String, Vec<Var>)>,
    pub obs: Vec<Vec<Var>>,
}

/// Builds the whole unrolled network on the scalar tape, straight from the
/// neuron equations, and returns Σ upstream·action.
pub fn oracle_loss(tape: &Tape, cfg: &SanConfig, params: &ParamSet<f64>, obs: &[Vec<f64>], upstream: &[Vec<f64>]) -> (Var, Leaves, Vec<Vec<f64>>) {
    let mut leaves = Vec::new();
    for (name, p) in params.iter() {
        leaves.push((name.to_string(), p.value.data().iter().map(|&x| tape.leaf(x)).collect::<Vec<_>>()));
    }
    let get = |n: &str| leaves.iter().find(|(k, _)| k == n).unwrap().1.clone();
    let (mu, sigma) = (get("enc.mu"), get("enc.sigma"));
    let sizes = cfg.population_sizes();
    let layers: Vec<(Vec<Var>, Vec<Var>)> = (0..cfg.hidden.len()).map(|l| (get(&format!("l{l}.w")), get(&format!("l{l}.b")))).collect();
    let (out_w, out_b, dec_w) = (get("out.w"), get("out.b"), get("dec.w"));
    let half = -0.5;
    let mut obs_leaves = Vec::new();
    let mut loss = tape.leaf(0.0);
    let mut actions = Vec::new();
    for (x_row, up_row) in obs.iter().zip(upstream) {
        let xs: Vec<Var> = x_row.iter().map(|&x| tape.leaf(x)).collect();
        let mut enc = Vec::new();
        for (i, &x) in xs.iter().enumerate() {
            for j in 0..cfg.enc_pop {
                let k = i * cfg.enc_pop + j;
                let z = tape.div(tape.sub(x, mu[k]), sigma[k]);
                enc.push(tape.exp(tape.scale(tape.mul(z, z), half)));
            }
        }
        let zero = tape.leaf(0.0);
        let mut v: Vec<Vec<Var>> = sizes.iter().map(|&n| vec![zero; n]).collect();
        let mut c: Vec<Vec<Var>> = sizes.iter().map(|&n| vec![zero; n]).collect();
        let n_out = cfg.output_size();
        let mut membrane = vec![zero; n_out];
        for _t in 0..cfg.timesteps {
            let mut current = enc.clone();
            for p in 0..sizes.len() {
                if p > 0 {
                    let (w, b) = &layers[p - 1];
                    let prev: Vec<Var> = std::mem::take(&mut current);
                    let n = sizes[p];
                    current = (0..n)
                        .map(|j| {
                            let mut acc = b[j];
                            for (i, &s) in prev.iter().enumerate() {
                                acc = tape.add(acc, tape.mul(s, w[i * n + j]));
                            }
                            acc
                        })
                        .collect();
                }
                let clif = p > 0 && cfg.neuron == NeuronKind::Clif;
                let mut spikes = Vec::new();
                for i in 0..sizes[p] {
                    let h = if clif {
                        c[p][i] = tape.add(tape.scale(c[p][i], cfg.current_decay), current[i]);
                        tape.add(tape.scale(v[p][i], cfg.voltage_decay), c[p][i])
                    } else {
                        tape.add(tape.scale(v[p][i], cfg.lambda_decay), current[i])
                    };
                    let s = tape.spike(h, cfg.v_th, cfg.surrogate_width);
                    let one_minus = tape.sub(tape.leaf(1.0), s);
                    v[p][i] = tape.add(tape.mul(one_minus, h), tape.scale(s, cfg.v_reset));
                    spikes.push(s);
                }
                current = spikes;
            }
            for j in 0..n_out {
                let mut acc = out_b[j];
                for (i, &s) in current.iter().enumerate() {
                    acc = tape.add(acc, tape.mul(s, out_w[i * n_out + j]));
                }
                membrane[j] = tape.add(membrane[j], acc);
            }
        }
        let mut row_actions = Vec::new();
        for a in 0..cfg.act_dim {
            let mut m = tape.leaf(0.0);
            for k in 0..cfg.out_pop {
                let o = a * cfg.out_pop + k;
                m = tape.add(m, tape.mul(membrane[o], dec_w[o]));
            }
            let act = tape.tanh(tape.scale(m, 1.0 / cfg.timesteps as f64));
            row_actions.push(tape.val(act));
            loss = tape.add(loss, tape.scale(act, up_row[a]));
        }
        actions.push(row_actions);
        obs_leaves.push(xs);
    }
    (loss, Leaves { params: leaves, obs: obs_leaves }, actions)
}

pub struct Case {
    pub neuron: NeuronKind,
    pub timesteps: usize,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub enc_pop: usize,
    pub hidden: Vec<usize>,
    pub out_pop: usize,
    pub weight_gain: f64,
}

pub fn random_case(rng: &mut ChaCha8Rng, neuron: NeuronKind, timesteps: usize) -> Case {
    let layers = rng.random_range(1..=3);
    Case {
        neuron,
        timesteps,
        obs_dim: rng.random_range(1..=3),
        act_dim: rng.random_range(1..=2),
        enc_pop: rng.random_range(2..=5),
        hidden: (0..layers).map(|_| rng.random_range(2..=7)).collect(),
        out_pop: rng.random_range(1..=3),
        weight_gain: rng.random_range(1.5..3.0),
    }
}

/// Errors of the network's forward and backward passes against the scalar graph.
pub struct CaseReport {
    pub forward_err: f64,
    /// Worst per-tensor relative error over parameters and the input gradient.
    pub grad_err: f64,
    pub worst: String,
    pub spikes: u64,
    /// Whether the first-layer weights and the encoder received gradient.
    pub deep: bool,
}

pub fn measure(case: &Case, seed: u64) -> CaseReport {
    let cfg = SanConfig {
        timesteps: case.timesteps,
        enc_pop: case.enc_pop,
        hidden: case.hidden.clone(),
        out_pop: case.out_pop,
        neuron: case.neuron,
        v_reset: -0.1,
        ..SanConfig::default()
    }
    .with_dims(case.obs_dim, case.act_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut san = San::<f64>::new(&cfg, &mut rng).unwrap();
    for l in 0..case.hidden.len() {
        for w in san.params_mut().value_mut(&format!("l{l}.w")).unwrap().data_mut() {
            *w *= case.weight_gain;
        }
    }
    for w in san.params_mut().value_mut("out.w").unwrap().data_mut() {
        *w *= case.weight_gain;
    }
    let obs: Vec<Vec<f64>> = (0..4).map(|_| (0..case.obs_dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let upstream: Vec<Vec<f64>> = (0..4).map(|_| (0..case.act_dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();

    let (actions, state) = san.forward(&Tensor::from_rows(&obs).unwrap()).unwrap();
    let dx = san.backward(&state, &Tensor::from_rows(&upstream).unwrap()).unwrap();

    let tape = Tape::default();
    let (loss, leaves, oracle_actions) = oracle_loss(&tape, &cfg, san.params(), &obs, &upstream);
    let g = tape.grad(loss);
    let mut report = CaseReport {
        forward_err: rel_err(actions.data(), &oracle_actions.concat()),
        grad_err: 0.0,
        worst: String::new(),
        spikes: state.total_spikes(),
        deep: ["l0.w", "enc.mu"].iter().all(|n| san.params().grad(n).unwrap().max_abs() > 0.0),
    };
    let mut note = |name: &str, err: f64| {
        if err > report.grad_err || report.worst.is_empty() {
            report.grad_err = err;
            report.worst = name.to_string();
        }
    };
    for (name, vars) in &leaves.params {
        let oracle: Vec<f64> = vars.iter().map(|v| g[v.0]).collect();
        note(name, rel_err(san.params().grad(name).unwrap().data(), &oracle));
    }
    let oracle_dx: Vec<f64> = leaves.obs.iter().flatten().map(|v| g[v.0]).collect();
    note("input", rel_err(dx.data(), &oracle_dx));
    report
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spikerl::nn::Tensor;
use spikerl::rl::continuous_policy;
use spikerl::snn::{San, SanConfig};

/// One encoder neuron, one hidden neuron whose potential sits just above
/// threshold, one output neuron, T = 1.
fn witness() -> (San<f64>, Tensor<f64>) {
    let cfg = SanConfig { timesteps: 1, enc_pop: 1, hidden: vec![1], out_pop: 1, ..SanConfig::default() }.with_dims(1, 1);
    let mut san = San::<f64>::zeros(&cfg).unwrap();
    let mu = san.params().value("enc.mu").unwrap().data()[0];
    let w = 0.5;
    let p = san.params_mut();
    p.value_mut("l0.w").unwrap().fill(w);
    p.value_mut("l0.b").unwrap().fill(cfg.v_th - w + 1e-5);
    p.value_mut("out.w").unwrap().fill(1.0);
    p.value_mut("dec.w").unwrap().fill(1.0);
    (san, Tensor::matrix(1, 1, vec![mu]).unwrap())
}

#[test]
fn tiny_parameter_change_flips_a_spike() {
    let (mut san, x) = witness();
    let (before, state) = san.forward(&x).unwrap();
    let h = state.samples[0].populations[1].h[0];
    assert!((h - san.config().v_th).abs() < 1e-5 + 1e-12);
    san.params_mut().value_mut("l0.b").unwrap().data_mut()[0] -= 1e-4;
    let after = san.act(&x).unwrap();
    let san_change = (before.data()[0] - after.data()[0]).abs();
    assert!((before.data()[0] - 1.0f64.tanh()).abs() < 1e-12 && after.data()[0] == 0.0);

    // the same nudge to a continuous network moves its output by O(1e-4)
    let mut net = continuous_policy::<f64, _>(1, 1, &[1], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let y0 = net.predict(&x).unwrap().data()[0];
    net.params_mut().value_mut("l1.b").unwrap().data_mut()[0] -= 1e-4;
    let y1 = net.predict(&x).unwrap().data()[0];
    let net_change = (y0 - y1).abs();
    assert!(net_change > 0.0 && net_change <= 1e-4);
    assert!(san_change > 100.0 * net_change, "{san_change} vs {net_change}");
}

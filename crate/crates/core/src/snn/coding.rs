use crate::Scalar;

/// Gaussian receptive fields: `a[i·pop + j] = exp(−(x_i − μ_ij)² / (2σ_ij²))`.
///
/// `mu` and `sigma` are `[obs_dim × pop]` row-major.
pub fn encode<S: Scalar>(obs: &[S], mu: &[S], sigma: &[S], pop: usize) -> Vec<S> {
    debug_assert_eq!(mu.len(), obs.len() * pop);
    let half = S::of(0.5);
    let mut out = Vec::with_capacity(mu.len());
    for (i, &x) in obs.iter().enumerate() {
        for j in 0..pop {
            let k = i * pop + j;
            let z = (x - mu[k]) / sigma[k];
            out.push((-half * z * z).exp());
        }
    }
    out
}

/// Accumulates encoder gradients given `grad_act = ∂L/∂a`. Returns `∂L/∂obs`.
pub fn encode_backward<S: Scalar>(
    obs: &[S],
    mu: &[S],
    sigma: &[S],
    act: &[S],
    grad_act: &[S],
    pop: usize,
    grad_mu: &mut [S],
    grad_sigma: &mut [S],
) -> Vec<S> {
    let mut grad_obs = vec![S::zero(); obs.len()];
    for (i, &x) in obs.iter().enumerate() {
        for j in 0..pop {
            let k = i * pop + j;
            let g = grad_act[k];
            if g == S::zero() {
                continue;
            }
            let d = x - mu[k];
            let inv_var = S::one() / (sigma[k] * sigma[k]);
            let da_dmu = act[k] * d * inv_var;
            grad_mu[k] += g * da_dmu;
            grad_sigma[k] += g * da_dmu * d / sigma[k];
            grad_obs[i] -= g * da_dmu;
        }
    }
    grad_obs
}

/// `action_j = tanh(Σ_k w_jk · V_jk / T)` over each action's output population.
pub fn decode<S: Scalar>(final_membrane: &[S], timesteps: usize, weights: &[S], pop: usize) -> Vec<S> {
    debug_assert_eq!(final_membrane.len(), weights.len());
    let inv_t = S::one() / S::of(timesteps as f64);
    final_membrane
        .chunks(pop)
        .zip(weights.chunks(pop))
        .map(|(v, w)| {
            let m: S = v.iter().zip(w).map(|(&a, &b)| a * b).sum();
            (m * inv_t).tanh()
        })
        .collect()
}

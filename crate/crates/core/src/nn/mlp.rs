use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use super::tensor::{axpy, Tensor};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Relu => z.max(S::zero()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn slope_from_output<S: Scalar>(self, y: S) -> S {
        match self {
            Activation::Relu => {
                if y > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Tanh => S::one() - y * y,
            Activation::Identity => S::one(),
        }
    }
}

/// Fully connected feedforward network. Layer `i` computes
/// `act_i(x · W_i + b_i)` with `W_i` stored as `[fan_in × fan_out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<S> {
    widths: Vec<usize>,
    activations: Vec<Activation>,
    params: ParamSet<S>,
}

/// Activations recorded by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct MlpTape<S> {
    widths: Vec<usize>,
    /// `layer_io[i]` is the input of layer `i`; the last entry is the network output.
    layer_io: Vec<Tensor<S>>,
}

impl<S: Scalar> MlpTape<S> {
    pub fn output(&self) -> Option<&Tensor<S>> {
        self.layer_io.last()
    }
}

impl<S: Scalar> Mlp<S> {
    /// Network with every weight and bias drawn from `U(±1/sqrt(fan_in))`.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(widths, activations)?;
        for i in 0..net.num_layers() {
            let bound = 1.0 / (widths[i] as f64).sqrt();
            for idx in [2 * i, 2 * i + 1] {
                for x in net.params.by_index_mut(idx).value.data_mut() {
                    *x = S::of(rng.random_range(-bound..=bound));
                }
            }
        }
        Ok(net)
    }

    pub fn zeros(widths: &[usize], activations: &[Activation]) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Config("an Mlp needs at least an input and an output width".into()));
        }
        if activations.len() != widths.len() - 1 {
            return Err(Error::Config(format!(
                "{} layers but {} activations",
                widths.len() - 1,
                activations.len()
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::Config(format!("zero-width layer in {widths:?}")));
        }
        let mut params = ParamSet::new();
        for i in 0..widths.len() - 1 {
            params.insert(format!("l{i}.w"), Tensor::zeros(vec![widths[i], widths[i + 1]]));
            params.insert(format!("l{i}.b"), Tensor::zeros(vec![widths[i + 1]]));
        }
        Ok(Self { widths: widths.to_vec(), activations: activations.to_vec(), params })
    }

    /// Rebuilds a network from a parameter set, inferring widths from the weight shapes.
    pub fn from_params(params: ParamSet<S>, activations: &[Activation]) -> Result<Self> {
        let layers = activations.len();
        let mut widths = Vec::with_capacity(layers + 1);
        for i in 0..layers {
            let w = params.value(&format!("l{i}.w"))?;
            if w.rank() != 2 {
                return Err(Error::structural(format!("l{i}.w has rank {}", w.rank())));
            }
            if i == 0 {
                widths.push(w.shape()[0]);
            } else if widths[i] != w.shape()[0] {
                return Err(Error::structural(format!("l{i}.w does not chain with layer {}", i - 1)));
            }
            widths.push(w.shape()[1]);
        }
        let mut net = Self::zeros(&widths, activations)?;
        net.params.copy_values_from(&params)?;
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn num_layers(&self) -> usize {
        self.activations.len()
    }

    pub fn in_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.widths.last().expect("non-empty widths")
    }

    pub fn params(&self) -> &ParamSet<S> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<S> {
        &mut self.params
    }

    fn check_input(&self, x: &Tensor<S>) -> Result<()> {
        if x.rank() != 2 || x.cols() != self.in_dim() {
            return Err(Error::dim(format!(
                "Mlp expects [batch × {}] input, got {:?}",
                self.in_dim(),
                x.shape()
            )));
        }
        Ok(())
    }

    fn layer(&self, i: usize, x: &Tensor<S>) -> Tensor<S> {
        let fan_out = self.widths[i + 1];
        let w = self.params.by_index(2 * i).value.data();
        let b = self.params.by_index(2 * i + 1).value.data();
        let act = self.activations[i];
        let (batch, fan_in) = (x.rows(), self.widths[i]);
        let mut out: Vec<S> = (0..batch).flat_map(|_| b.iter().copied()).collect();
        let (fi, fo) = (fan_in as isize, fan_out as isize);
        S::gemm(batch, fan_in, fan_out, S::one(), (x.data(), fi, 1), (w, fo, 1), S::one(), (&mut out, fo, 1));
        out.iter_mut().for_each(|v| *v = act.apply(*v));
        Tensor::new(vec![batch, fan_out], out).expect("layer output shape")
    }

    /// Output only, no tape.
    pub fn predict(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        self.check_input(x)?;
        let mut h = self.layer(0, x);
        for i in 1..self.num_layers() {
            h = self.layer(i, &h);
        }
        Ok(h)
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<(Tensor<S>, MlpTape<S>)> {
        self.check_input(x)?;
        let mut layer_io = Vec::with_capacity(self.num_layers() + 1);
        layer_io.push(x.clone());
        for i in 0..self.num_layers() {
            let next = self.layer(i, layer_io.last().expect("input recorded"));
            layer_io.push(next);
        }
        let out = layer_io.last().expect("output recorded").clone();
        Ok((out, MlpTape { widths: self.widths.clone(), layer_io }))
    }

    fn check_tape(&self, tape: &MlpTape<S>, upstream: &Tensor<S>) -> Result<()> {
        if tape.layer_io.is_empty() {
            return Err(Error::state("Mlp backward called without a recorded forward pass"));
        }
        if tape.widths != self.widths {
            return Err(Error::state(format!(
                "tape recorded for widths {:?}, network has {:?}",
                tape.widths, self.widths
            )));
        }
        let out = tape.layer_io.last().expect("non-empty tape");
        upstream.check_same_shape(out, "Mlp upstream gradient")
    }

    /// Returns the input gradient and, when `with_params`, per-layer `(dW, db)`.
    #[allow(clippy::type_complexity)]
    fn backprop(
        &self,
        tape: &MlpTape<S>,
        upstream: &Tensor<S>,
        with_params: bool,
    ) -> Result<(Tensor<S>, Vec<(Vec<S>, Vec<S>)>)> {
        self.check_tape(tape, upstream)?;
        let batch = upstream.rows();
        let mut delta = upstream.clone();
        let mut layer_grads = Vec::new();
        for i in (0..self.num_layers()).rev() {
            let (fan_in, fan_out) = (self.widths[i], self.widths[i + 1]);
            let act = self.activations[i];
            let out = &tape.layer_io[i + 1];
            for (d, &y) in delta.data_mut().iter_mut().zip(out.data()) {
                *d *= act.slope_from_output(y);
            }
            let input = &tape.layer_io[i];
            let (fi, fo) = (fan_in as isize, fan_out as isize);
            if with_params {
                let mut db = vec![S::zero(); fan_out];
                for r in 0..batch {
                    axpy(S::one(), delta.row(r), &mut db);
                }
                let mut gw = vec![S::zero(); fan_in * fan_out];
                S::gemm(fan_in, batch, fan_out, S::one(), (input.data(), 1, fi), (delta.data(), fo, 1), S::zero(), (&mut gw, fo, 1));
                layer_grads.push((gw, db));
            }
            let w = self.params.by_index(2 * i).value.data();
            let mut dx = vec![S::zero(); batch * fan_in];
            S::gemm(batch, fan_out, fan_in, S::one(), (delta.data(), fo, 1), (w, 1, fo), S::zero(), (&mut dx, fi, 1));
            delta = Tensor::new(vec![batch, fan_in], dx)?;
        }
        layer_grads.reverse();
        Ok((delta, layer_grads))
    }

    /// Accumulates `∂(upstream · output)/∂p` into every parameter gradient and
    /// returns the gradient with respect to the input.
    pub fn backward(&mut self, tape: &MlpTape<S>, upstream: &Tensor<S>) -> Result<Tensor<S>> {
        let (dx, layer_grads) = self.backprop(tape, upstream, true)?;
        for (i, (gw, gb)) in layer_grads.into_iter().enumerate() {
            axpy(S::one(), &gw, self.params.by_index_mut(2 * i).grad.data_mut());
            axpy(S::one(), &gb, self.params.by_index_mut(2 * i + 1).grad.data_mut());
        }
        Ok(dx)
    }

    /// Gradient with respect to the input only; parameter gradients are left untouched.
    pub fn input_grad(&self, tape: &MlpTape<S>, upstream: &Tensor<S>) -> Result<Tensor<S>> {
        self.backprop(tape, upstream, false).map(|(dx, _)| dx)
    }

    pub fn cast<T: Scalar>(&self) -> Mlp<T> {
        Mlp { widths: self.widths.clone(), activations: self.activations.clone(), params: self.params.cast() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(net: &mut Mlp<f64>, name: &str, data: &[f64]) {
        net.params_mut().value_mut(name).unwrap().data_mut().copy_from_slice(data);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::<f64>::zeros(&[3, 4, 2], &[Activation::Relu, Activation::Tanh]).unwrap();
        let x = Tensor::matrix(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.5, 0.5]).unwrap();
        assert!(net.predict(&x).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_network() {
        let mut net = Mlp::<f64>::zeros(&[1, 1], &[Activation::Identity]).unwrap();
        set(&mut net, "l0.w", &[1.0]);
        let y = net.predict(&Tensor::matrix(1, 1, vec![0.7]).unwrap()).unwrap();
        assert_eq!(y.data(), &[0.7]);
    }

    #[test]
    fn affine_relu_hand_value() {
        let mut net = Mlp::<f64>::zeros(&[2, 1], &[Activation::Relu]).unwrap();
        set(&mut net, "l0.w", &[1.0, -1.0]);
        set(&mut net, "l0.b", &[0.5]);
        let y = net.predict(&Tensor::matrix(1, 2, vec![2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(y.data(), &[1.5]);
    }

    #[test]
    fn wrong_width_is_dimension_error() {
        let net = Mlp::<f64>::zeros(&[2, 1], &[Activation::Relu]).unwrap();
        let err = net.predict(&Tensor::matrix(1, 3, vec![0.0; 3]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn linear_backward_by_hand() {
        let mut net = Mlp::<f64>::zeros(&[1, 1], &[Activation::Identity]).unwrap();
        set(&mut net, "l0.w", &[-1.25]);
        let (_, tape) = net.forward(&Tensor::matrix(1, 1, vec![3.0]).unwrap()).unwrap();
        let dx = net.backward(&tape, &Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap();
        assert_eq!(net.params().grad("l0.w").unwrap().data(), &[3.0]);
        assert_eq!(net.params().grad("l0.b").unwrap().data(), &[1.0]);
        assert_eq!(dx.data(), &[-1.25]);
    }

    #[test]
    fn zero_upstream_leaves_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::<f64>::new(&[3, 5, 2], &[Activation::Tanh, Activation::Identity], &mut rng).unwrap();
        let x = Tensor::matrix(1, 3, vec![0.1, 0.2, 0.3]).unwrap();
        let (_, tape) = net.forward(&x).unwrap();
        net.backward(&tape, &Tensor::matrix(1, 2, vec![0.0, 0.0]).unwrap()).unwrap();
        assert!(net.params().flat_grads().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_without_forward_is_state_error() {
        let mut net = Mlp::<f64>::zeros(&[1, 1], &[Activation::Identity]).unwrap();
        let err = net.backward(&MlpTape::default(), &Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn input_grad_matches_backward_and_keeps_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = Mlp::<f64>::new(&[4, 6, 1], &[Activation::Relu, Activation::Identity], &mut rng).unwrap();
        let x = Tensor::matrix(2, 4, vec![0.3, -0.2, 0.9, 0.1, -1.0, 0.4, 0.2, 0.7]).unwrap();
        let (_, tape) = net.forward(&x).unwrap();
        let up = Tensor::matrix(2, 1, vec![1.0, -0.5]).unwrap();
        let a = net.input_grad(&tape, &up).unwrap();
        assert!(net.params().flat_grads().iter().all(|&g| g == 0.0));
        let b = net.backward(&tape, &up).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let acts = [Activation::Tanh, Activation::Relu, Activation::Tanh];
        let mut net = Mlp::<f64>::new(&[3, 7, 5, 2], &acts, &mut rng).unwrap();
        let x = Tensor::matrix(3, 3, (0..9).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let up = Tensor::matrix(3, 2, vec![0.5, -1.0, 0.25, 2.0, -0.75, 1.5]).unwrap();
        let (_, tape) = net.forward(&x).unwrap();
        net.backward(&tape, &up).unwrap();
        let report = grad_check(net.params(), 1e-5, |p| {
            let probe = Mlp::from_params(p.clone(), &acts)?;
            let y = probe.predict(&x)?;
            Ok(y.data().iter().zip(up.data()).map(|(a, b)| a * b).sum())
        })
        .unwrap();
        assert!(report.max_rel_error <= 1e-4, "{report:?}");
    }
}

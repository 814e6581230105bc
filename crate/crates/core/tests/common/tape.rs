//! Scalar reverse-mode autodiff used as a reference for the network gradients.

use std::cell::RefCell;

#[derive(Clone, Copy, Debug)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Exp(usize),
    Tanh(usize),
    Recip(usize),
    /// Heaviside forward, rectangular window backward.
    Spike { h: usize, v_th: f64, width: f64 },
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<(Op, f64)>>,
}

#[derive(Clone, Copy, Debug)]
pub struct Var(pub usize);

impl Tape {
    fn push(&self, op: Op, value: f64) -> Var {
        let mut n = self.nodes.borrow_mut();
        n.push((op, value));
        Var(n.len() - 1)
    }

    pub fn val(&self, v: Var) -> f64 {
        self.nodes.borrow()[v.0].1
    }

    pub fn leaf(&self, x: f64) -> Var {
        self.push(Op::Leaf, x)
    }

    pub fn add(&self, a: Var, b: Var) -> Var {
        self.push(Op::Add(a.0, b.0), self.val(a) + self.val(b))
    }

    pub fn sub(&self, a: Var, b: Var) -> Var {
        self.push(Op::Sub(a.0, b.0), self.val(a) - self.val(b))
    }

    pub fn mul(&self, a: Var, b: Var) -> Var {
        self.push(Op::Mul(a.0, b.0), self.val(a) * self.val(b))
    }

    pub fn scale(&self, a: Var, k: f64) -> Var {
        self.push(Op::Scale(a.0, k), self.val(a) * k)
    }

    pub fn exp(&self, a: Var) -> Var {
        self.push(Op::Exp(a.0), self.val(a).exp())
    }

    pub fn tanh(&self, a: Var) -> Var {
        self.push(Op::Tanh(a.0), self.val(a).tanh())
    }

    pub fn div(&self, a: Var, b: Var) -> Var {
        let inv = self.push(Op::Recip(b.0), 1.0 / self.val(b));
        self.mul(a, inv)
    }

    pub fn spike(&self, h: Var, v_th: f64, width: f64) -> Var {
        let out = if self.val(h) >= v_th { 1.0 } else { 0.0 };
        self.push(Op::Spike { h: h.0, v_th, width }, out)
    }

    /// Gradient of `out` with respect to every node.
    pub fn grad(&self, out: Var) -> Vec<f64> {
        let n = self.nodes.borrow();
        let mut g = vec![0.0; n.len()];
        g[out.0] = 1.0;
        for i in (0..n.len()).rev() {
            let gi = g[i];
            if gi == 0.0 {
                continue;
            }
            match n[i].0 {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    g[a] += gi;
                    g[b] += gi;
                }
                Op::Sub(a, b) => {
                    g[a] += gi;
                    g[b] -= gi;
                }
                Op::Mul(a, b) => {
                    g[a] += gi * n[b].1;
                    g[b] += gi * n[a].1;
                }
                Op::Scale(a, k) => g[a] += gi * k,
                Op::Exp(a) => g[a] += gi * n[i].1,
                Op::Recip(a) => g[a] -= gi * n[i].1 * n[i].1,
                Op::Tanh(a) => g[a] += gi * (1.0 - n[i].1 * n[i].1),
                Op::Spike { h, v_th, width } => {
                    if (n[h].1 - v_th).abs() < width / 2.0 {
                        g[h] += gi / width;
                    }
                }
            }
        }
        g
    }
}

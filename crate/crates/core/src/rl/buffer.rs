use rand::Rng;

use crate::nn::Tensor;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub s: Vec<S>,
    /// Action in the agent's normalized `[−1, 1]` range.
    pub a: Vec<S>,
    pub r: S,
    pub s_next: Vec<S>,
    /// True termination only; time-limit truncation keeps this false.
    pub done: bool,
}

/// Column-stacked minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<S> {
    pub s: Tensor<S>,
    pub a: Tensor<S>,
    pub r: Vec<S>,
    pub s_next: Tensor<S>,
    pub done: Vec<bool>,
}

impl<S: Scalar> Batch<S> {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn transition(&self, i: usize) -> Transition<S> {
        Transition {
            s: self.s.row(i).to_vec(),
            a: self.a.row(i).to_vec(),
            r: self.r[i],
            s_next: self.s_next.row(i).to_vec(),
            done: self.done[i],
        }
    }

    pub fn from_transitions(items: &[&Transition<S>]) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(Error::state("empty batch"));
        };
        let (obs, act) = (first.s.len(), first.a.len());
        let n = items.len();
        let mut s = Vec::with_capacity(n * obs);
        let mut a = Vec::with_capacity(n * act);
        let mut s_next = Vec::with_capacity(n * obs);
        for t in items {
            if t.s.len() != obs || t.s_next.len() != obs || t.a.len() != act {
                return Err(Error::dim("transitions of different widths in one batch"));
            }
            s.extend_from_slice(&t.s);
            a.extend_from_slice(&t.a);
            s_next.extend_from_slice(&t.s_next);
        }
        Ok(Self {
            s: Tensor::matrix(n, obs, s)?,
            a: Tensor::matrix(n, act, a)?,
            r: items.iter().map(|t| t.r).collect(),
            s_next: Tensor::matrix(n, obs, s_next)?,
            done: items.iter().map(|t| t.done).collect(),
        })
    }
}

/// Fixed-capacity ring; the oldest transition is overwritten once full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<S> {
    capacity: usize,
    items: Vec<Transition<S>>,
    cursor: usize,
}

impl<S: Scalar> ReplayBuffer<S> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be at least 1".into()));
        }
        Ok(Self { capacity, items: Vec::new(), cursor: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition<S>) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<S>> {
        self.items.iter()
    }

    fn draw_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.items.is_empty() {
            return Err(Error::state("cannot sample from an empty replay buffer"));
        }
        Ok((0..n).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    /// `n` uniform draws with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch<S>> {
        let idx = self.draw_indices(n, rng)?;
        Batch::from_transitions(&idx.iter().map(|&i| &self.items[i]).collect::<Vec<_>>())
    }

    /// States only, `[n × obs_dim]`.
    pub fn sample_states<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Tensor<S>> {
        let idx = self.draw_indices(n, rng)?;
        let obs = self.items[0].s.len();
        let mut data = Vec::with_capacity(n * obs);
        for i in idx {
            data.extend_from_slice(&self.items[i].s);
        }
        Tensor::matrix(n, obs, data)
    }
}

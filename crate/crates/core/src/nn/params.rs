use indexmap::IndexMap;

use super::tensor::{axpy, Tensor};
use crate::{Error, Result, Scalar};

/// A named parameter tensor with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<S> {
    pub value: Tensor<S>,
    pub grad: Tensor<S>,
}

/// Ordered collection of named parameters. Iteration follows insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet<S> {
    entries: IndexMap<String, Param<S>>,
}

impl<S: Scalar> ParamSet<S> {
    pub fn new() -> Self {
        Self { entries: IndexMap::new() }
    }

    /// Adds a parameter with a zeroed gradient. Replaces an existing entry of the same name.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<S>) {
        let grad = Tensor::zeros_like(&value);
        self.entries.insert(name.into(), Param { value, grad });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&Param<S>> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param<S>> {
        self.entries.get_mut(name)
    }

    pub fn param(&self, name: &str) -> Result<&Param<S>> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::structural(format!("no parameter named `{name}`")))
    }

    pub fn param_mut(&mut self, name: &str) -> Result<&mut Param<S>> {
        self.entries
            .get_mut(name)
            .ok_or_else(|| Error::structural(format!("no parameter named `{name}`")))
    }

    pub fn value(&self, name: &str) -> Result<&Tensor<S>> {
        self.param(name).map(|p| &p.value)
    }

    pub fn value_mut(&mut self, name: &str) -> Result<&mut Tensor<S>> {
        self.param_mut(name).map(|p| &mut p.value)
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor<S>> {
        self.param(name).map(|p| &p.grad)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<S>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param<S>)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    /// Index-based access used by hot loops that resolve names once.
    pub(crate) fn by_index(&self, i: usize) -> &Param<S> {
        &self.entries[i]
    }

    pub(crate) fn by_index_mut(&mut self, i: usize) -> &mut Param<S> {
        &mut self.entries[i]
    }

    pub(crate) fn index_of(&self, name: &str) -> Result<usize> {
        self.entries
            .get_index_of(name)
            .ok_or_else(|| Error::structural(format!("no parameter named `{name}`")))
    }

    pub fn zero_grad(&mut self) {
        for p in self.entries.values_mut() {
            p.grad.fill(S::zero());
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|p| p.value.len()).sum()
    }

    pub fn flat_values(&self) -> Vec<S> {
        self.entries.values().flat_map(|p| p.value.data().iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<S> {
        self.entries.values().flat_map(|p| p.grad.data().iter().copied()).collect()
    }

    pub fn set_flat_values(&mut self, flat: &[S]) -> Result<()> {
        if flat.len() != self.num_scalars() {
            return Err(Error::dim(format!(
                "flat vector of length {} for {} parameters",
                flat.len(),
                self.num_scalars()
            )));
        }
        let mut offset = 0;
        for p in self.entries.values_mut() {
            let n = p.value.len();
            p.value.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Checks that both sets have the same names, order and shapes.
    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::structural(format!(
                "parameter sets have {} and {} entries",
                self.len(),
                other.len()
            )));
        }
        for ((na, pa), (nb, pb)) in self.entries.iter().zip(&other.entries) {
            if na != nb {
                return Err(Error::structural(format!("parameter `{na}` vs `{nb}`")));
            }
            if pa.value.shape() != pb.value.shape() {
                return Err(Error::structural(format!(
                    "parameter `{na}` has shape {:?} vs {:?}",
                    pa.value.shape(),
                    pb.value.shape()
                )));
            }
        }
        Ok(())
    }

    /// Overwrites values with `other`'s values.
    pub fn copy_values_from(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (dst, src) in self.entries.values_mut().zip(other.entries.values()) {
            dst.value.data_mut().copy_from_slice(src.value.data());
        }
        Ok(())
    }

    /// Largest absolute difference between corresponding values.
    pub fn max_abs_diff(&self, other: &Self) -> Result<S> {
        self.check_compatible(other)?;
        let mut m = S::zero();
        for (a, b) in self.entries.values().zip(other.entries.values()) {
            m = m.max(a.value.max_abs_diff(&b.value)?);
        }
        Ok(m)
    }

    pub fn all_finite(&self) -> bool {
        self.entries.values().all(|p| p.value.is_finite() && p.grad.is_finite())
    }

    /// New set holding the entries of `self` with `prefix` prepended to each name.
    pub fn prefixed(&self, prefix: &str) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(k, v)| (format!("{prefix}{k}"), v.clone()))
            .collect();
        Self { entries }
    }

    /// Entries whose names start with `prefix`, with the prefix removed.
    pub fn strip_prefix(&self, prefix: &str) -> Self {
        let entries = self
            .entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(prefix).map(|n| (n.to_string(), v.clone())))
            .collect();
        Self { entries }
    }

    pub fn extend(&mut self, other: Self) {
        self.entries.extend(other.entries);
    }

    pub fn cast<T: Scalar>(&self) -> ParamSet<T> {
        let entries = self
            .entries
            .iter()
            .map(|(k, p)| (k.clone(), Param { value: p.value.cast(), grad: p.grad.cast() }))
            .collect();
        ParamSet { entries }
    }
}

/// Soft update `target ← tau·online + (1 − tau)·target` on every value.
pub fn polyak_update<S: Scalar>(target: &mut ParamSet<S>, online: &ParamSet<S>, tau: S) -> Result<()> {
    if !(tau >= S::zero() && tau <= S::one()) {
        return Err(Error::Config(format!("polyak factor {tau} outside [0, 1]")));
    }
    target.check_compatible(online)?;
    let keep = S::one() - tau;
    for (dst, src) in target.entries.values_mut().zip(online.entries.values()) {
        let d = dst.value.data_mut();
        d.iter_mut().for_each(|x| *x *= keep);
        axpy(tau, src.value.data(), d);
    }
    Ok(())
}

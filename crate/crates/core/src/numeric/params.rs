use std::collections::BTreeMap;

use super::Tensor2D;
use crate::error::{Error, Result};

/// One trainable tensor with its gradient accumulator and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub value: Tensor2D,
    pub grad: Tensor2D,
    m: Tensor2D,
    v: Tensor2D,
}

impl Slot {
    fn new(value: Tensor2D) -> Self {
        let (r, c) = value.shape();
        Self {
            value,
            grad: Tensor2D::zeros(r, c),
            m: Tensor2D::zeros(r, c),
            v: Tensor2D::zeros(r, c),
        }
    }

    pub fn first_moment(&self) -> &Tensor2D {
        &self.m
    }

    pub fn second_moment(&self) -> &Tensor2D {
        &self.v
    }
}

/// Named trainable parameters. Iteration order is the lexicographic slot
/// name order, which fixes the order of every optimizer update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    slots: BTreeMap<String, Slot>,
    step_count: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor2D) {
        self.slots.insert(name.into(), Slot::new(value));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.slots.contains_key(name)
    }

    pub fn slot(&self, name: &str) -> Option<&Slot> {
        self.slots.get(name)
    }

    /// Panics on an unknown slot; slot names are fixed by the model layout.
    pub fn value(&self, name: &str) -> &Tensor2D {
        &self
            .slots
            .get(name)
            .unwrap_or_else(|| panic!("no parameter slot named {name}"))
            .value
    }

    pub fn value_mut(&mut self, name: &str) -> &mut Tensor2D {
        &mut self
            .slots
            .get_mut(name)
            .unwrap_or_else(|| panic!("no parameter slot named {name}"))
            .value
    }

    pub fn grad(&self, name: &str) -> &Tensor2D {
        &self
            .slots
            .get(name)
            .unwrap_or_else(|| panic!("no parameter slot named {name}"))
            .grad
    }

    pub fn grad_mut(&mut self, name: &str) -> &mut Tensor2D {
        &mut self
            .slots
            .get_mut(name)
            .unwrap_or_else(|| panic!("no parameter slot named {name}"))
            .grad
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.slots.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Slot)> {
        self.slots.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn zero_grads(&mut self) {
        for slot in self.slots.values_mut() {
            slot.grad.fill(0.0);
        }
    }

    /// Total number of scalar parameters.
    pub fn parameter_count(&self) -> usize {
        self.slots.values().map(|s| s.value.len()).sum()
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Adam {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }

    /// Applies one update to every slot and zeroes the gradients. All
    /// gradients are checked for finiteness before anything is modified.
    pub fn step(&self, store: &mut ParamStore) -> Result<()> {
        if let Some((name, _)) = store.slots.iter().find(|(_, s)| !s.grad.is_finite()) {
            return Err(Error::Training(format!(
                "non-finite gradient in slot {name} at step {}",
                store.step_count + 1
            )));
        }
        store.step_count += 1;
        let t = store.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for slot in store.slots.values_mut() {
            let Slot { value, grad, m, v } = slot;
            for (((p, g), m), v) in value
                .data_mut()
                .iter_mut()
                .zip(grad.data_mut().iter_mut())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *m = self.beta1 * *m + (1.0 - self.beta1) * *g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * *g * *g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                *g = 0.0;
            }
        }
        Ok(())
    }
}

/// Free-function form of [`Adam::step`].
pub fn adam_step(store: &mut ParamStore, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Result<()> {
    Adam {
        lr,
        beta1,
        beta2,
        eps,
    }
    .step(store)
}

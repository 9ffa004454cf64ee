use std::collections::HashMap;

use rand::Rng as _;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A named trainable tensor with its gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

/// Owns every parameter of a model, addressed by [`ParamId`] or name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
    by_name: HashMap<String, ParamId>,
}

pub enum Init {
    Zeros,
    /// Uniform in `[-a, a]` with `a = sqrt(6 / (fan_in + fan_out))`.
    Xavier,
    Uniform(f64),
    Constant(f64),
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Tensor) -> Result<ParamId> {
        if self.by_name.contains_key(name) {
            return Err(Error::invalid(format!("duplicate parameter name `{name}`")));
        }
        let id = ParamId(self.params.len());
        let grad = Tensor::zeros(value.dims());
        self.params.push(Parameter {
            name: name.to_string(),
            value,
            grad,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Adds a parameter initialised by `init`; matrices use `dims = [fan_in, fan_out]`.
    pub fn add_init(&mut self, name: &str, dims: &[usize], init: Init, rng: &mut Rng) -> Result<ParamId> {
        let n: usize = dims.iter().product();
        let data = match init {
            Init::Zeros => vec![0.0; n],
            Init::Constant(c) => vec![c; n],
            Init::Uniform(a) => (0..n).map(|_| rng.gen_range(-a..=a)).collect(),
            Init::Xavier => {
                let (fan_in, fan_out) = match dims {
                    [a] => (*a, 1),
                    [a, b, ..] => (*a, *b),
                    [] => (1, 1),
                };
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                (0..n).map(|_| rng.gen_range(-a..=a)).collect()
            }
        };
        self.add(name, Tensor::new(dims.to_vec(), data)?)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    pub fn scale_grads(&mut self, factor: f64) {
        for p in &mut self.params {
            p.grad.data_mut().iter_mut().for_each(|g| *g *= factor);
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.params
            .iter()
            .flat_map(|p| p.grad.data().iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales all gradients so their global L2 norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            for p in &mut self.params {
                p.grad.data_mut().iter_mut().for_each(|g| *g *= scale);
            }
        }
        norm
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Replaces the value of every parameter present in `other` by name.
    pub fn load_values(&mut self, other: &ParamStore) -> Result<()> {
        for p in &other.params {
            let id = self
                .id(&p.name)
                .ok_or_else(|| Error::Checkpoint(format!("unexpected parameter `{}`", p.name)))?;
            let dst = &mut self.params[id.0];
            if dst.value.dims() != p.value.dims() {
                return Err(Error::Shape {
                    op: "load",
                    left: dst.value.dims().to_vec(),
                    right: p.value.dims().to_vec(),
                });
            }
            dst.value = p.value.clone();
        }
        if other.len() != self.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds {} parameters, model expects {}",
                other.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

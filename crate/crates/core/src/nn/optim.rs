use serde::{Deserialize, Serialize};

use super::param::ParamStore;
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// Applies parameter updates from accumulated gradients. Adam moments live
/// here and persist across steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    pub steps: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig) -> Self {
        Optimizer {
            config,
            steps: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, store: &mut ParamStore) {
        self.steps += 1;
        match self.config {
            OptimizerConfig::Sgd { lr } => sgd_step(store, lr),
            OptimizerConfig::Adam { lr, beta1, beta2, eps } => {
                if self.m.len() != store.len() {
                    self.m = store.iter().map(|p| Tensor::zeros(p.value.dims())).collect();
                    self.v = self.m.clone();
                }
                let t = self.steps as i32;
                let bc1 = 1.0 - beta1.powi(t);
                let bc2 = 1.0 - beta2.powi(t);
                for ((p, m), v) in store.iter_mut().zip(&mut self.m).zip(&mut self.v) {
                    let g = p.grad.data();
                    let (md, vd) = (m.data_mut(), v.data_mut());
                    for (k, w) in p.value.data_mut().iter_mut().enumerate() {
                        md[k] = beta1 * md[k] + (1.0 - beta1) * g[k];
                        vd[k] = beta2 * vd[k] + (1.0 - beta2) * g[k] * g[k];
                        let mh = md[k] / bc1;
                        let vh = vd[k] / bc2;
                        *w -= lr * mh / (vh.sqrt() + eps);
                    }
                }
            }
        }
    }

    /// Moment tensors named for checkpointing.
    pub fn state_tensors(&self, store: &ParamStore) -> Vec<(String, Tensor)> {
        let mut out = vec![("optim/steps".to_string(), Tensor::scalar(self.steps as f64))];
        for (p, (m, v)) in store.iter().zip(self.m.iter().zip(&self.v)) {
            out.push((format!("optim/m/{}", p.name), m.clone()));
            out.push((format!("optim/v/{}", p.name), v.clone()));
        }
        out
    }

    pub fn restore(&mut self, store: &ParamStore, tensors: &[(String, Tensor)]) -> Result<()> {
        let find = |name: &str| tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t);
        let Some(steps) = find("optim/steps") else {
            return Ok(());
        };
        self.steps = steps.data()[0] as u64;
        let mut m = Vec::new();
        let mut v = Vec::new();
        for p in store.iter() {
            match (find(&format!("optim/m/{}", p.name)), find(&format!("optim/v/{}", p.name))) {
                (Some(a), Some(b)) => {
                    m.push(a.clone());
                    v.push(b.clone());
                }
                (None, None) => {}
                _ => return Err(Error::Checkpoint(format!("partial optimizer state for `{}`", p.name))),
            }
        }
        if !m.is_empty() && m.len() != store.len() {
            return Err(Error::Checkpoint("optimizer state does not cover every parameter".into()));
        }
        self.m = m;
        self.v = v;
        Ok(())
    }
}

pub fn sgd_step(store: &mut ParamStore, lr: f64) {
    for p in store.iter_mut() {
        let g = p.grad.data();
        for (w, &gk) in p.value.data_mut().iter_mut().zip(g) {
            *w -= lr * gk;
        }
    }
}

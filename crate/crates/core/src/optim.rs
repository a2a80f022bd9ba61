//! First-order optimizers over a [`ParamStore`].

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::ParamStore;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[derive(Default)]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: u64,
    m: Option<ParamStore>,
    v: Option<ParamStore>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Optimizer { kind, lr, step: 0, m: None, v: None }
    }

    /// Descends along `grads`.
    pub fn step(&mut self, params: &mut ParamStore, grads: &ParamStore) -> Result<()> {
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => params.add_scaled(-self.lr, grads),
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let m = self.m.get_or_insert_with(|| params.zeros_like());
                let v = self.v.get_or_insert_with(|| params.zeros_like());
                let t = self.step as i32;
                let c1 = 1.0 - libm::pow(beta1, t as f64);
                let c2 = 1.0 - libm::pow(beta2, t as f64);
                for ((name, p), ((_, mt), (_, vt))) in params.iter_mut().zip(m.iter_mut().zip(v.iter_mut())) {
                    let g = grads.expect(name, p.shape())?;
                    for (((pi, mi), vi), gi) in p.data_mut().iter_mut().zip(mt.data_mut()).zip(vt.data_mut()).zip(g.data()) {
                        *mi = beta1 * *mi + (1.0 - beta1) * gi;
                        *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                        if self.lr != 0.0 {
                            *pi -= self.lr * (*mi / c1) / (libm::sqrt(*vi / c2) + eps);
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

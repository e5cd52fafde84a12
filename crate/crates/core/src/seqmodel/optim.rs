//! First-order optimizers over a flat parameter vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
    #[serde(rename = "rmsprop")]
    RmsProp,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Adam, OptimizerKind::Sgd, OptimizerKind::RmsProp];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            _ => Err(Error::Config(format!("unknown optimizer {s:?}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::RmsProp => "rmsprop",
        }
    }
}

const EPS: f64 = 1e-8;
const RMS_RHO: f64 = 0.9;
const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, n_params: usize) -> Self {
        Optimizer { kind, lr, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::RmsProp => {
                for ((p, g), v) in params.iter_mut().zip(grad).zip(&mut self.v) {
                    *v = RMS_RHO * *v + (1.0 - RMS_RHO) * g * g;
                    *p -= self.lr * g / (v.sqrt() + EPS);
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let c1 = 1.0 - ADAM_B1.powi(self.t);
                let c2 = 1.0 - ADAM_B2.powi(self.t);
                for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
                    *m = ADAM_B1 * *m + (1.0 - ADAM_B1) * g;
                    *v = ADAM_B2 * *v + (1.0 - ADAM_B2) * g * g;
                    *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // minimize (x − 3)²
    fn run(kind: OptimizerKind, lr: f64, steps: usize) -> f64 {
        let mut x = [0.0];
        let mut opt = Optimizer::new(kind, lr, 1);
        for _ in 0..steps {
            let g = [2.0 * (x[0] - 3.0)];
            opt.step(&mut x, &g);
        }
        x[0]
    }

    #[test]
    fn each_optimizer_converges_on_a_quadratic() {
        assert!((run(OptimizerKind::Sgd, 0.1, 200) - 3.0).abs() < 1e-6);
        assert!((run(OptimizerKind::Adam, 0.05, 2000) - 3.0).abs() < 1e-3);
        assert!((run(OptimizerKind::RmsProp, 0.01, 2000) - 3.0).abs() < 2e-2);
    }

    #[test]
    fn first_adam_step_has_magnitude_lr() {
        let mut x = [1.0];
        Optimizer::new(OptimizerKind::Adam, 0.01, 1).step(&mut x, &[123.0]);
        assert!((x[0] - 0.99).abs() < 1e-9);
    }

    #[test]
    fn parse_names() {
        assert_eq!(OptimizerKind::parse("RMSprop").unwrap(), OptimizerKind::RmsProp);
        assert!(OptimizerKind::parse("lbfgs").is_err());
    }
}

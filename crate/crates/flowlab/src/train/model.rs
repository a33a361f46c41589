//! One-hidden-layer multi-head model.
//!
//! The body (shared across tasks) is a dense layer with tanh activation;
//! each task owns a linear head. This is the smallest architecture on
//! which the body/head split of the multi-head fine-tuning procedure is
//! meaningful.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seeding;

/// Shared parameters: `hidden = tanh(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyParams {
    /// h×d weight matrix.
    pub weights: DMatrix<f64>,
    /// h bias vector.
    pub bias: DVector<f64>,
}

/// Task head: `output = W hidden + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    /// c×h weight matrix.
    pub weights: DMatrix<f64>,
    /// c bias vector.
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadModel {
    input_dim: usize,
    hidden_dim: usize,
    pub body: BodyParams,
    pub heads: BTreeMap<String, HeadParams>,
}

fn seeded_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl rand::Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

impl MultiHeadModel {
    /// Fresh model with a seeded scaled-normal body (scale 1/√fan-in) and
    /// no heads.
    pub fn new(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut rng = seeding::rng_from(seed);
        let scale = 1.0 / (input_dim as f64).sqrt();
        let weights = seeded_matrix(hidden_dim, input_dim, scale, &mut rng);
        let bias = DVector::zeros(hidden_dim);
        Self {
            input_dim,
            hidden_dim,
            body: BodyParams { weights, bias },
            heads: BTreeMap::new(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    /// Attach a seeded head for `task` with `classes` outputs, replacing
    /// any existing head for that task.
    pub fn add_head(&mut self, task: &str, classes: usize, seed: u64) {
        let mut rng = seeding::rng_from(seed);
        let scale = 1.0 / (self.hidden_dim as f64).sqrt();
        let weights = seeded_matrix(classes, self.hidden_dim, scale, &mut rng);
        let bias = DVector::zeros(classes);
        self.heads
            .insert(task.to_string(), HeadParams { weights, bias });
    }

    pub fn head(&self, task: &str) -> Result<&HeadParams> {
        self.heads
            .get(task)
            .ok_or_else(|| Error::MissingHead(task.to_string()))
    }

    pub fn head_mut(&mut self, task: &str) -> Result<&mut HeadParams> {
        self.heads
            .get_mut(task)
            .ok_or_else(|| Error::MissingHead(task.to_string()))
    }

    /// Output width of a task head.
    pub fn classes(&self, task: &str) -> Result<usize> {
        Ok(self.head(task)?.bias.len())
    }

    /// `tanh(W x + b)` for a batch of column-vector inputs (d×n → h×n).
    pub fn hidden_features(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.body.weights * inputs;
        for mut col in z.column_iter_mut() {
            col += &self.body.bias;
        }
        z.apply(|v| *v = v.tanh());
        z
    }

    /// Head outputs for a batch (h×n → c×n).
    pub fn head_outputs(&self, task: &str, hidden: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let head = self.head(task)?;
        let mut z = &head.weights * hidden;
        for mut col in z.column_iter_mut() {
            col += &head.bias;
        }
        Ok(z)
    }

    /// Logits for raw inputs (d×n → c×n).
    pub fn forward(&self, task: &str, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let hidden = self.hidden_features(inputs);
        self.head_outputs(task, &hidden)
    }

    /// Body parameters flattened row-major (weights, then bias).
    pub fn body_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.hidden_dim * (self.input_dim + 1));
        for i in 0..self.hidden_dim {
            for j in 0..self.input_dim {
                out.push(self.body.weights[(i, j)]);
            }
        }
        out.extend(self.body.bias.iter());
        out
    }

    pub fn set_body_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.hidden_dim * (self.input_dim + 1);
        if flat.len() != expected {
            return Err(Error::DimensionMismatch {
                left: flat.len(),
                right: expected,
            });
        }
        let mut it = flat.iter();
        for i in 0..self.hidden_dim {
            for j in 0..self.input_dim {
                self.body.weights[(i, j)] = *it.next().unwrap();
            }
        }
        for i in 0..self.hidden_dim {
            self.body.bias[i] = *it.next().unwrap();
        }
        Ok(())
    }

    /// Head parameters flattened row-major (weights, then bias).
    pub fn head_flat(&self, task: &str) -> Result<Vec<f64>> {
        let head = self.head(task)?;
        let c = head.bias.len();
        let mut out = Vec::with_capacity(c * (self.hidden_dim + 1));
        for i in 0..c {
            for j in 0..self.hidden_dim {
                out.push(head.weights[(i, j)]);
            }
        }
        out.extend(head.bias.iter());
        Ok(out)
    }

    pub fn set_head_flat(&mut self, task: &str, flat: &[f64]) -> Result<()> {
        let hidden = self.hidden_dim;
        let head = self.head_mut(task)?;
        let c = head.bias.len();
        let expected = c * (hidden + 1);
        if flat.len() != expected {
            return Err(Error::DimensionMismatch {
                left: flat.len(),
                right: expected,
            });
        }
        let mut it = flat.iter();
        for i in 0..c {
            for j in 0..hidden {
                head.weights[(i, j)] = *it.next().unwrap();
            }
        }
        for i in 0..c {
            head.bias[i] = *it.next().unwrap();
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.body.weights.iter().all(|v| v.is_finite())
            && self.body.bias.iter().all(|v| v.is_finite())
            && self.heads.values().all(|h| {
                h.weights.iter().all(|v| v.is_finite()) && h.bias.iter().all(|v| v.is_finite())
            })
    }

    /// Bit-level fingerprint of the body, for freeze contracts.
    pub fn body_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        self.body.weights.iter().for_each(|&v| eat(v));
        self.body.bias.iter().for_each(|&v| eat(v));
        h
    }

    /// Same architecture: dimensions and head layout agree.
    pub fn same_architecture(&self, other: &Self) -> bool {
        self.input_dim == other.input_dim
            && self.hidden_dim == other.hidden_dim
            && self
                .heads
                .iter()
                .all(|(task, head)| match other.heads.get(task) {
                    Some(o) => o.bias.len() == head.bias.len(),
                    None => true, // disjoint heads are allowed
                })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_deterministic() {
        let a = MultiHeadModel::new(4, 8, 7);
        let b = MultiHeadModel::new(4, 8, 7);
        assert_eq!(a, b);
        let c = MultiHeadModel::new(4, 8, 8);
        assert_ne!(a.body.weights, c.body.weights);
    }

    #[test]
    fn flatten_round_trips() {
        let mut m = MultiHeadModel::new(3, 5, 1);
        m.add_head("a", 4, 2);
        let body = m.body_flat();
        let head = m.head_flat("a").unwrap();
        let mut m2 = MultiHeadModel::new(3, 5, 99);
        m2.add_head("a", 4, 98);
        m2.set_body_flat(&body).unwrap();
        m2.set_head_flat("a", &head).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn missing_head_is_an_error() {
        let m = MultiHeadModel::new(3, 5, 1);
        assert!(matches!(m.head("b"), Err(Error::MissingHead(_))));
    }
}

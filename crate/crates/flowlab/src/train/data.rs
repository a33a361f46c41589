//! Labeled datasets for the finite-sample trainers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Classification targets or regression targets.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Classes(Vec<usize>),
    Reals(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes(v) => v.len(),
            Labels::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A dataset for one task. Features are stored column-per-sample (d×n).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: DMatrix<f64>,
    labels: Labels,
    task: String,
}

impl LabeledDataset {
    pub fn new(features: DMatrix<f64>, labels: Labels, task: impl Into<String>) -> Result<Self> {
        let n = features.ncols();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                left: labels.len(),
                right: n,
            });
        }
        Ok(Self {
            features,
            labels,
            task: task.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.features.ncols()
    }

    pub fn dim(&self) -> usize {
        self.features.nrows()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn task(&self) -> &str {
        &self.task
    }

    /// Check classification labels fit a head with `classes` outputs.
    pub fn check_classes(&self, classes: usize) -> Result<()> {
        if let Labels::Classes(labels) = &self.labels {
            if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
                return Err(Error::InvalidConfig(format!(
                    "label {bad} out of range for {classes} classes"
                )));
            }
        }
        Ok(())
    }
}

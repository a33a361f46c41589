//! Accuracy evaluation, including the hard-sample slice.

use crate::error::{Error, Result};
use crate::train::data::{LabeledDataset, Labels};
use crate::train::model::MultiHeadModel;
use crate::weighting::LossVector;

/// Argmax predictions; ties break toward the lowest class index.
pub fn predictions(
    model: &MultiHeadModel,
    data: &LabeledDataset,
    task: &str,
) -> Result<Vec<usize>> {
    let outputs = model.forward(task, data.features())?;
    Ok((0..data.n())
        .map(|i| {
            let col = outputs.column(i);
            let mut best = 0;
            for r in 1..col.len() {
                if col[r] > col[best] {
                    best = r;
                }
            }
            best
        })
        .collect())
}

/// Top-1 accuracy of `model` on classification data.
pub fn evaluate(model: &MultiHeadModel, data: &LabeledDataset, task: &str) -> Result<f64> {
    let labels = match data.labels() {
        Labels::Classes(labels) => labels,
        Labels::Reals(_) => {
            return Err(Error::InvalidConfig(
                "accuracy is defined for classification data".into(),
            ))
        }
    };
    data.check_classes(model.classes(task)?)?;
    let preds = predictions(model, data, task)?;
    let correct = preds
        .iter()
        .zip(labels)
        .filter(|(pred, label)| pred == label)
        .count();
    Ok(correct as f64 / data.n() as f64)
}

/// Indices of the `⌈fraction·n⌉` samples with the highest losses; ties at
/// the threshold break toward the lower sample index.
pub fn hard_sample_indices(losses: &LossVector, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::OutOfRange {
            what: "fraction",
            value: fraction,
            expected: "0 < fraction <= 1",
        });
    }
    let n = losses.len();
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        losses.values()[j]
            .partial_cmp(&losses.values()[i])
            .expect("losses are finite")
            .then(i.cmp(&j))
    });
    order.truncate(k);
    Ok(order)
}

/// Accuracy restricted to the hardest `fraction` of the samples, ranked
/// by their pre-trained losses.
pub fn hard_sample_accuracy(
    model: &MultiHeadModel,
    data: &LabeledDataset,
    losses: &LossVector,
    fraction: f64,
) -> Result<f64> {
    if losses.len() != data.n() {
        return Err(Error::DimensionMismatch {
            left: losses.len(),
            right: data.n(),
        });
    }
    let labels = match data.labels() {
        Labels::Classes(labels) => labels,
        Labels::Reals(_) => {
            return Err(Error::InvalidConfig(
                "accuracy is defined for classification data".into(),
            ))
        }
    };
    let hard = hard_sample_indices(losses, fraction)?;
    let preds = predictions(model, data, data.task())?;
    let correct = hard.iter().filter(|&&i| preds[i] == labels[i]).count();
    Ok(correct as f64 / hard.len() as f64)
}

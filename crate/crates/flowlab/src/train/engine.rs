//! Gradient-descent fine-tuning engines.
//!
//! All methods run plain (mini-batch) gradient descent with explicit
//! gradients — no momentum or weight decay, matching the linear theory.
//! The weighted loss is trained as `(1/n) Σ ŵ_i f_i(θ)` where the input
//! weights are rescaled to mean one; a positive rescaling of the objective
//! only re-scales the learning rate and leaves the minimizer unchanged,
//! and mean-one keeps learning rates comparable across methods.
//!
//! Fine-tuning always starts from the given (pre-trained) parameters.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::seeding;
use crate::train::config::TrainConfig;
use crate::train::data::{LabeledDataset, Labels};
use crate::train::model::{BodyParams, HeadParams, MultiHeadModel};
use crate::weighting::{
    self, compute_weights, dro_weights, normalize_weights, select_temperature, LossVector,
    Temperature, TemperaturePolicy, WeightVector,
};

/// Per-sample losses under frozen parameters: cross-entropy for
/// classification, squared error for regression.
pub fn per_sample_losses(
    model: &MultiHeadModel,
    data: &LabeledDataset,
    task: &str,
) -> Result<LossVector> {
    let classes = model.classes(task)?;
    data.check_classes(classes)?;
    let outputs = model.forward(task, data.features())?;
    let losses = match data.labels() {
        Labels::Classes(labels) => labels
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let col = outputs.column(i);
                let m = col.max();
                let lse = m + col.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
                (lse - col[y]).max(0.0)
            })
            .collect(),
        Labels::Reals(targets) => {
            if classes != 1 {
                return Err(Error::InvalidConfig(
                    "regression targets need a single-output head".into(),
                ));
            }
            targets
                .iter()
                .enumerate()
                .map(|(i, &y)| {
                    let r = outputs[(0, i)] - y;
                    r * r
                })
                .collect()
        }
    };
    LossVector::new(losses)
}

/// Internal fit options shared by all trainers.
struct FitPlan<'a> {
    /// Mean-one rescaled per-sample weights.
    weights: Vec<f64>,
    learning_rate: f64,
    epochs: usize,
    batch_size: Option<usize>,
    seed: u64,
    freeze_body: bool,
    /// ℓ2 pull `λ‖θ − θ₀‖²` toward a snapshot of the trained blocks.
    l2: Option<(f64, BodyParams, HeadParams)>,
    data: &'a LabeledDataset,
    task: &'a str,
}

fn rescale_to_mean_one(raw: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroWeights);
    }
    let scale = raw.len() as f64 / total;
    Ok(raw.iter().map(|w| w * scale).collect())
}

/// One gradient step on a batch of sample indices. Returns false if any
/// gradient entry is non-finite.
fn gradient_step(model: &mut MultiHeadModel, plan: &FitPlan, batch: &[usize]) -> bool {
    let d = model.input_dim();
    let b = batch.len();
    let mut x = DMatrix::zeros(d, b);
    for (col, &idx) in batch.iter().enumerate() {
        x.set_column(col, &plan.data.features().column(idx));
    }
    let hidden = model.hidden_features(&x);
    let outputs = model
        .head_outputs(plan.task, &hidden)
        .expect("head checked by caller");

    // d(loss)/d(outputs), already scaled by ŵ_i / B
    let mut gout = DMatrix::zeros(outputs.nrows(), b);
    let inv_b = 1.0 / b as f64;
    match plan.data.labels() {
        Labels::Classes(labels) => {
            for (col, &idx) in batch.iter().enumerate() {
                let scale = plan.weights[idx] * inv_b;
                let logits = outputs.column(col);
                let m = logits.max();
                let mut denom = 0.0;
                for &v in logits.iter() {
                    denom += (v - m).exp();
                }
                for r in 0..outputs.nrows() {
                    let p = (logits[r] - m).exp() / denom;
                    let y = if labels[idx] == r { 1.0 } else { 0.0 };
                    gout[(r, col)] = (p - y) * scale;
                }
            }
        }
        Labels::Reals(targets) => {
            for (col, &idx) in batch.iter().enumerate() {
                let scale = plan.weights[idx] * inv_b;
                gout[(0, col)] = 2.0 * (outputs[(0, col)] - targets[idx]) * scale;
            }
        }
    }

    let head = model.head(plan.task).expect("head checked by caller");
    let mut dhead_w = &gout * hidden.transpose();
    let mut dhead_b = gout.column_sum();
    let mut dbody_w = DMatrix::zeros(0, 0);
    let mut dbody_b = nalgebra::DVector::zeros(0);
    if !plan.freeze_body {
        let mut dhidden = head.weights.transpose() * &gout;
        // tanh'(z) = 1 − tanh(z)²
        dhidden.zip_apply(&hidden, |g, a| *g *= 1.0 - a * a);
        dbody_w = &dhidden * x.transpose();
        dbody_b = dhidden.column_sum();
    }

    if let Some((lambda, body0, head0)) = &plan.l2 {
        let two_lambda = 2.0 * lambda;
        dhead_w += (&head.weights - &head0.weights) * two_lambda;
        dhead_b += (&head.bias - &head0.bias) * two_lambda;
        if !plan.freeze_body {
            dbody_w += (&model.body.weights - &body0.weights) * two_lambda;
            dbody_b += (&model.body.bias - &body0.bias) * two_lambda;
        }
    }

    let finite = dhead_w.iter().all(|v| v.is_finite())
        && dhead_b.iter().all(|v| v.is_finite())
        && dbody_w.iter().all(|v| v.is_finite())
        && dbody_b.iter().all(|v| v.is_finite());
    if !finite {
        return false;
    }

    let lr = plan.learning_rate;
    if !plan.freeze_body {
        model.body.weights -= dbody_w * lr;
        model.body.bias -= dbody_b * lr;
    }
    let head = model.head_mut(plan.task).expect("head checked by caller");
    head.weights -= dhead_w * lr;
    head.bias -= dhead_b * lr;
    true
}

fn run_fit(model: &MultiHeadModel, plan: &FitPlan) -> Result<MultiHeadModel> {
    let classes = model.classes(plan.task)?;
    plan.data.check_classes(classes)?;
    let n = plan.data.n();
    let mut fitted = model.clone();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = seeding::rng_for(plan.seed, "shuffle");
    for epoch in 0..plan.epochs {
        match plan.batch_size {
            None => {
                if !gradient_step(&mut fitted, plan, &indices) {
                    return Err(Error::NonFiniteGradient { epoch });
                }
            }
            Some(batch_size) => {
                use rand::seq::SliceRandom;
                indices.shuffle(&mut shuffle_rng);
                for batch in indices.chunks(batch_size) {
                    if !gradient_step(&mut fitted, plan, batch) {
                        return Err(Error::NonFiniteGradient { epoch });
                    }
                }
            }
        }
    }
    Ok(fitted)
}

/// Fine-tune body and task head on the weighted loss
/// `(1/n) Σ ŵ_i f_i(θ)`, ŵ rescaled to mean one.
pub fn weighted_fit(
    model: &MultiHeadModel,
    data: &LabeledDataset,
    weights: &WeightVector,
    cfg: &TrainConfig,
) -> Result<MultiHeadModel> {
    if weights.len() != data.n() {
        return Err(Error::DimensionMismatch {
            left: weights.len(),
            right: data.n(),
        });
    }
    let plan = FitPlan {
        weights: rescale_to_mean_one(weights.values())?,
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        freeze_body: false,
        l2: None,
        data,
        task: data.task(),
    };
    run_fit(model, &plan)
}

/// Unweighted fine-tuning of body and task head.
pub fn standard_fit(
    model: &MultiHeadModel,
    data: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<MultiHeadModel> {
    let plan = FitPlan {
        weights: vec![1.0; data.n()],
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        freeze_body: false,
        l2: None,
        data,
        task: data.task(),
    };
    run_fit(model, &plan)
}

/// Unweighted fine-tuning with the penalty `λ‖θ − θ*‖²`, where θ* is the
/// initialization snapshot of the trained blocks. λ = 0 reduces to
/// standard fine-tuning.
pub fn l2_fit(
    model: &MultiHeadModel,
    data: &LabeledDataset,
    lambda: f64,
    cfg: &TrainConfig,
) -> Result<MultiHeadModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let snapshot = (
        lambda,
        model.body.clone(),
        model.head(data.task())?.clone(),
    );
    let plan = FitPlan {
        weights: vec![1.0; data.n()],
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        freeze_body: false,
        l2: Some(snapshot),
        data,
        task: data.task(),
    };
    run_fit(model, &plan)
}

/// Train only the head for `task`; body parameters are bit-identical
/// before and after.
pub fn linear_probe(
    model: &MultiHeadModel,
    data: &LabeledDataset,
    task: &str,
    cfg: &TrainConfig,
) -> Result<MultiHeadModel> {
    model.head(task)?;
    let plan = FitPlan {
        weights: vec![1.0; data.n()],
        learning_rate: cfg.probe_learning_rate(),
        epochs: cfg.probe_epochs(),
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        freeze_body: true,
        l2: None,
        data,
        task,
    };
    run_fit(model, &plan)
}

/// Attach a fresh seeded head for the dataset's task and linear-probe it.
pub fn probe_fresh_head(
    model: &MultiHeadModel,
    data: &LabeledDataset,
    classes: usize,
    cfg: &TrainConfig,
) -> Result<MultiHeadModel> {
    let mut probed = model.clone();
    probed.add_head(
        data.task(),
        classes,
        seeding::derive_seed(cfg.seed, "probe-head-init"),
    );
    linear_probe(&probed, data, data.task(), cfg)
}

/// Body averaging: `U ← α·U_pre + (1−α)·U_fine`. Task heads are not
/// averaged; heads from both models are carried over, the fine-tuned one
/// winning where both exist.
pub fn wise_ft_average(
    pre: &MultiHeadModel,
    fine: &MultiHeadModel,
    alpha: f64,
) -> Result<MultiHeadModel> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            expected: "0 <= alpha <= 1",
        });
    }
    if !pre.same_architecture(fine) {
        return Err(Error::ArchitectureMismatch(
            "body dimensions or shared head widths differ".into(),
        ));
    }
    let mut merged = fine.clone();
    merged.body.weights = &pre.body.weights * alpha + &fine.body.weights * (1.0 - alpha);
    merged.body.bias = &pre.body.bias * alpha + &fine.body.bias * (1.0 - alpha);
    for (task, head) in &pre.heads {
        merged.heads.entry(task.clone()).or_insert_with(|| head.clone());
    }
    Ok(merged)
}

/// Artifacts of the multi-head weighted fine-tuning procedure.
#[derive(Debug, Clone)]
pub struct MultiHeadOutcome {
    /// Fine-tuned body with the pre-training task's original head.
    pub model_pretrain: MultiHeadModel,
    /// Fine-tuned body with the re-probed new-task head.
    pub model_newtask: MultiHeadModel,
    /// The step-(i) probe output (pre-trained body, fresh probed head).
    pub probe_model: MultiHeadModel,
    /// The step-(ii) weights actually used.
    pub weights: WeightVector,
    pub tau: Temperature,
}

fn multihead_pipeline(
    pre: &MultiHeadModel,
    data: &LabeledDataset,
    classes: usize,
    cfg: &TrainConfig,
    contrast: bool,
) -> Result<MultiHeadOutcome> {
    cfg.validate()?;
    let task = data.task().to_string();
    // (i) probe a fresh head for the new task, unweighted, body frozen
    let probed = probe_fresh_head(pre, data, classes, cfg)?;
    // (ii) weights from the losses at (pre-trained body, probed head)
    let losses = per_sample_losses(&probed, data, &task)?;
    let policy = cfg
        .temperature
        .clone()
        .unwrap_or(TemperaturePolicy::Median);
    let tau = select_temperature(&losses, &policy)?;
    let weights = if contrast {
        let pi = match tau {
            Temperature::Value(t) => dro_weights(&losses, t)?,
            Temperature::DegenerateUniform => {
                normalize_weights(&compute_weights(&losses, tau)?)?
            }
        };
        WeightVector::from_values(pi.values().to_vec(), tau)?
    } else {
        compute_weights(&losses, tau)?
    };
    // (iii) weighted fine-tune of the full model from (U*, probed head)
    let full = weighted_fit(&probed, data, &weights, cfg)?;
    // (iv) re-fit the new-task head on the learned body, unweighted
    let reprobed = linear_probe(&full, data, &task, cfg)?;

    let mut model_pretrain = reprobed.clone();
    model_pretrain.heads = pre.heads.clone();
    let mut model_newtask = reprobed.clone();
    model_newtask
        .heads
        .retain(|existing_task, _| existing_task == &task);
    Ok(MultiHeadOutcome {
        model_pretrain,
        model_newtask,
        probe_model: probed,
        weights,
        tau,
    })
}

/// The four-step multi-head procedure with loss-oriented weights:
/// probe a fresh new-task head; compute weights from the probed losses;
/// fine-tune the full model on the weighted loss; re-fit the new-task
/// head on the learned body. Returns models for both tasks sharing the
/// learned body — the pre-training task keeps its original head.
pub fn flow_multihead(
    pre: &MultiHeadModel,
    data: &LabeledDataset,
    classes: usize,
    cfg: &TrainConfig,
) -> Result<MultiHeadOutcome> {
    multihead_pipeline(pre, data, classes, cfg, false)
}

/// Same pipeline with the inverse (hardest-first) weighting; contrast
/// baseline only.
pub fn dro_contrast_multihead(
    pre: &MultiHeadModel,
    data: &LabeledDataset,
    classes: usize,
    cfg: &TrainConfig,
) -> Result<MultiHeadOutcome> {
    multihead_pipeline(pre, data, classes, cfg, true)
}

/// Uniform weight vector of length n (weights 1, τ degenerate).
pub fn uniform_weights(n: usize) -> WeightVector {
    WeightVector::from_values(vec![1.0; n], weighting::Temperature::DegenerateUniform)
        .expect("uniform weights are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn toy_data(n: usize, d: usize, classes: usize, seed: u64) -> LabeledDataset {
        use rand::Rng;
        let mut rng = seeding::rng_from(seed);
        let features = DMatrix::from_fn(d, n, |_, _| rng.gen_range(-1.0..1.0));
        let labels = (0..n).map(|i| i % classes).collect();
        LabeledDataset::new(features, Labels::Classes(labels), "b").unwrap()
    }

    fn toy_model(d: usize, h: usize, seed: u64) -> MultiHeadModel {
        let mut m = MultiHeadModel::new(d, h, seed);
        m.add_head("b", 3, seed + 1);
        m
    }

    #[test]
    fn uniform_logits_give_log_c_loss() {
        let mut m = toy_model(4, 6, 0);
        // zero head ⇒ identical (zero) logits for every class
        let head = m.head_mut("b").unwrap();
        head.weights.fill(0.0);
        head.bias.fill(0.0);
        let data = toy_data(10, 4, 3, 1);
        let losses = per_sample_losses(&m, &data, "b").unwrap();
        for &l in losses.values() {
            assert!((l - 3.0f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        let mut m = toy_model(2, 2, 0);
        let head = m.head_mut("b").unwrap();
        head.weights.fill(0.0);
        head.bias[0] = 60.0; // overwhelming logit for class 0
        head.bias[1] = 0.0;
        head.bias[2] = 0.0;
        let features = DMatrix::zeros(2, 1);
        let data = LabeledDataset::new(features, Labels::Classes(vec![0]), "b").unwrap();
        let losses = per_sample_losses(&m, &data, "b").unwrap();
        assert!(losses.values()[0] < 1e-12);
    }

    #[test]
    fn all_ones_weights_match_standard_fit_bitwise() {
        let m = toy_model(4, 6, 3);
        let data = toy_data(12, 4, 3, 4);
        let cfg = TrainConfig::new(crate::train::config::Method::Standard, 0.05, 40, 9);
        let a = standard_fit(&m, &data, &cfg).unwrap();
        let b = weighted_fit(&m, &data, &uniform_weights(12), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_hot_weight_trains_on_that_sample_alone() {
        let m = toy_model(3, 4, 5);
        let data = toy_data(6, 3, 3, 6);
        let mut cfg = TrainConfig::new(crate::train::config::Method::Standard, 0.1, 1, 9);
        cfg.batch_size = None;
        let mut raw = vec![0.0; 6];
        raw[2] = 1.0;
        let w = WeightVector::from_values(raw, Temperature::Value(1.0)).unwrap();
        let got = weighted_fit(&m, &data, &w, &cfg).unwrap();

        // oracle: one GD step on that sample's own loss
        let single = LabeledDataset::new(
            DMatrix::from_columns(&[data.features().column(2)]),
            Labels::Classes(vec![2 % 3]),
            "b",
        )
        .unwrap();
        let want = standard_fit(&m, &single, &cfg).unwrap();
        let gap = (got.body.weights - want.body.weights).abs().max();
        assert!(gap < 1e-12, "gap {gap}");
    }

    #[test]
    fn zero_weights_are_rejected() {
        let m = toy_model(3, 4, 5);
        let data = toy_data(6, 3, 3, 6);
        let cfg = TrainConfig::new(crate::train::config::Method::Standard, 0.1, 1, 9);
        let w = WeightVector::from_values(vec![0.0; 6], Temperature::Value(1e-9)).unwrap();
        assert!(matches!(
            weighted_fit(&m, &data, &w, &cfg),
            Err(Error::AllZeroWeights)
        ));
    }

    #[test]
    fn probe_keeps_body_bits() {
        let m = toy_model(4, 6, 7);
        let data = toy_data(20, 4, 3, 8);
        let cfg = TrainConfig::new(crate::train::config::Method::LinearProbe, 0.1, 30, 9);
        let before = m.body_fingerprint();
        let probed = linear_probe(&m, &data, "b", &cfg).unwrap();
        assert_eq!(probed.body_fingerprint(), before);
        assert_ne!(probed.head("b").unwrap(), m.head("b").unwrap());
    }

    #[test]
    fn wise_ft_endpoints_and_midpoint() {
        let pre = toy_model(4, 6, 1);
        let mut fine = toy_model(4, 6, 2);
        fine.add_head("c", 2, 3);
        let at1 = wise_ft_average(&pre, &fine, 1.0).unwrap();
        assert_eq!(at1.body, pre.body);
        let at0 = wise_ft_average(&pre, &fine, 0.0).unwrap();
        assert_eq!(at0.body, fine.body);
        let mid = wise_ft_average(&pre, &fine, 0.5).unwrap();
        for i in 0..mid.body.weights.len() {
            let want = 0.5 * (pre.body.weights[i] + fine.body.weights[i]);
            assert!((mid.body.weights[i] - want).abs() < 1e-15);
        }
        // heads survive untouched
        assert_eq!(mid.head("b").unwrap(), fine.head("b").unwrap());
        assert_eq!(mid.head("c").unwrap(), fine.head("c").unwrap());
        assert!(wise_ft_average(&pre, &fine, 1.5).is_err());
    }

    #[test]
    fn determinism_same_config_same_bits() {
        let m = toy_model(4, 6, 11);
        let data = toy_data(16, 4, 3, 12);
        let mut cfg = TrainConfig::new(crate::train::config::Method::Standard, 0.05, 25, 13);
        cfg.batch_size = Some(5);
        let a = standard_fit(&m, &data, &cfg).unwrap();
        let b = standard_fit(&m, &data, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed = 14;
        let c = standard_fit(&m, &data, &cfg).unwrap();
        assert_ne!(a, c);
    }
}

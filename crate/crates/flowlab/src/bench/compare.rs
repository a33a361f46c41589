//! The method comparison: pre-train on task A, fine-tune on task B with
//! each configured method, and report both accuracies.
//!
//! Task-A accuracy after fine-tuning is always measured with the original
//! task-A head on the (possibly updated) body — task-specific parts are
//! restored to their pre-trained state for pre-training-task evaluation.
//! Deltas follow the same rule: the pre-training column is compared
//! against the pre-trained model, the target column against standard
//! fine-tuning.

use serde::Serialize;

use crate::bench::eval::{evaluate, hard_sample_accuracy};
use crate::bench::generate::{gen_two_task_benchmark, BenchmarkSpec, TaskData, TASK_A, TASK_B};
use crate::error::{Error, Result};
use crate::seeding;
use crate::train::config::{Method, TrainConfig};
use crate::train::engine::{
    dro_contrast_multihead, flow_multihead, l2_fit, per_sample_losses, probe_fresh_head,
    standard_fit, wise_ft_average,
};
use crate::train::model::MultiHeadModel;
use crate::weighting::{LossVector, TemperaturePolicy};

/// Fraction of the target test set counted as "hard" in the report.
pub const HARD_FRACTION: f64 = 0.1;

/// One method's row in the comparison report.
#[derive(Debug, Clone, Serialize)]
pub struct MethodRow {
    pub method: String,
    pub pretrain_acc: f64,
    pub target_acc: f64,
    pub average: f64,
    /// Task-A accuracy minus the pre-trained model's task-A accuracy.
    pub delta_pre: f64,
    /// Target accuracy minus standard fine-tuning's target accuracy
    /// (absent when no standard row is part of the run).
    pub delta_target: Option<f64>,
    /// Accuracy on the hardest `HARD_FRACTION` of the target test set.
    pub hard_acc: f64,
}

/// Full comparison output.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub rows: Vec<MethodRow>,
    /// Task-A test accuracy of the pre-trained model itself.
    pub pretrained_task_a_acc: f64,
    /// Canonical-JSON hash of the benchmark spec.
    pub spec_hash: String,
    pub seed: u64,
}

impl EvalReport {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// The trained pieces a comparison evaluates.
struct MethodRun {
    /// Model evaluated on task B (carries the method's task-B head).
    model_b: MultiHeadModel,
    /// Body used for task-A evaluation (original task-A head is attached
    /// at evaluation time).
    body_for_a: MultiHeadModel,
}

/// Pre-train a fresh model on task A.
pub fn pretrain(
    bench: &BenchmarkSpec,
    task_a: &TaskData,
    cfg: &TrainConfig,
) -> Result<MultiHeadModel> {
    let mut model = MultiHeadModel::new(
        bench.input_dim,
        bench.hidden,
        seeding::derive_seed(cfg.seed, "pretrain-body-init"),
    );
    model.add_head(
        TASK_A,
        bench.classes,
        seeding::derive_seed(cfg.seed, "pretrain-head-init"),
    );
    standard_fit(&model, &task_a.train, cfg)
}

fn run_method(
    pre: &MultiHeadModel,
    task_b: &TaskData,
    classes: usize,
    cfg: &TrainConfig,
) -> Result<MethodRun> {
    cfg.validate()?;
    let fresh_head = |model: &MultiHeadModel| {
        let mut m = model.clone();
        m.add_head(
            TASK_B,
            classes,
            seeding::derive_seed(cfg.seed, "head-init"),
        );
        m
    };
    match &cfg.method {
        Method::Standard => {
            let fine = standard_fit(&fresh_head(pre), &task_b.train, cfg)?;
            Ok(MethodRun {
                body_for_a: fine.clone(),
                model_b: fine,
            })
        }
        Method::L2Reg { lambda } => {
            let fine = l2_fit(&fresh_head(pre), &task_b.train, *lambda, cfg)?;
            Ok(MethodRun {
                body_for_a: fine.clone(),
                model_b: fine,
            })
        }
        Method::LinearProbe => {
            let probed = probe_fresh_head(pre, &task_b.train, classes, cfg)?;
            Ok(MethodRun {
                body_for_a: probed.clone(),
                model_b: probed,
            })
        }
        Method::WiseFt { alpha } => {
            let fine = standard_fit(&fresh_head(pre), &task_b.train, cfg)?;
            let averaged = wise_ft_average(pre, &fine, *alpha)?;
            Ok(MethodRun {
                body_for_a: averaged.clone(),
                model_b: averaged,
            })
        }
        Method::Flow => {
            let outcome = flow_multihead(pre, &task_b.train, classes, cfg)?;
            Ok(MethodRun {
                body_for_a: outcome.model_pretrain,
                model_b: outcome.model_newtask,
            })
        }
        Method::DroContrast => {
            let outcome = dro_contrast_multihead(pre, &task_b.train, classes, cfg)?;
            Ok(MethodRun {
                body_for_a: outcome.model_pretrain,
                model_b: outcome.model_newtask,
            })
        }
    }
}

/// Evaluate task A with the method's body and the original task-A head.
fn eval_task_a(run_body: &MultiHeadModel, pre: &MultiHeadModel, task_a: &TaskData) -> Result<f64> {
    let mut eval_model = run_body.clone();
    eval_model
        .heads
        .insert(TASK_A.to_string(), pre.head(TASK_A)?.clone());
    evaluate(&eval_model, &task_a.test, TASK_A)
}

/// Losses of the task-B test samples under the pre-trained model with a
/// canonically probed task-B head; this fixed ranking defines the "hard"
/// subset for every method.
pub fn canonical_hard_losses(
    pre: &MultiHeadModel,
    bench: &BenchmarkSpec,
    task_b: &TaskData,
    pretrain_cfg: &TrainConfig,
) -> Result<LossVector> {
    let mut probe_cfg = pretrain_cfg.clone();
    probe_cfg.seed = seeding::derive_seed(bench.seed, "hard-sample-probe");
    let probed = probe_fresh_head(pre, &task_b.train, bench.classes, &probe_cfg)?;
    per_sample_losses(&probed, &task_b.test, TASK_B)
}

/// Run the full comparison on a generated benchmark.
pub fn run_comparison(
    bench: &BenchmarkSpec,
    pretrain_cfg: &TrainConfig,
    methods: &[TrainConfig],
) -> Result<EvalReport> {
    if methods.is_empty() {
        return Err(Error::EmptyInput);
    }
    pretrain_cfg.validate()?;
    for cfg in methods {
        cfg.validate()?;
    }
    let (task_a, task_b) = gen_two_task_benchmark(bench)?;
    let pre = pretrain(bench, &task_a, pretrain_cfg)?;
    let pretrained_task_a_acc = evaluate(&pre, &task_a.test, TASK_A)?;
    let hard_losses = canonical_hard_losses(&pre, bench, &task_b, pretrain_cfg)?;

    let mut rows = Vec::with_capacity(methods.len());
    for cfg in methods {
        let run = run_method(&pre, &task_b, bench.classes, cfg)?;
        let pretrain_acc = eval_task_a(&run.body_for_a, &pre, &task_a)?;
        let target_acc = evaluate(&run.model_b, &task_b.test, TASK_B)?;
        let hard_acc =
            hard_sample_accuracy(&run.model_b, &task_b.test, &hard_losses, HARD_FRACTION)?;
        rows.push(MethodRow {
            method: cfg.method.name(),
            pretrain_acc,
            target_acc,
            average: (pretrain_acc + target_acc) / 2.0,
            delta_pre: pretrain_acc - pretrained_task_a_acc,
            delta_target: None,
            hard_acc,
        });
    }
    let standard_target = methods
        .iter()
        .zip(&rows)
        .find(|(cfg, _)| matches!(cfg.method, Method::Standard))
        .map(|(_, row)| row.target_acc);
    if let Some(reference) = standard_target {
        for row in &mut rows {
            row.delta_target = Some(row.target_acc - reference);
        }
    }
    Ok(EvalReport {
        rows,
        pretrained_task_a_acc,
        spec_hash: crate::io::canonical_json_hash(bench)?,
        seed: bench.seed,
    })
}

/// One α of the body-averaging sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub pretrain_acc: f64,
    pub target_acc: f64,
    pub average: f64,
}

/// Evaluate the convex body-combination between a pre-trained and a
/// fine-tuned model over a grid of α values.
pub fn averaging_sweep(
    pre: &MultiHeadModel,
    fine: &MultiHeadModel,
    task_a: &TaskData,
    task_b: &TaskData,
    alphas: &[f64],
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::OutOfRange {
                what: "alpha",
                value: alpha,
                expected: "0 <= alpha <= 1",
            });
        }
        let averaged = wise_ft_average(pre, fine, alpha)?;
        let pretrain_acc = eval_task_a(&averaged, pre, task_a)?;
        let target_acc = evaluate(&averaged, &task_b.test, TASK_B)?;
        rows.push(SweepRow {
            alpha,
            pretrain_acc,
            target_acc,
            average: (pretrain_acc + target_acc) / 2.0,
        });
    }
    Ok(rows)
}

/// One percentile of the temperature ablation.
#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub percentile: f64,
    pub pretrain_acc: f64,
    pub target_acc: f64,
    pub average: f64,
}

/// Re-run the weighted pipeline with τ set to different percentiles of
/// the probed losses.
pub fn tau_ablation(
    bench: &BenchmarkSpec,
    pretrain_cfg: &TrainConfig,
    flow_cfg: &TrainConfig,
    percentiles: &[f64],
) -> Result<Vec<AblationRow>> {
    if !matches!(flow_cfg.method, Method::Flow) {
        return Err(Error::InvalidConfig(
            "tau_ablation needs a flow method config".into(),
        ));
    }
    let (task_a, task_b) = gen_two_task_benchmark(bench)?;
    let pre = pretrain(bench, &task_a, pretrain_cfg)?;
    let mut rows = Vec::with_capacity(percentiles.len());
    for &p in percentiles {
        let mut cfg = flow_cfg.clone();
        cfg.temperature = Some(TemperaturePolicy::Percentile(p));
        cfg.validate()?;
        let outcome = flow_multihead(&pre, &task_b.train, bench.classes, &cfg)?;
        let pretrain_acc = eval_task_a(&outcome.model_pretrain, &pre, &task_a)?;
        let target_acc = evaluate(&outcome.model_newtask, &task_b.test, TASK_B)?;
        rows.push(AblationRow {
            percentile: p,
            pretrain_acc,
            target_acc,
            average: (pretrain_acc + target_acc) / 2.0,
        });
    }
    Ok(rows)
}

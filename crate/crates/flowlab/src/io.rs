//! File formats: CSV interchange and JSON checkpoints.
//!
//! All CSVs use `,` delimiters, `.` decimal points, LF line endings and a
//! header row.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bench::compare::{AblationRow, EvalReport, SweepRow};
use crate::error::{Error, Result};
use crate::theory::trajectory::Trajectory;
use crate::train::model::MultiHeadModel;
use crate::weighting::{LossVector, Temperature, WeightVector};

/// Read a single-column loss CSV with header `loss`. Parse failures name
/// the offending line (header is line 1).
pub fn read_loss_csv(path: &Path) -> Result<LossVector> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let display = path.display().to_string();
    let mut values = Vec::new();
    let mut lines = reader.lines().enumerate();
    let header = lines.next().ok_or(Error::EmptyInput)?;
    let header_text = header.1?;
    if header_text.trim() != "loss" {
        return Err(Error::Parse {
            path: display,
            line: 1,
            message: format!("expected header \"loss\", found {:?}", header_text.trim()),
        });
    }
    for (idx, line) in lines {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            path: display.clone(),
            line: idx + 1,
            message: format!("cannot parse {text:?} as a loss"),
        })?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            path: display,
            line: 1,
            message: "no loss rows".into(),
        });
    }
    LossVector::new(values)
}

pub fn write_loss_csv(path: &Path, losses: &LossVector) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["loss"])?;
    for v in losses.values() {
        w.write_record([format_float(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Write weights as `index,weight` rows.
pub fn write_weights_csv(path: &Path, weights: &WeightVector) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "weight"])?;
    for (i, v) in weights.values().iter().enumerate() {
        w.write_record([i.to_string(), format_float(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON sidecar recording the τ actually used and the policy string.
/// The degenerate-uniform sentinel serializes τ as null.
pub fn write_tau_sidecar(path: &Path, tau: Temperature, policy: &str) -> Result<()> {
    #[derive(Serialize)]
    struct Sidecar<'a> {
        tau: Option<f64>,
        policy: &'a str,
    }
    let sidecar = Sidecar {
        tau: tau.value(),
        policy,
    };
    std::fs::write(path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

fn format_float(v: f64) -> String {
    // shortest round-trip representation; deterministic across runs
    format!("{v}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Trajectory CSV: `k,method,coef_e,coef_eperp,err1,err2,err_tot,gamma`.
pub fn write_trajectory_csv(path: &Path, trajectories: &[&Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "k", "method", "coef_e", "coef_eperp", "err1", "err2", "err_tot", "gamma",
    ])?;
    for traj in trajectories {
        for p in &traj.points {
            w.write_record([
                p.k.to_string(),
                traj.method.as_str().to_string(),
                format_float(p.coef_e),
                format_float(p.coef_eperp),
                format_float(p.err1),
                format_float(p.err2),
                format_float(p.err_tot),
                format_opt(p.gamma),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Covariance check CSV: `row,col,closed,mc,abs_err` per matrix entry.
pub fn write_covariance_check_csv(
    path: &Path,
    closed: &nalgebra::DMatrix<f64>,
    mc: &nalgebra::DMatrix<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "col", "closed", "mc", "abs_err"])?;
    for i in 0..closed.nrows() {
        for j in 0..closed.ncols() {
            w.write_record([
                i.to_string(),
                j.to_string(),
                format_float(closed[(i, j)]),
                format_float(mc[(i, j)]),
                format_float((closed[(i, j)] - mc[(i, j)]).abs()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Report CSV:
/// `method,pretrain_acc,target_acc,average,delta_pre,delta_target,hard_acc`.
pub fn write_report_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "method",
        "pretrain_acc",
        "target_acc",
        "average",
        "delta_pre",
        "delta_target",
        "hard_acc",
    ])?;
    for row in &report.rows {
        w.write_record([
            row.method.clone(),
            format_float(row.pretrain_acc),
            format_float(row.target_acc),
            format_float(row.average),
            format_float(row.delta_pre),
            format_opt(row.delta_target),
            format_float(row.hard_acc),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_json(path: &Path, report: &EvalReport) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

/// Sweep CSV: `alpha,pretrain_acc,target_acc,average`.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["alpha", "pretrain_acc", "target_acc", "average"])?;
    for r in rows {
        w.write_record([
            format_float(r.alpha),
            format_float(r.pretrain_acc),
            format_float(r.target_acc),
            format_float(r.average),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Ablation CSV: `percentile,pretrain_acc,target_acc,average`.
pub fn write_ablation_csv(path: &Path, rows: &[AblationRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["percentile", "pretrain_acc", "target_acc", "average"])?;
    for r in rows {
        w.write_record([
            format_float(r.percentile),
            format_float(r.pretrain_acc),
            format_float(r.target_acc),
            format_float(r.average),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, serde::Deserialize)]
struct CheckpointDims {
    input: usize,
    hidden: usize,
    classes: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize, serde::Deserialize)]
struct Checkpoint {
    dims: CheckpointDims,
    /// Body weights row-major, then body bias.
    body: Vec<f64>,
    /// Per-task head weights row-major, then head bias.
    heads: BTreeMap<String, Vec<f64>>,
}

/// Save a model checkpoint as JSON with row-major flattened matrices.
pub fn save_model(path: &Path, model: &MultiHeadModel) -> Result<()> {
    let mut classes = BTreeMap::new();
    let mut heads = BTreeMap::new();
    for task in model.heads.keys() {
        classes.insert(task.clone(), model.classes(task)?);
        heads.insert(task.clone(), model.head_flat(task)?);
    }
    let ckpt = Checkpoint {
        dims: CheckpointDims {
            input: model.input_dim(),
            hidden: model.hidden_dim(),
            classes,
        },
        body: model.body_flat(),
        heads,
    };
    std::fs::write(path, serde_json::to_string(&ckpt)?)?;
    Ok(())
}

/// Load a model checkpoint written by [`save_model`].
pub fn load_model(path: &Path) -> Result<MultiHeadModel> {
    let text = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    let mut model = MultiHeadModel::new(ckpt.dims.input, ckpt.dims.hidden, 0);
    model.set_body_flat(&ckpt.body)?;
    for (task, classes) in &ckpt.dims.classes {
        let flat = ckpt.heads.get(task).ok_or_else(|| {
            Error::InvalidConfig(format!("checkpoint is missing head data for task {task:?}"))
        })?;
        model.add_head(task, *classes, 0);
        model.set_head_flat(task, flat)?;
    }
    Ok(model)
}

/// SHA-256 of the canonical JSON encoding (object keys sorted, no
/// whitespace); stable under re-ordering of keys in the source.
pub fn canonical_json_hash<T: Serialize>(value: &T) -> Result<String> {
    // serde_json::Value orders map keys, so a Value round-trip
    // canonicalizes
    let canonical = serde_json::to_string(&serde_json::to_value(value)?)?;
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

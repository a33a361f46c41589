//! Finite-sample weighted least squares on the linear fine-tuning task.
//!
//! Draws `n` inputs from the fine-tuning distribution with noise-free
//! labels `ỹ = ⟨θ̃*, x̃⟩`, weights each sample by
//! `w = exp(−(ỹ − ⟨θ*, x̃⟩)²/τ)`, and runs gradient descent on
//! `(1/n) Σ w_i (ỹ_i − ⟨θ, x̃_i⟩)²` from θ*. As n grows the trajectory
//! converges to the population closed form.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::seeding;
use crate::theory::covariance::basis_sampler;
use crate::theory::task::LinearTaskSpec;
use crate::theory::trajectory::{
    population_errors, Trajectory, TrajectoryMethod, TrajectoryPoint,
};

fn empirical_trajectory(
    spec: &LinearTaskSpec,
    n: usize,
    tau: Option<f64>,
    eta: f64,
    k_steps: usize,
    seed: u64,
    method: TrajectoryMethod,
) -> Result<Trajectory> {
    if n < spec.dim() {
        return Err(Error::InvalidConfig(format!(
            "need at least d = {} samples, got {n}",
            spec.dim()
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::OutOfRange {
            what: "eta",
            value: eta,
            expected: "> 0",
        });
    }
    if let Some(t) = tau {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::NonPositiveTemperature(t));
        }
    }
    let samples = basis_sampler(spec, n, seeding::derive_seed(seed, "empirical-samples"));
    let d = spec.dim();
    // second-moment matrix A = (1/n) Σ w x xᵀ and cross term b = (1/n) Σ w y x;
    // the weighted gradient is then exactly 2(Aθ − b)
    let mut a = DMatrix::zeros(d, d);
    let mut bvec = DVector::zeros(d);
    let inv_n = 1.0 / n as f64;
    for x in &samples {
        let y = spec.theta_ft().dot(x);
        let w = match tau {
            Some(t) => {
                let residual = y - spec.theta_pre().dot(x);
                (-residual * residual / t).exp()
            }
            None => 1.0,
        };
        let wx = w * inv_n;
        a.syger(wx, x, x, 1.0);
        bvec.axpy(wx * y, x, 1.0);
    }
    a.fill_upper_triangle_with_lower_triangle();

    let gap = spec.gap_norm();
    let mut theta = spec.theta_pre().clone();
    let mut points = Vec::with_capacity(k_steps + 1);
    for k in 0..=k_steps {
        let diff = &theta - spec.theta_ft();
        let (err1, err2, err_tot) = population_errors(&theta, spec)?;
        points.push(TrajectoryPoint {
            k,
            theta: theta.clone(),
            coef_e: diff.dot(spec.e_bar()) / gap,
            coef_eperp: diff.dot(spec.e_perp()) / gap,
            err1,
            err2,
            err_tot,
            gamma: None,
            stalled_approx: None,
        });
        if k < k_steps {
            let grad = (&a * &theta - &bvec) * 2.0;
            if grad.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient { epoch: k });
            }
            theta -= grad * eta;
        }
    }
    Ok(Trajectory {
        method,
        eta,
        beta: None,
        tau,
        points,
    })
}

/// Weighted finite-sample trajectory from θ*.
pub fn empirical_flow_linear(
    spec: &LinearTaskSpec,
    n: usize,
    tau: f64,
    eta: f64,
    k_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    empirical_trajectory(
        spec,
        n,
        Some(tau),
        eta,
        k_steps,
        seed,
        TrajectoryMethod::EmpiricalFlow,
    )
}

/// Unweighted finite-sample trajectory from θ* (vanilla fine-tuning).
pub fn empirical_ft_linear(
    spec: &LinearTaskSpec,
    n: usize,
    eta: f64,
    k_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    empirical_trajectory(
        spec,
        n,
        None,
        eta,
        k_steps,
        seed,
        TrajectoryMethod::EmpiricalFt,
    )
}

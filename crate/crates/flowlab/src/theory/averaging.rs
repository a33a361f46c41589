//! Model averaging between the two optima, and the sweep showing the
//! weighted trajectory reaches at least as low a total error.
//!
//! The averaged model `θ_avg(ω) = θ̃* + ω e` has
//! `err_tot(ω) = (1−ω)² eᵀΣe + ω²‖e‖²`, minimized at
//! `ω* = ēᵀΣē/(ēᵀΣē + 1)` with value `err* = ω*·‖e‖² < ‖e‖²`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::theory::spectrum::q_eigen_reduced;
use crate::theory::task::LinearTaskSpec;
use crate::theory::trajectory::FlowCoefIter;

/// `θ_avg(ω) = θ̃* + ω e`.
pub fn model_average(spec: &LinearTaskSpec, omega: f64) -> Result<DVector<f64>> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::OutOfRange {
            what: "omega",
            value: omega,
            expected: "0 <= omega <= 1",
        });
    }
    Ok(spec.theta_ft() + spec.e() * omega)
}

/// The optimal averaging coefficient and its total error:
/// `ω* = ēᵀΣē/(ēᵀΣē + 1)`, `err* = ω*‖e‖²`.
pub fn optimal_averaging(spec: &LinearTaskSpec) -> (f64, f64) {
    let (ese, _, _) = spec.sigma_pre_plane_forms();
    let omega_star = ese / (ese + 1.0);
    let err_star = omega_star * spec.gap_norm().powi(2);
    (omega_star, err_star)
}

/// Result of sweeping the weighted trajectory against tuned averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingCheck {
    /// Smallest total error found over the (β, K) grid.
    pub min_err_tot: f64,
    pub best_beta: f64,
    pub best_k: usize,
    /// Total error of optimally tuned model averaging.
    pub err_star: f64,
    pub omega_star: f64,
    /// Whether `min_err_tot ≤ err* + 1e−6`.
    pub beats_averaging: bool,
}

/// Sweep the weighted closed form over a β grid (up to `k_max` steps each)
/// and compare the minimum total error with optimally tuned averaging.
///
/// The per-step coefficients come from the same iterator that powers
/// `flow_trajectory`, evaluated through the plane quadratic forms of Σ, so
/// each swept point is literally a trajectory point. The K loop stops
/// early once the iterate has passed the optimum (`coef_e` below 0.02;
/// the averaging optimum satisfies ω* ≥ ½ because Σ ⪰ I).
pub fn flow_beats_averaging_check(
    spec: &LinearTaskSpec,
    beta_grid: &[f64],
    k_max: usize,
) -> Result<AveragingCheck> {
    if beta_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k_max < 1 {
        return Err(Error::OutOfRange {
            what: "k_max",
            value: k_max as f64,
            expected: ">= 1",
        });
    }
    let rho = spec.rho();
    let gap2 = spec.gap_norm().powi(2);
    let (ese, psp, esp) = spec.sigma_pre_plane_forms();
    let mut best = (f64::INFINITY, 0.0, 0usize);
    for &beta in beta_grid {
        let spectrum = q_eigen_reduced(beta, rho)?;
        for (k, ce, cp, _) in FlowCoefIter::new(&spectrum, rho).take(k_max + 1) {
            // err1: θ − θ* = (ce−1)·e + cp·‖e‖·ē⊥ under Σ
            let de = ce - 1.0;
            let err1 = gap2 * (de * de * ese + cp * cp * psp + 2.0 * de * cp * esp);
            // err2: θ − θ̃* under Σ̃ (ēᵀΣ̃ē = ē⊥ᵀΣ̃ē⊥ = 1, ēᵀΣ̃ē⊥ = ρ)
            let err2 = gap2 * (ce * ce + cp * cp + 2.0 * rho * ce * cp);
            let tot = err1 + err2;
            if tot < best.0 {
                best = (tot, beta, k);
            }
            if ce < 0.02 {
                break;
            }
        }
    }
    let (omega_star, err_star) = optimal_averaging(spec);
    Ok(AveragingCheck {
        min_err_tot: best.0,
        best_beta: best.1,
        best_k: best.2,
        err_star,
        omega_star,
        beats_averaging: best.0 <= err_star + 1e-6,
    })
}

/// Geometric β grid suitable for the averaging sweep. The gap between the
/// swept minimum and err* closes linearly in β, so reaching the 1e−6
/// agreement needs β values down to ~1e−6.
pub fn default_beta_grid() -> Vec<f64> {
    geometric_grid(2e-6, 1.0, 120)
}

/// `count` points geometrically spaced over [lo, hi].
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    let mut v = Vec::with_capacity(count);
    let mut x = lo;
    for _ in 0..count - 1 {
        v.push(x);
        x *= ratio;
    }
    v.push(hi);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::task::make_task;
    use crate::theory::trajectory::population_errors;

    #[test]
    fn endpoints_are_the_two_optima() {
        let spec = make_task(4, 0.3, 1.5, 2).unwrap();
        assert!((model_average(&spec, 0.0).unwrap() - spec.theta_ft()).norm() < 1e-15);
        assert!((model_average(&spec, 1.0).unwrap() - spec.theta_pre()).norm() < 1e-15);
        assert!(model_average(&spec, 1.5).is_err());
    }

    #[test]
    fn identity_sigma_halves_the_error() {
        let spec = make_task(4, 0.5, 2.0, 3).unwrap();
        let (omega, err) = optimal_averaging(&spec);
        assert!((omega - 0.5).abs() < 1e-12);
        assert!((err - spec.gap_norm().powi(2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_grid_sweep() {
        for sigma_diag in [false, true] {
            let mut spec = make_task(5, 0.4, 1.3, 4).unwrap();
            if sigma_diag {
                let mut diag = nalgebra::DVector::from_element(5, 1.0);
                diag[0] = 4.0;
                spec = spec
                    .with_sigma_pre(nalgebra::DMatrix::from_diagonal(&diag))
                    .unwrap();
            }
            let (_, err_star) = optimal_averaging(&spec);
            let mut sweep_min = f64::INFINITY;
            for i in 0..=10_000 {
                let omega = i as f64 / 10_000.0;
                let theta = model_average(&spec, omega).unwrap();
                let (_, _, tot) = population_errors(&theta, &spec).unwrap();
                sweep_min = sweep_min.min(tot);
            }
            assert!(
                (sweep_min - err_star).abs() < 1e-6,
                "diag={sigma_diag}: sweep {sweep_min} vs closed {err_star}"
            );
        }
    }

    #[test]
    fn sweep_beats_or_ties_tuned_averaging() {
        let spec = make_task(4, 0.0, 1.0, 5).unwrap();
        let check =
            flow_beats_averaging_check(&spec, &default_beta_grid(), 3_000_000).unwrap();
        assert!(check.beats_averaging, "gap {}", check.min_err_tot - check.err_star);
        assert!(check.min_err_tot < spec.gap_norm().powi(2));
    }
}

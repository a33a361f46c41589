//! Gradient-descent trajectories on the two-task populations.
//!
//! Both closed forms describe GD started at θ* on a quadratic objective:
//!
//! * vanilla: `θ̄_K = θ̃* + (I − 2η̄ Σ̃)^K e`; at η̄ = ½ this collapses to
//!   `θ̃* + ρ^K (1(K even)·e − 1(K odd)·‖e‖ ē⊥)`.
//! * weighted: `θ̂_K = θ̃* + (I − 2η̂ Σ̃')^K e`; at η̂ = 1/(2μ) the matrix
//!   becomes Q and the iterate is a two-eigenvalue sum driven by
//!   (λ̂₁, λ̂₂).
//!
//! All iterates stay in the affine plane `θ̃* + span(ē, ē⊥)`, so the
//! closed forms track two scalar coefficients. `simulate_gd` runs the
//! actual d-dimensional recursion and is the independent oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::theory::spectrum::{q_eigen_reduced, QSpectrum};
use crate::theory::task::LinearTaskSpec;

/// Which optimization produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryMethod {
    VanillaFt,
    Flow,
    SimulatedGd,
    EmpiricalFlow,
    EmpiricalFt,
}

impl TrajectoryMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrajectoryMethod::VanillaFt => "vanilla_ft",
            TrajectoryMethod::Flow => "flow",
            TrajectoryMethod::SimulatedGd => "simulated_gd",
            TrajectoryMethod::EmpiricalFlow => "empirical_flow",
            TrajectoryMethod::EmpiricalFt => "empirical_ft",
        }
    }
}

/// One GD iterate with its population errors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub k: usize,
    pub theta: DVector<f64>,
    /// Coefficient on `e` in `θ − θ̃* = coef_e·e + coef_eperp·‖e‖·ē⊥`.
    pub coef_e: f64,
    /// Coefficient on `‖e‖ ē⊥`.
    pub coef_eperp: f64,
    pub err1: f64,
    pub err2: f64,
    pub err_tot: f64,
    /// `γ(k, β) = λ̂₁^k / (1 + β²ρ²)`, only for weighted trajectories.
    pub gamma: Option<f64>,
    /// The stalled-direction approximation `θ̃* + γ(e − βρ‖e‖ē⊥)`.
    pub stalled_approx: Option<DVector<f64>>,
}

/// A sequence of iterates θ_0..θ_K plus the configuration that made it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub method: TrajectoryMethod,
    pub eta: f64,
    pub beta: Option<f64>,
    pub tau: Option<f64>,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn final_theta(&self) -> &DVector<f64> {
        &self.points.last().expect("trajectory has K+1 >= 1 points").theta
    }
}

/// Population errors of a parameter vector on both tasks:
/// `err1 = (θ−θ*)ᵀΣ(θ−θ*)`, `err2 = (θ−θ̃*)ᵀΣ̃(θ−θ̃*)`, and their sum.
pub fn population_errors(theta: &DVector<f64>, spec: &LinearTaskSpec) -> Result<(f64, f64, f64)> {
    if theta.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            left: theta.len(),
            right: spec.dim(),
        });
    }
    let d1 = theta - spec.theta_pre();
    let err1 = d1.dot(&(spec.sigma_pre() * &d1));
    let d2 = theta - spec.theta_ft();
    let err2 = d2.dot(&(spec.sigma_tilde() * &d2));
    Ok((err1, err2, err1 + err2))
}

fn point_from_coefs(
    spec: &LinearTaskSpec,
    k: usize,
    coef_e: f64,
    coef_eperp: f64,
    gamma: Option<f64>,
    stalled_approx: Option<DVector<f64>>,
) -> TrajectoryPoint {
    let gap = spec.gap_norm();
    let theta = spec.theta_ft() + spec.e() * coef_e + spec.e_perp() * (coef_eperp * gap);
    let (err1, err2, err_tot) =
        population_errors(&theta, spec).expect("coefficients live in the task's plane");
    TrajectoryPoint {
        k,
        theta,
        coef_e,
        coef_eperp,
        err1,
        err2,
        err_tot,
        gamma,
        stalled_approx,
    }
}

/// Closed-form vanilla fine-tuning trajectory for a constant learning
/// rate. The map `I − 2η̄Σ̃` has eigenvalues `1 − 2η̄(1±ρ)` on
/// `(ē ± ē⊥)/√2`, giving exact scalar recursions for both coefficients.
pub fn vanilla_ft_trajectory(spec: &LinearTaskSpec, eta: f64, k_steps: usize) -> Result<Trajectory> {
    if !(eta > 0.0) {
        return Err(Error::OutOfRange {
            what: "eta",
            value: eta,
            expected: "> 0",
        });
    }
    let rho = spec.rho();
    let lam_plus = 1.0 - 2.0 * eta - 2.0 * eta * rho; // eigenvalue on (ē+ē⊥)/√2
    let lam_minus = 1.0 - 2.0 * eta + 2.0 * eta * rho; // eigenvalue on (ē−ē⊥)/√2
    let mut points = Vec::with_capacity(k_steps + 1);
    let (mut pk, mut mk) = (1.0f64, 1.0f64);
    for k in 0..=k_steps {
        let coef_e = 0.5 * (pk + mk);
        let coef_eperp = 0.5 * (pk - mk);
        points.push(point_from_coefs(spec, k, coef_e, coef_eperp, None, None));
        pk *= lam_plus;
        mk *= lam_minus;
    }
    Ok(Trajectory {
        method: TrajectoryMethod::VanillaFt,
        eta,
        beta: None,
        tau: None,
        points,
    })
}

/// Incremental per-step coefficients of the weighted closed form at
/// η̂ = 1/(2μ):
///
/// ```text
/// coef_e(k)     = (λ̂₁^k + λ̂₂^k β²ρ²) / (1+β²ρ²)
/// coef_eperp(k) = −βρ (λ̂₁^k − λ̂₂^k) / (1+β²ρ²)
/// γ(k)          = λ̂₁^k / (1+β²ρ²)
/// ```
///
/// Shared by `flow_trajectory` and the averaging sweep so both walk the
/// identical sequence.
pub struct FlowCoefIter {
    beta_rho: f64,
    denom: f64,
    lambda1: f64,
    lambda2: f64,
    l1k: f64,
    l2k: f64,
    k: usize,
}

impl FlowCoefIter {
    pub fn new(spectrum: &QSpectrum, rho: f64) -> Self {
        let beta_rho = spectrum.beta * rho;
        Self {
            beta_rho,
            denom: 1.0 + beta_rho * beta_rho,
            lambda1: spectrum.lambda1,
            lambda2: spectrum.lambda2,
            l1k: 1.0,
            l2k: 1.0,
            k: 0,
        }
    }
}

/// (k, coef_e, coef_eperp, gamma)
impl Iterator for FlowCoefIter {
    type Item = (usize, f64, f64, f64);

    fn next(&mut self) -> Option<Self::Item> {
        let coef_e = (self.l1k + self.l2k * self.beta_rho * self.beta_rho) / self.denom;
        let coef_eperp = -self.beta_rho * (self.l1k - self.l2k) / self.denom;
        let gamma = self.l1k / self.denom;
        let k = self.k;
        self.l1k *= self.lambda1;
        self.l2k *= self.lambda2;
        self.k += 1;
        Some((k, coef_e, coef_eperp, gamma))
    }
}

/// Closed-form weighted trajectory at the paper pairing η̂ = 1/(2μ).
pub fn flow_trajectory(spec: &LinearTaskSpec, beta: f64, k_steps: usize) -> Result<Trajectory> {
    let rho = spec.rho();
    let spectrum = q_eigen_reduced(beta, rho)?;
    let eta = 1.0 / (2.0 * spectrum.mu);
    let gap = spec.gap_norm();
    let stall_dir = spec.e() - spec.e_perp() * (beta * rho * gap);
    let mut points = Vec::with_capacity(k_steps + 1);
    for (k, coef_e, coef_eperp, gamma) in FlowCoefIter::new(&spectrum, rho).take(k_steps + 1) {
        let approx = spec.theta_ft() + &stall_dir * gamma;
        points.push(point_from_coefs(
            spec,
            k,
            coef_e,
            coef_eperp,
            Some(gamma),
            Some(approx),
        ));
    }
    Ok(Trajectory {
        method: TrajectoryMethod::Flow,
        eta,
        beta: Some(beta),
        tau: Some(crate::theory::spectrum::beta_to_tau(beta, rho, gap)?),
        points,
    })
}

/// Weighted closed form with a caller-chosen learning rate: iterates the
/// reduced 2×2 system `c_{k+1} = (I₂ − 2η̂ S) c_k` with `S = μ(I₂ − A)`.
pub fn flow_trajectory_with_eta(
    spec: &LinearTaskSpec,
    beta: f64,
    eta: f64,
    k_steps: usize,
) -> Result<Trajectory> {
    if !(eta > 0.0) {
        return Err(Error::OutOfRange {
            what: "eta",
            value: eta,
            expected: "> 0",
        });
    }
    let rho = spec.rho();
    let spectrum = q_eigen_reduced(beta, rho)?;
    let a = crate::theory::spectrum::reduced_q_matrix(beta, rho)?;
    let s = (nalgebra::Matrix2::identity() - a) * spectrum.mu;
    let map = nalgebra::Matrix2::identity() - s * (2.0 * eta);
    let mut c = nalgebra::Vector2::new(1.0, 0.0);
    let mut points = Vec::with_capacity(k_steps + 1);
    for k in 0..=k_steps {
        points.push(point_from_coefs(spec, k, c[0], c[1], None, None));
        c = map * c;
    }
    Ok(Trajectory {
        method: TrajectoryMethod::Flow,
        eta,
        beta: Some(beta),
        tau: Some(crate::theory::spectrum::beta_to_tau(beta, rho, spec.gap_norm())?),
        points,
    })
}

/// Plain GD on the quadratic `(θ−θ_opt)ᵀ M (θ−θ_opt)`:
/// `θ_{k+1} = θ_k − 2η·M·(θ_k − θ_opt)`. Returns all iterates θ_0..θ_K.
///
/// This is the numeric oracle for both closed forms; it shares no code
/// with them.
pub fn simulate_gd(
    sigma_eff: &DMatrix<f64>,
    theta0: &DVector<f64>,
    theta_opt: &DVector<f64>,
    eta: f64,
    k_steps: usize,
) -> Result<Vec<DVector<f64>>> {
    if !(eta > 0.0) {
        return Err(Error::OutOfRange {
            what: "eta",
            value: eta,
            expected: "> 0",
        });
    }
    let initial_gap = (theta0 - theta_opt).norm();
    let limit = 1e6 * initial_gap;
    let mut iterates = Vec::with_capacity(k_steps + 1);
    let mut theta = theta0.clone();
    for step in 0..=k_steps {
        let gap = (&theta - theta_opt).norm();
        if gap > limit {
            return Err(Error::DivergenceDetected { step });
        }
        iterates.push(theta.clone());
        if step < k_steps {
            let grad = sigma_eff * (&theta - theta_opt) * 2.0;
            theta -= grad * eta;
        }
    }
    Ok(iterates)
}

/// `simulate_gd` from θ* toward θ̃*, packaged with population errors.
pub fn simulate_gd_trajectory(
    spec: &LinearTaskSpec,
    sigma_eff: &DMatrix<f64>,
    eta: f64,
    k_steps: usize,
) -> Result<Trajectory> {
    let iterates = simulate_gd(sigma_eff, spec.theta_pre(), spec.theta_ft(), eta, k_steps)?;
    let gap = spec.gap_norm();
    let points = iterates
        .into_iter()
        .enumerate()
        .map(|(k, theta)| {
            let diff = &theta - spec.theta_ft();
            let coef_e = diff.dot(spec.e_bar()) / gap;
            let coef_eperp = diff.dot(spec.e_perp()) / gap;
            let (err1, err2, err_tot) = population_errors(&theta, spec)?;
            Ok(TrajectoryPoint {
                k,
                theta,
                coef_e,
                coef_eperp,
                err1,
                err2,
                err_tot,
                gamma: None,
                stalled_approx: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        method: TrajectoryMethod::SimulatedGd,
        eta,
        beta: None,
        tau: None,
        points,
    })
}

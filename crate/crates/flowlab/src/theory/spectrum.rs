//! Eigen-structure of the trajectory matrix Q.
//!
//! Q is rank-2 with both eigenvectors in span(ē, ē⊥), so everything
//! reduces to the 2×2 matrix
//!
//! ```text
//! A = [ 1−μ²     −ρμ²      ]
//!     [ −ρμ²    ρ²(1−μ²)   ]
//! ```
//!
//! Under the re-parameterization `μ² = β(1−ρ²)/((1+β)(1−βρ²))`, β ∈ (0,1],
//! the eigenvalues take the closed forms
//!
//! ```text
//! λ̂₁ = (1+βρ²)/(1+β),   λ̂₂ = ρ²(1−β)/(1−βρ²),
//! ```
//!
//! with eigenvectors `v̂₁ ∝ ē − βρ ē⊥` and `v̂₂ ∝ −βρ ē − ē⊥`. Shrinking β
//! pushes λ̂₁ toward 1, which is what stalls the weighted trajectory along
//! v̂₁.

use nalgebra::{DVector, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::theory::task::LinearTaskSpec;

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "beta",
            value: beta,
            expected: "0 < beta <= 1",
        })
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "rho",
            value: rho,
            expected: "0 <= rho < 1",
        })
    }
}

/// `μ(β, ρ) = sqrt( β(1−ρ²) / ((1+β)(1−βρ²)) )`.
pub fn beta_to_mu(beta: f64, rho: f64) -> Result<f64> {
    check_beta(beta)?;
    check_rho(rho)?;
    Ok((beta * (1.0 - rho * rho) / ((1.0 + beta) * (1.0 - beta * rho * rho))).sqrt())
}

/// The temperature realizing a given β: `τ = 2β(1−ρ²)‖e‖² / (1−β²ρ²)`.
pub fn beta_to_tau(beta: f64, rho: f64, gap_norm: f64) -> Result<f64> {
    check_beta(beta)?;
    check_rho(rho)?;
    if !(gap_norm > 0.0) {
        return Err(Error::OutOfRange {
            what: "gap_norm",
            value: gap_norm,
            expected: "> 0",
        });
    }
    Ok(2.0 * beta * (1.0 - rho * rho) * gap_norm * gap_norm / (1.0 - beta * beta * rho * rho))
}

/// Closed-form spectrum of the reduced 2×2 system in (ē, ē⊥) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Unit eigenvector of λ̂₁ in (ē, ē⊥) coordinates.
    pub b1: Vector2<f64>,
    /// Unit eigenvector of λ̂₂ in (ē, ē⊥) coordinates.
    pub b2: Vector2<f64>,
    pub beta: f64,
    pub mu: f64,
}

/// Eigenvalues and eigenvectors of Q in the reduced plane.
pub fn q_eigen_reduced(beta: f64, rho: f64) -> Result<QSpectrum> {
    let mu = beta_to_mu(beta, rho)?;
    let lambda1 = (1.0 + beta * rho * rho) / (1.0 + beta);
    let lambda2 = rho * rho * (1.0 - beta) / (1.0 - beta * rho * rho);
    let scale = 1.0 / (1.0 + beta * beta * rho * rho).sqrt();
    let b1 = Vector2::new(scale, -beta * rho * scale);
    let b2 = Vector2::new(-beta * rho * scale, -scale);
    Ok(QSpectrum {
        lambda1,
        lambda2,
        b1,
        b2,
        beta,
        mu,
    })
}

/// The explicit reduced matrix A; oracle target for the closed forms.
pub fn reduced_q_matrix(beta: f64, rho: f64) -> Result<Matrix2<f64>> {
    let mu = beta_to_mu(beta, rho)?;
    let m2 = mu * mu;
    Ok(Matrix2::new(
        1.0 - m2,
        -rho * m2,
        -rho * m2,
        rho * rho * (1.0 - m2),
    ))
}

/// Spectrum of Q lifted to d-dimensional vectors via a task's (ē, ē⊥).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub lambda1: f64,
    pub lambda2: f64,
    pub v1: DVector<f64>,
    pub v2: DVector<f64>,
    pub beta: f64,
    pub mu: f64,
}

/// Closed-form eigen pair of Q for a task, `v̂₁ = (ē − βρ ē⊥)/√(1+β²ρ²)`
/// and `v̂₂ = (−βρ ē − ē⊥)/√(1+β²ρ²)`.
pub fn q_eigen(spec: &LinearTaskSpec, beta: f64) -> Result<SpectralPair> {
    let reduced = q_eigen_reduced(beta, spec.rho())?;
    let lift = |b: &Vector2<f64>| spec.e_bar() * b[0] + spec.e_perp() * b[1];
    Ok(SpectralPair {
        lambda1: reduced.lambda1,
        lambda2: reduced.lambda2,
        v1: lift(&reduced.b1),
        v2: lift(&reduced.b2),
        beta,
        mu: reduced.mu,
    })
}

/// The direction along which the weighted trajectory stalls: the top
/// eigenvector of Q, i.e. `(e − βρ‖e‖ē⊥)` normalized.
pub fn stalled_direction(spec: &LinearTaskSpec, beta: f64) -> Result<DVector<f64>> {
    Ok(q_eigen(spec, beta)?.v1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::covariance::mu_from_tau;
    use crate::theory::task::make_task;

    #[test]
    fn beta_one_gives_mu_squared_half() {
        for rho in [0.0, 0.3, 0.9] {
            let mu = beta_to_mu(1.0, rho).unwrap();
            assert!((mu - 0.5f64.sqrt()).abs() < 1e-12, "rho {rho}");
        }
    }

    #[test]
    fn beta_one_rho_zero_tau_is_twice_gap_squared() {
        let gap: f64 = 1.3;
        let tau = beta_to_tau(1.0, 0.0, gap).unwrap();
        assert!((tau - 2.0 * gap * gap).abs() < 1e-12);
    }

    #[test]
    fn mu_tau_round_trip() {
        let gap = 2.2;
        for beta in [0.05, 0.25, 0.6, 1.0] {
            for rho in [0.0, 0.5, 0.9] {
                let tau = beta_to_tau(beta, rho, gap).unwrap();
                let via_tau = mu_from_tau(tau, gap).unwrap();
                let direct = beta_to_mu(beta, rho).unwrap();
                assert!(
                    (via_tau - direct).abs() < 1e-12,
                    "beta {beta} rho {rho}: {via_tau} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn closed_form_spot_values() {
        // β = 1: λ̂₁ = (1+ρ²)/2, λ̂₂ = 0
        let s = q_eigen_reduced(1.0, 0.5).unwrap();
        assert!((s.lambda1 - 0.625).abs() < 1e-15);
        assert_eq!(s.lambda2, 0.0);

        // ρ = 0: λ̂₁ = 1/(1+β), λ̂₂ = 0, v̂₁ = ē
        let s = q_eigen_reduced(0.4, 0.0).unwrap();
        assert!((s.lambda1 - 1.0 / 1.4).abs() < 1e-15);
        assert_eq!(s.lambda2, 0.0);
        assert_eq!(s.b1, Vector2::new(1.0, 0.0));
    }

    #[test]
    fn reduced_matrix_checks_out_against_nalgebra() {
        for &beta in &[0.1, 0.4, 0.77, 1.0] {
            for &rho in &[0.05, 0.3, 0.6, 0.9] {
                let s = q_eigen_reduced(beta, rho).unwrap();
                let a = reduced_q_matrix(beta, rho).unwrap();
                let eig = a.symmetric_eigen();
                let (hi, lo) = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
                    (0, 1)
                } else {
                    (1, 0)
                };
                assert!((s.lambda1 - eig.eigenvalues[hi]).abs() < 1e-10);
                assert!((s.lambda2 - eig.eigenvalues[lo]).abs() < 1e-10);
                for (closed, col) in [(s.b1, hi), (s.b2, lo)] {
                    let num = eig.eigenvectors.column(col);
                    let gap = ((closed - num).norm()).min((closed + num).norm());
                    assert!(gap < 1e-10, "beta {beta} rho {rho}: vec gap {gap}");
                }
            }
        }
    }

    #[test]
    fn stalled_direction_example() {
        // β = 1, ρ = 0.5: (ē − 0.5 ē⊥)/√1.25
        let spec = make_task(4, 0.5, 1.0, 3).unwrap();
        let dir = stalled_direction(&spec, 1.0).unwrap();
        let want = (spec.e_bar() - spec.e_perp() * 0.5) / 1.25f64.sqrt();
        assert!((dir - want).norm() < 1e-12);
    }

    #[test]
    fn spectral_pair_invariants() {
        let spec = make_task(5, 0.7, 1.0, 8).unwrap();
        let pair = q_eigen(&spec, 0.3).unwrap();
        assert!((pair.v1.norm() - 1.0).abs() < 1e-12);
        assert!((pair.v2.norm() - 1.0).abs() < 1e-12);
        assert!(pair.v1.dot(&pair.v2).abs() < 1e-10);
        assert!(pair.lambda2 < spec.rho() * spec.rho() * pair.lambda1);
    }
}

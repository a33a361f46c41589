//! The two-task linear setting.
//!
//! Pre-training labels come from `y = ⟨θ*, x⟩` with data covariance Σ ⪰ I;
//! fine-tuning labels come from `ỹ = ⟨θ̃*, x̃⟩` with
//!
//! ```text
//! x̃ ~ N(0, Σ̃),   Σ̃ = I + ρ (ē ē⊥ᵀ + ē⊥ ēᵀ),   ρ ∈ [0, 1),
//! ```
//!
//! where `e = θ* − θ̃*`, `ē = e/‖e‖` and `ē⊥` is a unit vector orthogonal
//! to `ē`. Everything downstream (weighted covariances, trajectories,
//! spectra, averaging) is parameterized by this struct.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seeding;

const UNIT_TOL: f64 = 1e-12;
const SIGMA_MIN_EIG_TOL: f64 = 1e-9;

/// A fully specified pre-train/fine-tune linear task pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTaskSpec {
    d: usize,
    theta_pre: DVector<f64>,
    theta_ft: DVector<f64>,
    e: DVector<f64>,
    e_bar: DVector<f64>,
    e_perp: DVector<f64>,
    rho: f64,
    sigma_pre: DMatrix<f64>,
}

impl LinearTaskSpec {
    /// Build a spec from the fine-tuned optimum, the gap direction and the
    /// gap size; `ē⊥` is derived deterministically (see [`e_perp_for`]).
    pub fn from_parts(
        theta_ft: DVector<f64>,
        e_bar: DVector<f64>,
        gap_norm: f64,
        rho: f64,
        sigma_pre: DMatrix<f64>,
    ) -> Result<Self> {
        let d = theta_ft.len();
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        if !(gap_norm > 0.0) {
            return Err(Error::OutOfRange {
                what: "gap_norm",
                value: gap_norm,
                expected: "> 0",
            });
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::OutOfRange {
                what: "rho",
                value: rho,
                expected: "0 <= rho < 1",
            });
        }
        if (e_bar.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::OutOfRange {
                what: "e_bar norm",
                value: e_bar.norm(),
                expected: "unit norm",
            });
        }
        validate_sigma_pre(&sigma_pre, d)?;
        let e_perp = e_perp_for(&e_bar);
        let e = &e_bar * gap_norm;
        let theta_pre = &theta_ft + &e;
        Ok(Self {
            d,
            theta_pre,
            theta_ft,
            e,
            e_bar,
            e_perp,
            rho,
            sigma_pre,
        })
    }

    /// Replace the pre-training covariance (still validated against Σ ⪰ I).
    pub fn with_sigma_pre(mut self, sigma_pre: DMatrix<f64>) -> Result<Self> {
        validate_sigma_pre(&sigma_pre, self.d)?;
        self.sigma_pre = sigma_pre;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn theta_pre(&self) -> &DVector<f64> {
        &self.theta_pre
    }

    pub fn theta_ft(&self) -> &DVector<f64> {
        &self.theta_ft
    }

    /// The optimum gap `e = θ* − θ̃*`.
    pub fn e(&self) -> &DVector<f64> {
        &self.e
    }

    pub fn e_bar(&self) -> &DVector<f64> {
        &self.e_bar
    }

    pub fn e_perp(&self) -> &DVector<f64> {
        &self.e_perp
    }

    pub fn gap_norm(&self) -> f64 {
        self.e.norm()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma_pre(&self) -> &DMatrix<f64> {
        &self.sigma_pre
    }

    /// The fine-tuning covariance `Σ̃ = I + ρ(ē ē⊥ᵀ + ē⊥ ēᵀ)`.
    pub fn sigma_tilde(&self) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.d, self.d);
        let cross = &self.e_bar * self.e_perp.transpose() + &self.e_perp * self.e_bar.transpose();
        m += cross * self.rho;
        m
    }

    /// Orthonormal basis `[ē, ē⊥, b₃, …, b_d]` completing the pair by
    /// Gram–Schmidt over the standard basis.
    pub fn orthonormal_basis(&self) -> Vec<DVector<f64>> {
        let mut basis = vec![self.e_bar.clone(), self.e_perp.clone()];
        for j in 0..self.d {
            if basis.len() == self.d {
                break;
            }
            let mut v = DVector::zeros(self.d);
            v[j] = 1.0;
            for b in &basis {
                let proj = b.dot(&v);
                v -= b * proj;
            }
            let norm = v.norm();
            if norm > 0.5 {
                basis.push(v / norm);
            }
        }
        debug_assert_eq!(basis.len(), self.d);
        basis
    }

    /// Quadratic forms of Σ in the (ē, ē⊥) plane, used by scalar sweeps:
    /// (ēᵀΣē, ē⊥ᵀΣē⊥, ēᵀΣē⊥).
    pub fn sigma_pre_plane_forms(&self) -> (f64, f64, f64) {
        let se = &self.sigma_pre * &self.e_bar;
        let sp = &self.sigma_pre * &self.e_perp;
        (self.e_bar.dot(&se), self.e_perp.dot(&sp), self.e_bar.dot(&sp))
    }
}

fn validate_sigma_pre(sigma: &DMatrix<f64>, d: usize) -> Result<()> {
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::DimensionMismatch {
            left: sigma.nrows(),
            right: d,
        });
    }
    let sym_gap = (sigma - sigma.transpose()).abs().max();
    if sym_gap > 1e-10 {
        return Err(Error::NotPositiveDefinite);
    }
    let eigen = sigma.clone().symmetric_eigen();
    let min_eig = eigen.eigenvalues.min();
    // Σ ⪰ I is assumed "without loss of generality" by the theory; it is
    // what makes the model-averaging error comparison (err* < ‖e‖²) valid,
    // so it is enforced rather than trusted.
    if min_eig < 1.0 - SIGMA_MIN_EIG_TOL {
        return Err(Error::OutOfRange {
            what: "sigma_pre min eigenvalue",
            value: min_eig,
            expected: ">= 1",
        });
    }
    Ok(())
}

/// Deterministic choice of `ē⊥`: Gram–Schmidt of the first standard basis
/// vector whose absolute inner product with `ē` is below 0.9 (lowest index
/// wins).
pub fn e_perp_for(e_bar: &DVector<f64>) -> DVector<f64> {
    let d = e_bar.len();
    for j in 0..d {
        let mut v = DVector::zeros(d);
        v[j] = 1.0;
        let dot = e_bar.dot(&v);
        if dot.abs() < 0.9 {
            v -= e_bar * dot;
            let norm = v.norm();
            return v / norm;
        }
    }
    unreachable!("a unit vector cannot have |dot| >= 0.9 with every basis vector")
}

/// Construct a seeded task: `θ̃*` drawn standard normal, `ē` set
/// deterministically to the normalized all-ones vector, `θ* = θ̃* + gap·ē`,
/// and `Σ = I`.
pub fn make_task(d: usize, rho: f64, gap_norm: f64, seed: u64) -> Result<LinearTaskSpec> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let mut rng = seeding::rng_from(seed);
    let theta_ft = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
    let e_bar = DVector::from_element(d, 1.0 / (d as f64).sqrt());
    LinearTaskSpec::from_parts(theta_ft, e_bar, gap_norm, rho, DMatrix::identity(d, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_invariants_hold() {
        let spec = make_task(4, 0.5, 2.0, 7).unwrap();
        assert!((spec.gap_norm() - 2.0).abs() < 1e-12);
        assert!((spec.e_bar().norm() - 1.0).abs() < 1e-12);
        assert!(spec.e_bar().dot(spec.e_perp()).abs() < 1e-12);
        assert!((spec.e_perp().norm() - 1.0).abs() < 1e-12);
        let diff = spec.theta_pre() - spec.theta_ft();
        assert!((diff - spec.e()).norm() < 1e-15);
    }

    #[test]
    fn rho_zero_gives_identity_sigma_tilde() {
        let spec = make_task(2, 0.0, 1.0, 3).unwrap();
        let gap = (spec.sigma_tilde() - DMatrix::<f64>::identity(2, 2)).abs().max();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = make_task(6, 0.3, 1.5, 99).unwrap();
        let b = make_task(6, 0.3, 1.5, 99).unwrap();
        assert_eq!(a, b);
        let c = make_task(6, 0.3, 1.5, 100).unwrap();
        assert_ne!(a.theta_ft(), c.theta_ft());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(make_task(1, 0.0, 1.0, 0), Err(Error::DimensionTooSmall(1))));
        assert!(make_task(3, 1.0, 1.0, 0).is_err());
        assert!(make_task(3, -0.1, 1.0, 0).is_err());
        assert!(make_task(3, 0.5, 0.0, 0).is_err());
        // covariance with an eigenvalue below 1 must be rejected
        let spec = make_task(3, 0.5, 1.0, 0).unwrap();
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 0.5]));
        assert!(spec.with_sigma_pre(bad).is_err());
    }

    #[test]
    fn basis_is_orthonormal() {
        let spec = make_task(5, 0.4, 1.0, 11).unwrap();
        let basis = spec.orthonormal_basis();
        assert_eq!(basis.len(), 5);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.dot(b) - want).abs() < 1e-10, "({i},{j})");
            }
        }
    }
}

//! Weighted fine-tuning covariance: closed forms and Monte-Carlo oracle.
//!
//! With weights `w(x̃, ỹ) = exp(−⟨e, x̃⟩²/τ)` the matrix driving the
//! weighted GD dynamics is `Σ̃' = E[w·x̃x̃ᵀ]`. For the structured Σ̃ of the
//! two-task setting it has the closed form
//!
//! ```text
//! Σ̃' = μ (I − Q),
//! Q  = (1−μ²) ē ēᵀ + ρ²(1−μ²) ē⊥ ē⊥ᵀ − ρμ² (ē ē⊥ᵀ + ē⊥ ēᵀ),
//! μ  = (τ / (τ + 2‖e‖²))^{1/2},
//! ```
//!
//! while for an arbitrary SPD Σ̃ it is
//!
//! ```text
//! Σ̃' = μ ( Σ̃ − (1−μ²) Σ̃ e eᵀ Σ̃ / (eᵀ Σ̃ e) ),   τ = α‖Σ̃^{1/2}e‖², μ = (α/(α+2))^{1/2}.
//! ```
//!
//! The Monte-Carlo estimator averages `w·x̃x̃ᵀ` over seeded Gaussian draws
//! and is the independent oracle for both closed forms.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seeding;
use crate::theory::task::LinearTaskSpec;

/// Fixed chunk size of the seeded samplers. Chunks get independent
/// sub-seeds and are reduced in chunk order, so a parallel execution is
/// bit-identical to the sequential one.
pub const MC_CHUNK: usize = 65_536;

/// `μ = (τ / (τ + 2‖e‖²))^{1/2}`, the weight-induced shrinkage factor.
pub fn mu_from_tau(tau: f64, gap_norm: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NonPositiveTemperature(tau));
    }
    if !(gap_norm > 0.0) {
        return Err(Error::OutOfRange {
            what: "gap_norm",
            value: gap_norm,
            expected: "> 0",
        });
    }
    Ok((tau / (tau + 2.0 * gap_norm * gap_norm)).sqrt())
}

/// μ expressed through the dimensionless `α = τ/‖e‖²`.
pub fn mu_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveTemperature(alpha));
    }
    Ok((alpha / (alpha + 2.0)).sqrt())
}

/// Closed-form `Σ̃' = μ(I − Q)` for the structured task.
pub fn weighted_covariance_closed(spec: &LinearTaskSpec, tau: f64) -> Result<DMatrix<f64>> {
    let mu = mu_from_tau(tau, spec.gap_norm())?;
    let q = q_matrix_for_mu(spec, mu);
    let d = spec.dim();
    Ok((DMatrix::identity(d, d) - q) * mu)
}

/// The rank-2 matrix `Q` appearing in `Σ̃' = μ(I − Q)`, for a given μ.
pub fn q_matrix_for_mu(spec: &LinearTaskSpec, mu: f64) -> DMatrix<f64> {
    let rho = spec.rho();
    let e_bar = spec.e_bar();
    let e_perp = spec.e_perp();
    let one_minus_mu2 = 1.0 - mu * mu;
    let mut q = e_bar * e_bar.transpose() * one_minus_mu2;
    q += e_perp * e_perp.transpose() * (rho * rho * one_minus_mu2);
    let cross = e_bar * e_perp.transpose() + e_perp * e_bar.transpose();
    q -= cross * (rho * mu * mu);
    q
}

/// Closed-form weighted covariance for a general SPD Σ̃.
pub fn weighted_covariance_general(
    sigma_tilde: &DMatrix<f64>,
    e: &DVector<f64>,
    tau: f64,
) -> Result<DMatrix<f64>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NonPositiveTemperature(tau));
    }
    if sigma_tilde.nrows() != e.len() || sigma_tilde.ncols() != e.len() {
        return Err(Error::DimensionMismatch {
            left: sigma_tilde.nrows(),
            right: e.len(),
        });
    }
    if e.norm() == 0.0 {
        return Err(Error::OutOfRange {
            what: "e norm",
            value: 0.0,
            expected: "> 0",
        });
    }
    if sigma_tilde.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let se = sigma_tilde * e; // Σ̃e
    let ese = e.dot(&se); // eᵀΣ̃e = ‖Σ̃^{1/2}e‖²
    let alpha = tau / ese;
    let mu = mu_from_alpha(alpha)?;
    let correction = &se * se.transpose() * ((1.0 - mu * mu) / ese);
    Ok((sigma_tilde - correction) * mu)
}

/// Monte-Carlo estimate of `E[exp(−⟨e,x̃⟩²/τ)·x̃x̃ᵀ]` with `x̃ ~ N(0, Σ̃)`
/// drawn via the Cholesky factor of Σ̃.
///
/// Deterministic in `(seed, n_samples)`: samples are produced in chunks of
/// [`MC_CHUNK`] with per-chunk sub-seeds and reduced in chunk order.
pub fn weighted_covariance_mc(
    sigma_tilde: &DMatrix<f64>,
    e: &DVector<f64>,
    tau: f64,
    n_samples: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NonPositiveTemperature(tau));
    }
    if n_samples == 0 {
        return Err(Error::EmptyInput);
    }
    let chol = sigma_tilde
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let d = e.len();
    accumulate_weighted_outer(n_samples, seed, d, e, tau, |z, x| {
        // x = L z, lower-triangular multiply
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += l[(i, j)] * z[j];
            }
            x[i] = acc;
        }
    })
}

/// Monte-Carlo estimate for a structured task using the orthonormal-basis
/// sampler (`x̃ = z₁ē + (ρz₁ + √(1−ρ²)z₂)ē⊥ + Σ_{j≥3} z_j b_j`) instead of
/// a Cholesky factor. Cross-check partner of [`weighted_covariance_mc`].
pub fn weighted_covariance_mc_structured(
    spec: &LinearTaskSpec,
    tau: f64,
    n_samples: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NonPositiveTemperature(tau));
    }
    if n_samples == 0 {
        return Err(Error::EmptyInput);
    }
    let d = spec.dim();
    let basis = spec.orthonormal_basis();
    let rho = spec.rho();
    let root = (1.0 - rho * rho).sqrt();
    accumulate_weighted_outer(n_samples, seed, d, spec.e(), tau, |z, x| {
        let c1 = z[0];
        let c2 = rho * z[0] + root * z[1];
        for i in 0..d {
            let mut acc = c1 * basis[0][i] + c2 * basis[1][i];
            for (j, b) in basis.iter().enumerate().skip(2) {
                acc += z[j] * b[i];
            }
            x[i] = acc;
        }
    })
}

/// Shared chunked accumulator: draws standard normals, maps them to `x̃`
/// through `fill_x`, and averages `exp(−⟨e,x̃⟩²/τ)·x̃x̃ᵀ`.
fn accumulate_weighted_outer(
    n_samples: usize,
    seed: u64,
    d: usize,
    e: &DVector<f64>,
    tau: f64,
    fill_x: impl Fn(&[f64], &mut [f64]),
) -> Result<DMatrix<f64>> {
    let mut total = vec![0.0f64; d * d];
    let mut z = vec![0.0f64; d];
    let mut x = vec![0.0f64; d];
    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    for chunk in 0..n_chunks {
        let start = chunk * MC_CHUNK;
        let len = MC_CHUNK.min(n_samples - start);
        let mut rng = seeding::rng_from(seeding::chunk_seed(seed, chunk as u64));
        let mut partial = vec![0.0f64; d * d];
        for _ in 0..len {
            for zj in z.iter_mut() {
                *zj = StandardNormal.sample(&mut rng);
            }
            fill_x(&z, &mut x);
            let mut proj = 0.0;
            for i in 0..d {
                proj += e[i] * x[i];
            }
            let w = (-proj * proj / tau).exp();
            for i in 0..d {
                let wxi = w * x[i];
                let row = &mut partial[i * d..(i + 1) * d];
                for (j, xj) in x.iter().enumerate().take(i + 1) {
                    row[j] += wxi * xj;
                }
            }
        }
        for (t, p) in total.iter_mut().zip(&partial) {
            *t += p;
        }
    }
    // lower triangle was accumulated; mirror and normalize
    let inv_n = 1.0 / n_samples as f64;
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v = total[i * d + j] * inv_n;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Draw `n` fine-tuning inputs with the orthonormal-basis construction.
/// Sample covariance converges to Σ̃. Chunked and seeded like the MC
/// estimator.
pub fn basis_sampler(spec: &LinearTaskSpec, n: usize, seed: u64) -> Vec<DVector<f64>> {
    let d = spec.dim();
    let basis = spec.orthonormal_basis();
    let rho = spec.rho();
    let root = (1.0 - rho * rho).sqrt();
    let mut out = Vec::with_capacity(n);
    let n_chunks = n.div_ceil(MC_CHUNK);
    for chunk in 0..n_chunks {
        let start = chunk * MC_CHUNK;
        let len = MC_CHUNK.min(n - start);
        let mut rng = seeding::rng_from(seeding::chunk_seed(seed, chunk as u64));
        for _ in 0..len {
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut x = &basis[0] * z[0] + &basis[1] * (rho * z[0] + root * z[1]);
            for (j, b) in basis.iter().enumerate().skip(2) {
                x += b * z[j];
            }
            out.push(x);
        }
    }
    out
}

//! Loss-oriented sample weights.
//!
//! Given per-sample losses `ℓ_i` evaluated once under a frozen pre-trained
//! model, each sample gets the weight
//!
//! ```text
//! w_i = exp(-ℓ_i / τ)
//! ```
//!
//! so that low-loss ("easy") samples dominate the fine-tuning objective.
//! Normalizing the weights onto the probability simplex yields the unique
//! minimizer of the entropically regularized objective
//!
//! ```text
//! g(π) = Σ_i π_i ℓ_i + τ Σ_i π_i log π_i,    π ∈ Δ_n,
//! ```
//!
//! which is the variational characterization the rest of the crate builds
//! on. The inverse weighting `π_i ∝ exp(+ℓ_i/τ)` (the inner maximizer of
//! the entropic DRO problem) is provided for contrast experiments only.
//!
//! Weights are computed once and stay fixed for the whole run; there is
//! deliberately no API for re-weighting mid-training.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-sample non-negative losses under the frozen pre-trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector {
    values: Vec<f64>,
}

impl LossVector {
    /// Validates that the losses are non-empty, finite and non-negative.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss { index, value });
            }
            if value < 0.0 {
                return Err(Error::NegativeLoss { index, value });
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a validated LossVector is never empty
    }
}

/// How the temperature τ is chosen from the loss distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum TemperaturePolicy {
    /// τ = median of the losses; the parameter-free default.
    Median,
    /// τ = p-th percentile of the losses, p strictly inside (0, 100).
    Percentile(f64),
    /// τ fixed by the caller, strictly positive.
    Fixed(f64),
}

impl TemperaturePolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TemperaturePolicy::Median => Ok(()),
            TemperaturePolicy::Percentile(p) => {
                if p > 0.0 && p < 100.0 {
                    Ok(())
                } else {
                    Err(Error::OutOfRange {
                        what: "percentile",
                        value: p,
                        expected: "0 < p < 100",
                    })
                }
            }
            TemperaturePolicy::Fixed(tau) => {
                if tau > 0.0 && tau.is_finite() {
                    Ok(())
                } else {
                    Err(Error::NonPositiveTemperature(tau))
                }
            }
        }
    }
}

impl std::fmt::Display for TemperaturePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TemperaturePolicy::Median => write!(f, "median"),
            TemperaturePolicy::Percentile(p) => write!(f, "percentile:{p}"),
            TemperaturePolicy::Fixed(tau) => write!(f, "fixed:{tau}"),
        }
    }
}

impl std::str::FromStr for TemperaturePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let policy = if s == "median" {
            TemperaturePolicy::Median
        } else if let Some(p) = s.strip_prefix("percentile:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad percentile {p:?}")))?;
            TemperaturePolicy::Percentile(p)
        } else if let Some(t) = s.strip_prefix("fixed:") {
            let t: f64 = t
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad temperature {t:?}")))?;
            TemperaturePolicy::Fixed(t)
        } else {
            return Err(Error::InvalidConfig(format!(
                "unknown temperature policy {s:?} (expected median, percentile:P or fixed:T)"
            )));
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// A selected temperature.
///
/// `DegenerateUniform` is the sentinel for the all-zero-loss corner where
/// no positive τ can be read off the data; callers emit uniform weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Value(f64),
    DegenerateUniform,
}

impl Temperature {
    /// The numeric temperature, if one exists.
    pub fn value(&self) -> Option<f64> {
        match *self {
            Temperature::Value(tau) => Some(tau),
            Temperature::DegenerateUniform => None,
        }
    }
}

/// Per-sample weights `w_i = exp(-ℓ_i/τ)` together with the τ used.
///
/// Entries live in [0, 1] and reverse the loss order: `ℓ_i ≤ ℓ_j` implies
/// `w_i ≥ w_j`. Weights that underflow to exactly 0 are kept as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    tau: Temperature,
}

impl WeightVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tau(&self) -> Temperature {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Wrap externally produced weights (entries must lie in [0, 1]).
    pub fn from_values(values: Vec<f64>, tau: Temperature) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::NonFiniteLoss { index, value });
            }
        }
        Ok(Self { values, tau })
    }
}

/// Normalized weights on the probability simplex (non-negative, sum 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights {
    values: Vec<f64>,
}

impl SimplexWeights {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Percentile of `sorted` by linear interpolation, p in (0, 100).
///
/// Position p/100·(n-1) on the sorted order statistics; the even-n median
/// comes out as the mean of the two middle values.
fn interpolated_percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Select the temperature τ from the losses under the given policy.
///
/// Median is exactly Percentile(50). A zero percentile value falls back to
/// the mean loss; if that is also zero every loss is zero and the
/// degenerate-uniform sentinel is returned.
pub fn select_temperature(losses: &LossVector, policy: &TemperaturePolicy) -> Result<Temperature> {
    policy.validate()?;
    let p = match *policy {
        TemperaturePolicy::Fixed(tau) => return Ok(Temperature::Value(tau)),
        TemperaturePolicy::Median => 50.0,
        TemperaturePolicy::Percentile(p) => p,
    };
    let mut sorted = losses.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("losses are finite"));
    let tau = interpolated_percentile(&sorted, p);
    if tau > 0.0 {
        return Ok(Temperature::Value(tau));
    }
    let mean = losses.values().iter().sum::<f64>() / losses.len() as f64;
    if mean > 0.0 {
        Ok(Temperature::Value(mean))
    } else {
        Ok(Temperature::DegenerateUniform)
    }
}

/// Compute `w_i = exp(-ℓ_i/τ)`.
///
/// Losses are non-negative and τ > 0, so every exponent is ≤ 0 and the
/// values cannot overflow; underflow to exactly 0 is allowed and kept.
/// The degenerate-uniform sentinel yields all-ones.
pub fn compute_weights(losses: &LossVector, tau: Temperature) -> Result<WeightVector> {
    let values = match tau {
        Temperature::DegenerateUniform => vec![1.0; losses.len()],
        Temperature::Value(t) => {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::NonPositiveTemperature(t));
            }
            losses.values().iter().map(|&l| (-l / t).exp()).collect()
        }
    };
    Ok(WeightVector { values, tau })
}

/// Convenience wrapper for a numeric temperature.
pub fn compute_weights_with(losses: &LossVector, tau: f64) -> Result<WeightVector> {
    compute_weights(losses, Temperature::Value(tau))
}

/// Project raw weights onto the simplex: `π_i = w_i / Σ_j w_j`.
///
/// Fails with `AllZeroWeights` when every weight underflowed; the caller
/// should raise τ.
pub fn normalize_weights(weights: &WeightVector) -> Result<SimplexWeights> {
    let total: f64 = weights.values().iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroWeights);
    }
    Ok(SimplexWeights {
        values: weights.values().iter().map(|&w| w / total).collect(),
    })
}

/// The entropically regularized objective `g(π) = Σ π_i ℓ_i + τ Σ π_i log π_i`.
///
/// `0·log 0` is taken as 0. Minimized over the simplex by the normalized
/// exponential weights.
pub fn entropic_objective(pi: &SimplexWeights, losses: &LossVector, tau: f64) -> Result<f64> {
    if pi.len() != losses.len() {
        return Err(Error::DimensionMismatch {
            left: pi.len(),
            right: losses.len(),
        });
    }
    let mut value = 0.0;
    for (&p, &l) in pi.values().iter().zip(losses.values()) {
        value += p * l;
        if p > 0.0 {
            value += tau * p * p.ln();
        }
    }
    Ok(value)
}

/// The inverse (DRO) weighting `π_i ∝ exp(+ℓ_i/τ)`.
///
/// This is the inner maximizer of the entropic min-max problem and puts
/// mass on the hardest samples — the exact opposite of the loss-oriented
/// weighting. Used only as a contrast baseline. Evaluated stably by
/// subtracting `max ℓ` before exponentiation.
pub fn dro_weights(losses: &LossVector, tau: f64) -> Result<SimplexWeights> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NonPositiveTemperature(tau));
    }
    let max = losses
        .values()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = losses
        .values()
        .iter()
        .map(|&l| ((l - max) / tau).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    // total >= 1 because the max-loss sample has weight exactly 1
    Ok(SimplexWeights {
        values: raw.into_iter().map(|w| w / total).collect(),
    })
}

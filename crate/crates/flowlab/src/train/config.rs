//! Training configuration for the fine-tuning methods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weighting::TemperaturePolicy;

/// The fine-tuning method being run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Unweighted fine-tuning of the full model.
    Standard,
    /// Loss-oriented weighting with the four-step multi-head procedure.
    Flow,
    /// Inverse (hardest-first) weighting; contrast baseline.
    DroContrast,
    /// Unweighted fine-tuning with an ℓ2 pull toward the initialization.
    L2Reg { lambda: f64 },
    /// Train only the task head on a frozen body.
    LinearProbe,
    /// Standard fine-tuning followed by body averaging with the
    /// pre-trained model: `U ← α·U_pre + (1−α)·U_fine`.
    WiseFt { alpha: f64 },
}

impl Method {
    /// Stable identifier used as the report key.
    pub fn name(&self) -> String {
        match self {
            Method::Standard => "standard".into(),
            Method::Flow => "flow".into(),
            Method::DroContrast => "dro_contrast".into(),
            Method::L2Reg { lambda } => format!("l2_reg:{lambda}"),
            Method::LinearProbe => "linear_probe".into(),
            Method::WiseFt { alpha } => format!("wise_ft:{alpha}"),
        }
    }

    fn needs_temperature(&self) -> bool {
        matches!(self, Method::Flow | Method::DroContrast)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Mini-batch size; absent means full-batch gradient descent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Required for Flow and DroContrast, forbidden otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<TemperaturePolicy>,
    /// Learning rate of the head-only probe steps (defaults to
    /// `learning_rate`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_learning_rate: Option<f64>,
    /// Epoch count of the head-only probe steps (defaults to `epochs`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_epochs: Option<usize>,
}

impl TrainConfig {
    pub fn new(method: Method, learning_rate: f64, epochs: usize, seed: u64) -> Self {
        let temperature = if method.needs_temperature() {
            Some(TemperaturePolicy::Median)
        } else {
            None
        };
        Self {
            method,
            learning_rate,
            epochs,
            batch_size: None,
            seed,
            temperature,
            probe_learning_rate: None,
            probe_epochs: None,
        }
    }

    pub fn probe_learning_rate(&self) -> f64 {
        self.probe_learning_rate.unwrap_or(self.learning_rate)
    }

    pub fn probe_epochs(&self) -> usize {
        self.probe_epochs.unwrap_or(self.epochs)
    }

    /// Method-specific parameters must be present exactly when required.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if let Some(b) = self.batch_size {
            if b == 0 {
                return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
            }
        }
        if let Some(lr) = self.probe_learning_rate {
            if !(lr > 0.0) || !lr.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "probe_learning_rate must be positive, got {lr}"
                )));
            }
        }
        if self.probe_epochs == Some(0) {
            return Err(Error::InvalidConfig("probe_epochs must be >= 1".into()));
        }
        match (&self.temperature, self.method.needs_temperature()) {
            (None, true) => {
                return Err(Error::InvalidConfig(format!(
                    "method {} requires a temperature policy",
                    self.method.name()
                )));
            }
            (Some(_), false) => {
                return Err(Error::InvalidConfig(format!(
                    "method {} does not take a temperature policy",
                    self.method.name()
                )));
            }
            _ => {}
        }
        if let Some(policy) = &self.temperature {
            policy.validate()?;
        }
        match self.method {
            Method::L2Reg { lambda } => {
                if !(lambda >= 0.0) || !lambda.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "lambda must be >= 0, got {lambda}"
                    )));
                }
            }
            Method::WiseFt { alpha } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::InvalidConfig(format!(
                        "alpha must lie in [0, 1], got {alpha}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperature_presence_is_enforced() {
        let mut cfg = TrainConfig::new(Method::Standard, 0.1, 10, 0);
        cfg.validate().unwrap();
        cfg.temperature = Some(TemperaturePolicy::Median);
        assert!(cfg.validate().is_err());

        let mut cfg = TrainConfig::new(Method::Flow, 0.1, 10, 0);
        cfg.validate().unwrap();
        cfg.temperature = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn out_of_range_hyperparameters_fail() {
        let cfg = TrainConfig::new(Method::WiseFt { alpha: 1.5 }, 0.1, 10, 0);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("alpha"), "{err}");

        let cfg = TrainConfig::new(Method::L2Reg { lambda: -1.0 }, 0.1, 10, 0);
        assert!(cfg.validate().is_err());

        let cfg = TrainConfig::new(Method::Standard, 0.0, 10, 0);
        assert!(cfg.validate().is_err());
    }
}

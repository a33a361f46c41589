//! Default training configurations for the benchmark comparison.

use crate::seeding;
use crate::train::config::{Method, TrainConfig};

/// Pre-training run on task A.
pub fn default_pretrain_config(seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::new(
        Method::Standard,
        0.5,
        400,
        seeding::derive_seed(seed, "pretrain"),
    );
    cfg.probe_learning_rate = Some(0.5);
    cfg.probe_epochs = Some(300);
    cfg
}

fn method_seed(seed: u64, method: &Method) -> u64 {
    seeding::derive_seed(seed, &format!("method:{}", method.name()))
}

fn base(method: Method, seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::new(method.clone(), 0.3, 500, method_seed(seed, &method));
    cfg.probe_learning_rate = Some(0.5);
    cfg.probe_epochs = Some(300);
    cfg
}

/// The default method line-up of the comparison.
pub fn default_method_configs(seed: u64) -> Vec<TrainConfig> {
    vec![
        base(Method::Standard, seed),
        base(Method::Flow, seed),
        base(Method::L2Reg { lambda: 0.01 }, seed),
        base(Method::LinearProbe, seed),
        base(Method::WiseFt { alpha: 0.5 }, seed),
        base(Method::DroContrast, seed),
    ]
}

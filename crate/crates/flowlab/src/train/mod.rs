//! Finite-sample fine-tuning engines and baselines.

pub mod config;
pub mod data;
pub mod engine;
pub mod linear;
pub mod model;

pub use config::{Method, TrainConfig};
pub use data::{LabeledDataset, Labels};
pub use engine::{
    dro_contrast_multihead, flow_multihead, l2_fit, linear_probe, per_sample_losses,
    probe_fresh_head, standard_fit, uniform_weights, weighted_fit, wise_ft_average,
    MultiHeadOutcome,
};
pub use linear::{empirical_flow_linear, empirical_ft_linear};
pub use model::{BodyParams, HeadParams, MultiHeadModel};

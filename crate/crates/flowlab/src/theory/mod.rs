//! The linear two-task setting: task construction, weighted covariances
//! with a Monte-Carlo oracle, trajectory closed forms, eigen-analysis and
//! the model-averaging comparison.

pub mod averaging;
pub mod covariance;
pub mod spectrum;
pub mod task;
pub mod trajectory;

pub use averaging::{
    default_beta_grid, flow_beats_averaging_check, geometric_grid, model_average,
    optimal_averaging, AveragingCheck,
};
pub use covariance::{
    basis_sampler, mu_from_alpha, mu_from_tau, weighted_covariance_closed,
    weighted_covariance_general, weighted_covariance_mc, weighted_covariance_mc_structured,
    MC_CHUNK,
};
pub use spectrum::{
    beta_to_mu, beta_to_tau, q_eigen, q_eigen_reduced, reduced_q_matrix, stalled_direction,
    QSpectrum, SpectralPair,
};
pub use task::{e_perp_for, make_task, LinearTaskSpec};
pub use trajectory::{
    flow_trajectory, flow_trajectory_with_eta, population_errors, simulate_gd,
    simulate_gd_trajectory, vanilla_ft_trajectory, FlowCoefIter, Trajectory, TrajectoryMethod,
    TrajectoryPoint,
};

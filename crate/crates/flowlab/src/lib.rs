//! Loss-oriented sample weighting for fine-tuning without pre-training
//! data, together with the linear-model theory that explains why it
//! mitigates forgetting, and a desk-scale synthetic benchmark comparing
//! it against data-oblivious baselines.
//!
//! The crate is organized around five pieces:
//!
//! * [`weighting`] — per-sample weights `w_i = exp(-ℓ_i/τ)` from frozen
//!   pre-trained losses, temperature policies, simplex normalization, the
//!   entropic objective they minimize, and the inverse (DRO) weighting
//!   used for contrast.
//! * [`theory`] — the two-task linear setting: weighted covariance closed
//!   forms with a Monte-Carlo oracle, gradient-descent trajectory closed
//!   forms, the eigen-analysis that exhibits the stalled direction, and
//!   the model-averaging comparison.
//! * [`train`] — finite-sample trainers: weighted/unweighted gradient
//!   descent for multi-head tanh networks and linear models, plus the
//!   data-oblivious baselines (ℓ2 pull-back, linear probing, body
//!   averaging).
//! * [`bench`] — synthetic two-task benchmark generation, accuracy
//!   evaluation (including the hard-sample slice) and the method
//!   comparison report.
//! * [`io`] — the CSV/JSON interchange formats.
//!
//! All randomness flows from explicit seeds (see [`seeding`]); every
//! operation is deterministic given its inputs.

pub mod bench;
pub mod error;
pub mod io;
pub mod seeding;
pub mod theory;
pub mod train;
pub mod weighting;

pub use error::{Error, Result};

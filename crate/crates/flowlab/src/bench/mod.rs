//! Synthetic two-task benchmark: generation, evaluation, comparison.

pub mod compare;
pub mod defaults;
pub mod eval;
pub mod generate;

pub use compare::{
    averaging_sweep, canonical_hard_losses, pretrain, run_comparison, tau_ablation, AblationRow,
    EvalReport, MethodRow, SweepRow, HARD_FRACTION,
};
pub use defaults::{default_method_configs, default_pretrain_config};
pub use eval::{evaluate, hard_sample_accuracy, hard_sample_indices, predictions};
pub use generate::{gen_two_task_benchmark, BenchmarkSpec, TaskData, TASK_A, TASK_B};

//! Linear SVM head, dual-channel assembly and model selection.

pub mod dual;
pub mod pipeline;
pub mod select;
pub mod svm;

pub use dual::{assemble_dual_channel, DualChannelImage};
pub use pipeline::{
    run_experiment, run_pipeline, run_trajectory_experiment, BboxMode, EvaluationReport,
    GridConfig, PipelineOutcome,
};
pub use select::{
    cross_validate, score_3sigma, select, EncodingMode, HyperParams, SelectionRule,
};
pub use svm::{train_svm, train_svm_with, LinearSvmModel, SvmConfig};

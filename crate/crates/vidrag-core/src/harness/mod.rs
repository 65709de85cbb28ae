//! Desk-scale evaluation harness: synthetic benchmark generation with
//! planted ground truth, end-to-end pipeline execution, and recall/accuracy
//! reporting against automatic baselines.

mod eval;
mod pipeline;
mod synthetic;

pub use eval::{
    compute_recall, mock_generate_answer, run_eval, Aggregates, EvalRecord, EvalReport, ReportRow,
};
pub use pipeline::{run_pipeline, run_uniform_baseline, PipelineOutput, VideoInput};
pub use synthetic::{generate_synthetic, read_cases, write_cases, DistractorProfile, SyntheticCase};

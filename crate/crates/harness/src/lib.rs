//! Experiment harness: scenario files, trace-derived metrics, run
//! orchestration, and the museum assistant demo.

pub mod metrics;
pub mod museum;
pub mod run;
pub mod scenario;

pub use metrics::{to_csv, trace_digest, RunResult, TraceMetrics, CSV_HEADER};
pub use museum::{
    floor_plan, museum_demo_stream, museum_ruleset, museum_vocabulary, run_assistant, AssistAction,
    FloorPlan,
    MuseumError, Reading, Signal, VisitorContext, MUSEUM_RULES,
};
pub use run::{
    compare_matrix, run_batch, run_batch_with, run_id, run_scenario, sweep_matrix, RunOutput,
};
pub use scenario::{parse_scenario, Protocol, ScenarioConfig, ScenarioError};

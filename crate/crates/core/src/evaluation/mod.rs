//! Arrival-order scoring and the Monte Carlo experiment harness.

mod harness;
mod tau;

pub use harness::{
    loglik_surface, run_experiment, run_method, summarize, ExperimentPlan, ExperimentRecord,
    ExperimentReport, GeneratedGraph, Method, MethodContext, SkippedCell, Summary, SummaryRow,
    SurfacePoint, WORST_CASE_RMSE,
};
pub use tau::{kendall_tau, lenient_order, spearman, strict_order, ArrivalOrder};

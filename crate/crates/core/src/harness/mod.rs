//! Baselines, evaluation metrics and the simulation experiment runner.

mod baselines;
mod experiment;
mod metrics;

pub use baselines::{
    ida_estimate, local_parent_sets, naive_estimate, plug_in_ipt, IdaOptions, IdaVariant, NaiveKind, DEFAULT_EXTENSION_CAP,
};
pub use experiment::{
    estimate_method, evaluate, run_experiment, EvalReport, ExperimentConfig, McmcSettings, Method, Metric, NetworkSource,
    ReportRow, RunFailure, States, StructureSource, SummaryRow, STRONG_FRACTION,
};
pub use metrics::{auc_pr, mse_pi, mse_tau, nonzero_labels, top_fraction_labels, ZERO_EFFECT_TOL};

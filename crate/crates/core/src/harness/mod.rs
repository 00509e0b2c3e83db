//! Monte Carlo experiments over block models: configuration files, the
//! sweep runner with its CSV and JSON outputs, the eigenvector overlap
//! validation and the eigenvector fluctuation histograms.

mod config;
mod experiment;
mod validation;

pub use config::{
    build_instance, Density, ExperimentConfig, ExperimentModel, MethodName, ModelConfig, ModelInstance, ModelKind, Outputs,
};
pub(crate) use experiment::csv_error;
pub use experiment::{
    graph_seed, run_experiment, run_method, summarize_csv, ExperimentRecord, ExperimentSummary, MethodOutcome, PointSummary,
    RECORD_HEADER,
};
pub use validation::{
    run_fluctuation_histograms, run_overlap_validation, summarize_overlaps, write_histogram_csv, write_overlap_csv,
    ClusterMoment, FluctuationConfig, Fluctuations, HistogramRow, OverlapPoint, OverlapRow, HISTOGRAM_HEADER,
    OVERLAP_HEADER,
};

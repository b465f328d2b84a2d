//! Experiment orchestration: risk-model grids, metric evaluation with
//! control baselines and bootstrap intervals, correlation matrices, the
//! discriminator utility check, the outlier-removal protocol, parameter
//! sweeps and report files.

mod bootstrap;
mod config;
mod correlation;
mod report;
mod runner;
mod utility;

pub use bootstrap::{bootstrap_ci, bootstrap_indices, BootstrapSummary};
pub use config::{
    dp_grid, overfit_grid, unit_grid, AiaConfig, AuxSpec, BootstrapConfig, DatasetSource, ExperimentConfig,
    ExternalRelease, GtcapConfig, Metric, OutlierConfig, RiskModel, SplitConfig, SweepConfig,
};
pub use correlation::{correlation_matrix, CorrelationMatrix};
pub use report::{
    read_correlations, read_results_csv, write_plotdata, write_report, write_results_csv, CONFIG_ECHO_FILE,
    CORRELATIONS_FILE, PLOTDATA_DIR, RESULTS_FILE, RESULTS_HEADER,
};
pub use runner::{
    evaluate_metric, grid_correlations, knn_sweep_name, outlier_robustness_on, outlier_robustness_protocol,
    parameter_sweeps, parameter_sweeps_on, prepare_splits, radius_sweep_name, run_all, run_experiment,
    run_experiment_on, CellData, Evaluation, ExperimentReport, ResultRow, Splits, STAGE_GRID, STAGE_OUTLIERS,
    STAGE_SWEEP, UTILITY_METRIC,
};
pub use utility::mle_utility;

//! Deep visibility series forecasting.
//!
//! A window of a time series is turned into its natural visibility graph,
//! each node's view is reweighted by the values it sees, and the graph is
//! compressed back into a series of the same length. That series feeds a
//! small convolutional network trained with Adam under a cyclic learning
//! rate. Baseline forecasters and the usual error measures are included so
//! the transform can be ablated.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod metrics;
pub mod nn;
pub mod series;
pub mod training;
pub mod visibility;

pub use baselines::{
    fit_linear, fit_ses_alpha, random_walk_similarity, ses_forecast, sma_forecast,
    vg_randomwalk_forecast, LinearWindowModel, RandomWalkConfig,
};
pub use error::{DvsError, Result};
pub use experiment::{compare, run_method, Comparison, Method, RunConfig};
pub use metrics::{evaluate_metrics, evaluate_metrics_with, MetricFlag, MetricReport, SmapeMode};
pub use nn::{
    build_ablation_ann, build_ablation_cnn, build_dvs_cnn, ForwardTape, LayerSpec, LayerStack,
};
pub use series::{
    load_series, make_windows, make_windows_with, split_train_test, synth_series, SynthSpec,
    TimeSeries, Window, WindowSet,
};
pub use training::{
    adam_step, clr_lr, mse_loss, predict, train, AdamState, Standardizer, TrainConfig, TrainReport,
    TrainedModel,
};
pub use visibility::{
    dvs_compress, dvs_transform, dvs_transform_at, enhanced_matrix, node_degrees,
    visibility_adjacency, visibility_adjacency_at, AdjacencyMatrix, EnhancedMatrix, ZipSeries,
};

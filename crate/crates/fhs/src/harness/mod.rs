//! Experiment harness: data generation for the simulation protocols,
//! metrics, replication orchestration, CSV/SVG output, config files, and
//! the real-data cross-validation workflow.

pub mod config;
pub mod csvio;
pub mod datagen;
pub mod experiment;
pub mod metrics;
pub mod realdata;
pub mod svg;

pub use datagen::{
    gen_additive_setting, gen_density, gen_simple, gen_vc, AdditiveData, DensityTruth,
    RegressionTruth,
};
pub use experiment::{run_experiment, ModelKind, SimulationSpec};
pub use metrics::{empirical_mse, gauge_aligned_mse, MetricsReport, ReplicateMetrics};
pub use realdata::{run_realdata, RealDataOptions};

//! Open-world continual feature selection on granular-ball neighborhood
//! rough sets.
//!
//! The library builds a knowledge base of granular-balls (center/radius
//! hyperspheres covering labeled instances) on an initial dataset, selects a
//! minimal feature subset that preserves the generation positive region, and
//! then consumes an unlabeled stream period by period: instances falling
//! inside a stored ball are absorbed as known, the rest are density-clustered,
//! pseudo-labeled, granulated into new balls, and the feature subset is
//! enlarged with whichever candidate features stopped being redundant.
//!
//! Modules follow the pipeline order:
//!
//! * [`dataset`] - CSV ingestion, min-max normalization, class-incremental
//!   scenario synthesis and splitting.
//! * [`clustering`] - seeded k-means (and the 2-means splitter) plus DBSCAN.
//! * [`ball`] - granular-ball construction, purity-driven splitting, frozen
//!   known-instance updates.
//! * [`rough_set`] - generation positive region, redundancy tests, initial
//!   backward elimination.
//! * [`continual`] - the knowledge base, per-period open learning, and
//!   persistence.
//! * [`eval`] - k-NN cross-validation, unknown-detection metrics, and the
//!   continual-vs-scratch benchmark.
//! * [`synth`] - deterministic synthetic datasets for tests and benchmarks.

pub mod ball;
pub mod clustering;
pub mod continual;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod rng;
pub mod rough_set;
pub mod synth;

pub use ball::{ball_from_members, ball_set_stats, generate_balls, BallSetStats, GranularBall};
pub use clustering::{dbscan, euclidean, kmeans, ClusterAssignment};
pub use continual::{Identification, KnowledgeBase, PeriodReport, PhaseTimings};
pub use dataset::{
    load_csv, make_scenario, make_scenario_ordered, minmax_normalize, split_periods, Dataset,
    LabelColumn, LabelId, ScenarioSchedule, StreamPeriod,
};
pub use error::{Error, Result};
pub use eval::{
    bench_continual_vs_scratch, knn_predict, stratified_tenfold, unknown_detection_metrics,
    BenchParams, BenchResult, CvResult,
};
pub use matrix::Matrix;
pub use rough_set::{
    is_redundant, positive_region, select_features_initial, FeatureDecision, FeatureSubset,
    PositiveRegionStat,
};

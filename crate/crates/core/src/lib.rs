//! Sparse integer risk scores trained by maximizing net benefit across
//! decision thresholds, plus model-agnostic evaluation of risk predictions.

pub mod bounds;
pub mod calibration;
pub mod cv;
pub mod data;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod report;
pub mod solver;
pub mod synthetic;

pub use data::{BinaryDataset, ConfusionCurve, PredictionVector, SolverConfig, ThresholdGrid};
pub use error::{Error, Result};
pub use metrics::{BinStats, MetricReport};
pub use model::{Provenance, ScoreModel};
pub use solver::TrainResult;

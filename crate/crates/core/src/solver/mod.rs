//! Training of integer scoring models.

mod anneal;
mod exact;
mod intercepts;
mod milp;
mod rounding;

pub use anneal::{chain_seed, sa_train};
pub use exact::exact_enumerate;
pub use intercepts::{find_optimal_t, stage_net_benefit, CandidateTable, InterceptFit};
pub use milp::{milp_export, verify_solution, MilpExport, MilpOptions, SolutionCheck};
pub use rounding::{counts_at_intercepts, round_real_model, RoundedModel, RoundingDiagnostics};

use serde::{Deserialize, Serialize};

use crate::calibration::{assign_risk_levels, RiskAssignment};
use crate::data::{BinaryDataset, SolverConfig, ThresholdGrid};
use crate::error::Result;
use crate::metrics::{confusion_at_thresholds, weighted_objective, BinStats};
use crate::model::{Provenance, ScoreModel};

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub model: ScoreModel,
    /// Objective of `model` on the training data.
    pub loss: f64,
    /// Best loss seen after each temperature level.
    pub trace: Vec<f64>,
    /// Number of intercept searches performed.
    pub evaluations: u64,
    pub risk: RiskSummary,
}

/// What risk-level assignment had to adjust on the training data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RiskSummary {
    pub merged: Vec<usize>,
    pub clamped: Vec<usize>,
}

pub(crate) fn num_nonzero(lambda: &[i64]) -> usize {
    lambda.iter().filter(|&&l| l != 0).count()
}

/// Builds a model from coefficients and intercepts: assigns risk levels from
/// the training data, folds merged bins into the intercepts, and recomputes
/// the objective from the finished model.
pub fn finalize_model(
    data: &BinaryDataset,
    grid: &ThresholdGrid,
    coefficients: Vec<i64>,
    mut intercepts: Vec<i64>,
    config: &SolverConfig,
) -> Result<(ScoreModel, f64, RiskAssignment)> {
    let scores = data.integer_scores(&coefficients);
    let bin_of = |s: f64, t: &[i64]| t[1..].partition_point(|&v| v as f64 <= s);
    let bins: Vec<usize> = scores.iter().map(|&s| bin_of(s, &intercepts)).collect();
    let stats = BinStats::from_assignments(&bins, data.labels(), &scores, grid.m() + 1);
    let assignment = assign_risk_levels(&stats, grid);
    for &i in &assignment.merged {
        intercepts[i + 1] = intercepts[i];
    }
    let model = ScoreModel::new(
        coefficients,
        intercepts,
        assignment.levels.clone(),
        grid.clone(),
        data.feature_names().to_vec(),
        Provenance {
            config: Some(config.clone()),
            seed: Some(config.seed),
        },
    )?;
    let preds = model.predict_dataset(data)?;
    let curve = confusion_at_thresholds(&preds, data.labels(), grid)?;
    let loss = weighted_objective(&curve, grid, model.num_nonzero(), config.c0)?;
    Ok((model, loss, assignment))
}

pub(crate) fn train_result(
    data: &BinaryDataset,
    grid: &ThresholdGrid,
    config: &SolverConfig,
    coefficients: Vec<i64>,
    intercepts: Vec<i64>,
    trace: Vec<f64>,
    evaluations: u64,
) -> Result<TrainResult> {
    let (model, loss, assignment) = finalize_model(data, grid, coefficients, intercepts, config)?;
    Ok(TrainResult {
        model,
        loss,
        trace,
        evaluations,
        risk: RiskSummary {
            merged: assignment.merged,
            clamped: assignment.clamped,
        },
    })
}

//! Integer scoring model and its piecewise-constant risk map.

use serde::{Deserialize, Serialize};

use crate::data::{BinaryDataset, PredictionVector, SolverConfig, ThresholdGrid};
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

/// How a model was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub config: Option<SolverConfig>,
    pub seed: Option<u64>,
}

/// Integer coefficients `λ`, monotone intercepts `T_0..T_M` and per-bin
/// risk levels `q_0..q_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreModel {
    coefficients: Vec<i64>,
    intercepts: Vec<i64>,
    risk_levels: Vec<f64>,
    grid: ThresholdGrid,
    feature_names: Vec<String>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    feature_names: Vec<String>,
    coefficients: Vec<i64>,
    intercepts: Vec<i64>,
    thresholds: Vec<f64>,
    weights: Vec<f64>,
    risk_levels: Vec<f64>,
    provenance: Provenance,
}

impl ScoreModel {
    pub fn new(
        coefficients: Vec<i64>,
        intercepts: Vec<i64>,
        risk_levels: Vec<f64>,
        grid: ThresholdGrid,
        feature_names: Vec<String>,
        provenance: Provenance,
    ) -> Result<Self> {
        let p = coefficients.len();
        if p == 0 {
            return Err(Error::NoFeatures);
        }
        if feature_names.len() != p {
            return Err(Error::DimensionMismatch {
                what: "feature names",
                expected: p,
                found: feature_names.len(),
            });
        }
        let bins = grid.m() + 1;
        for (what, found) in [("intercepts", intercepts.len()), ("risk levels", risk_levels.len())] {
            if found != bins {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: bins,
                    found,
                });
            }
        }
        if intercepts.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig("intercepts must be nondecreasing".into()));
        }
        for (i, &q) in risk_levels.iter().enumerate() {
            let (lo, hi) = (grid.p(i), grid.p(i + 1));
            let top = i + 1 == bins;
            if !(q >= lo && (q < hi || (top && q <= hi))) {
                return Err(Error::Domain(format!("risk level q_{i} = {q} outside [{lo}, {hi})")));
            }
        }
        if let Some(config) = &provenance.config {
            config.validate(p)?;
            for (k, (&l, &(lo, hi))) in coefficients.iter().zip(&config.lambda_bounds).enumerate() {
                if l < lo || l > hi {
                    return Err(Error::Domain(format!("coefficient {k} = {l} outside [{lo}, {hi}]")));
                }
            }
        }
        Ok(ScoreModel {
            coefficients,
            intercepts,
            risk_levels,
            grid,
            feature_names,
            provenance,
        })
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    pub fn intercepts(&self) -> &[i64] {
        &self.intercepts
    }

    pub fn risk_levels(&self) -> &[f64] {
        &self.risk_levels
    }

    pub fn grid(&self) -> &ThresholdGrid {
        &self.grid
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Model size: nonzero coefficients, intercepts excluded.
    pub fn num_nonzero(&self) -> usize {
        self.coefficients.iter().filter(|&&l| l != 0).count()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                what: "feature row",
                expected: self.coefficients.len(),
                found: x.len(),
            });
        }
        Ok(x.iter().zip(&self.coefficients).map(|(v, &l)| v * l as f64).sum())
    }

    /// Risk bin of a total score: the number of `T_1..T_M` at or below it.
    pub fn bin_of_score(&self, score: f64) -> usize {
        self.intercepts[1..].partition_point(|&t| t as f64 <= score)
    }

    pub fn risk_for_score(&self, score: f64) -> f64 {
        self.risk_levels[self.bin_of_score(score)]
    }

    /// Total score and risk of one feature row.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        let score = self.score(x)?;
        Ok((score, self.risk_for_score(score)))
    }

    pub fn predict_dataset(&self, data: &BinaryDataset) -> Result<PredictionVector> {
        if data.p() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                what: "dataset columns",
                expected: self.coefficients.len(),
                found: data.p(),
            });
        }
        let risks = data
            .integer_scores(&self.coefficients)
            .into_iter()
            .map(|s| self.risk_for_score(s))
            .collect();
        PredictionVector::new(risks)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.version != MODEL_VERSION {
            return Err(Error::InvalidConfig(format!("unsupported model version {}", doc.version)));
        }
        let grid = ThresholdGrid::with_weights(doc.thresholds, doc.weights)?;
        ScoreModel::new(
            doc.coefficients,
            doc.intercepts,
            doc.risk_levels,
            grid,
            doc.feature_names,
            doc.provenance,
        )
    }

    fn document(&self) -> ModelDocument {
        ModelDocument {
            version: MODEL_VERSION,
            feature_names: self.feature_names.clone(),
            coefficients: self.coefficients.clone(),
            intercepts: self.intercepts.clone(),
            thresholds: self.grid.inner().to_vec(),
            weights: self.grid.weights().to_vec(),
            risk_levels: self.risk_levels.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

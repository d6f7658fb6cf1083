//! Scorecard tables, curve tables and report helpers.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{ConfusionCurve, ThresholdGrid};
use crate::error::{Error, Result};
use crate::ingest::PredictorLevels;
use crate::metrics::{net_benefit_curve, BinStats};
use crate::model::ScoreModel;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Pretty JSON with object keys sorted.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&value)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsRow {
    pub predictor: String,
    pub category: String,
    pub points: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub bin: usize,
    pub low: f64,
    pub high: f64,
    pub risk: f64,
}

/// Points table and score-to-risk bands of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorecard {
    pub points: Vec<PointsRow>,
    pub min_score: f64,
    pub max_score: f64,
    pub bands: Vec<Band>,
}

/// Without level tables every feature is shown as a 0/1 indicator.
fn default_levels(model: &ScoreModel) -> Vec<PredictorLevels> {
    model
        .feature_names()
        .iter()
        .enumerate()
        .map(|(k, name)| PredictorLevels {
            predictor: name.clone(),
            features: vec![k],
            levels: vec![("0".into(), vec![0.0]), ("1".into(), vec![1.0])],
        })
        .collect()
}

impl Scorecard {
    pub fn new(model: &ScoreModel, levels: Option<&[PredictorLevels]>) -> Result<Self> {
        let owned;
        let levels = match levels {
            Some(l) => l,
            None => {
                owned = default_levels(model);
                &owned
            }
        };
        let lambda = model.coefficients();
        let mut points = Vec::new();
        let (mut min_score, mut max_score) = (0.0, 0.0);
        for pred in levels {
            if let Some(&k) = pred.features.iter().find(|&&k| k >= lambda.len()) {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    max: lambda.len() - 1,
                });
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (label, values) in &pred.levels {
                let pts: f64 = pred.features.iter().zip(values).map(|(&k, v)| v * lambda[k] as f64).sum::<f64>() + 0.0;
                lo = lo.min(pts);
                hi = hi.max(pts);
                points.push(PointsRow {
                    predictor: pred.predictor.clone(),
                    category: label.clone(),
                    points: pts,
                });
            }
            if lo.is_finite() {
                min_score += lo;
                max_score += hi;
            }
        }
        let t = model.intercepts();
        let m = t.len() - 1;
        let mut bands = Vec::new();
        for i in 0..=m {
            // band i holds integer scores in [T_i, T_{i+1}), open at both ends of the scale
            let low = if i == 0 { min_score } else { (t[i] as f64).max(min_score) };
            let high = if i == m { max_score } else { (t[i + 1] as f64 - 1.0).min(max_score) };
            let start = if i == 0 { f64::NEG_INFINITY } else { t[i] as f64 };
            let end = if i == m { f64::INFINITY } else { t[i + 1] as f64 };
            if low <= high && start < end {
                bands.push(Band {
                    bin: i,
                    low,
                    high,
                    risk: model.risk_levels()[i],
                });
            }
        }
        Ok(Scorecard {
            points,
            min_score,
            max_score,
            bands,
        })
    }

    /// Risk read off the band table for a total score.
    pub fn risk_for_total(&self, score: f64) -> Option<f64> {
        self.bands
            .iter()
            .find(|b| score >= b.low && score <= b.high)
            .map(|b| b.risk)
    }

    pub fn points_table(&self) -> String {
        let mut out = String::from("Predictor | Category | Points\n");
        for row in &self.points {
            out.push_str(&format!("{} | {} | {}\n", row.predictor, row.category, row.points));
        }
        out.push_str(&format!(
            "Total possible score | | {}–{}\n",
            self.min_score, self.max_score
        ));
        out
    }

    pub fn band_table(&self) -> String {
        let mut out = String::from("Total score | Predicted risk\n");
        for band in &self.bands {
            let range = if band.low == band.high {
                format!("{}", band.low)
            } else {
                format!("{}–{}", band.low, band.high)
            };
            out.push_str(&format!("{range} | {:.1}%\n", band.risk * 100.0));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points at `p_0..p_{M+1}`.
pub fn roc_points(curve: &ConfusionCurve, grid: &ThresholdGrid) -> Result<Vec<RocPoint>> {
    if curve.n_pos() == 0 || curve.n_neg() == 0 {
        return Err(Error::DegenerateLabels);
    }
    let (np, nn) = (curve.n_pos() as f64, curve.n_neg() as f64);
    Ok(grid
        .points()
        .iter()
        .enumerate()
        .map(|(i, &p)| RocPoint {
            threshold: p,
            fpr: curve.fp()[i] as f64 / nn,
            tpr: curve.tp()[i] as f64 / np,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub bin_midpoint: f64,
    pub mean_predicted: f64,
    pub observed_rate: f64,
    pub n: u64,
}

/// One point per nonempty bin.
pub fn calibration_points(stats: &BinStats, grid: &ThresholdGrid) -> Vec<CalibrationPoint> {
    (0..stats.num_bins())
        .filter_map(|i| {
            stats.event_rate(i).map(|rate| CalibrationPoint {
                bin_midpoint: (grid.p(i) + grid.p(i + 1)) / 2.0,
                mean_predicted: stats.mean_score[i],
                observed_rate: rate,
                n: stats.n[i],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub threshold: f64,
    pub model: f64,
    pub treat_all: f64,
    pub treat_none: f64,
}

/// Net benefit of the model, treat-all and treat-none at `p_0..p_M`.
pub fn decision_curve(curve: &ConfusionCurve, grid: &ThresholdGrid) -> Result<Vec<DecisionPoint>> {
    let nb = net_benefit_curve(curve, grid)?;
    let a0 = curve.n_pos() as f64 / curve.n() as f64;
    Ok(nb
        .into_iter()
        .enumerate()
        .map(|(i, model)| DecisionPoint {
            threshold: grid.p(i),
            model,
            treat_all: a0 - (1.0 - a0) * grid.odds(i),
            treat_none: 0.0,
        })
        .collect())
}

/// Writes serializable rows as a headed CSV.
pub fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

//! Rounding of a real-valued linear classifier to integer coefficients.

use serde::{Deserialize, Serialize};

use crate::data::BinaryDataset;
use crate::error::{Error, Result};

/// Margin quantities that decide whether rounding preserves every
/// classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundingDiagnostics {
    /// `min_{i,j} |x_j·ρ − t_i| / ‖ρ‖_∞`.
    pub gamma_min: f64,
    /// `max_j ‖x_j‖_1`.
    pub x_norm: f64,
    /// Whether `Λ > (‖X‖_∞ + 1)/(2γ_min)`.
    pub condition_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundedModel {
    pub coefficients: Vec<i64>,
    pub intercepts: Vec<i64>,
    pub diagnostics: RoundingDiagnostics,
}

fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Scales `ρ` and `t` by `Λ/‖ρ‖_∞` and rounds each entry to the nearest
/// integer, halves rounding up.
pub fn round_real_model(rho: &[f64], t: &[f64], data: &BinaryDataset, lambda_cap: i64) -> Result<RoundedModel> {
    if rho.len() != data.p() {
        return Err(Error::DimensionMismatch {
            what: "baseline coefficients",
            expected: data.p(),
            found: rho.len(),
        });
    }
    if t.is_empty() {
        return Err(Error::Domain("at least one intercept required".into()));
    }
    if rho.iter().chain(t).any(|v| !v.is_finite()) {
        return Err(Error::Domain("baseline values must be finite".into()));
    }
    if t.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("baseline intercepts must be nondecreasing".into()));
    }
    if lambda_cap < 1 {
        return Err(Error::InvalidConfig("coefficient cap must be positive".into()));
    }
    let norm = rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm == 0.0 {
        return Err(Error::ZeroCoefficients);
    }
    let scale = lambda_cap as f64 / norm;
    let coefficients = rho.iter().map(|&r| round_half_up(r * scale)).collect();
    let intercepts = t.iter().map(|&v| round_half_up(v * scale)).collect();

    let scores = data.scores(rho);
    let gamma_min = scores
        .iter()
        .flat_map(|s| t.iter().map(move |ti| (s - ti).abs()))
        .fold(f64::INFINITY, f64::min)
        / norm;
    let x_norm = data.max_row_l1();
    let condition_holds = gamma_min > 0.0 && lambda_cap as f64 > (x_norm + 1.0) / (2.0 * gamma_min);
    Ok(RoundedModel {
        coefficients,
        intercepts,
        diagnostics: RoundingDiagnostics {
            gamma_min,
            x_norm,
            condition_holds,
        },
    })
}

/// `TP_i`/`FP_i` for the rule `score ≥ intercept_i`, with a trailing zero
/// entry so the vectors align with a grid of `intercepts.len() − 1` inner
/// thresholds.
pub fn counts_at_intercepts(scores: &[f64], labels: &[u8], intercepts: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut tp = vec![0u64; intercepts.len() + 1];
    let mut fp = vec![0u64; intercepts.len() + 1];
    for (&s, &y) in scores.iter().zip(labels) {
        for (i, &t) in intercepts.iter().enumerate() {
            if s >= t {
                if y == 1 {
                    tp[i] += 1;
                } else {
                    fp[i] += 1;
                }
            }
        }
    }
    (tp, fp)
}

//! Greedy stage-wise intercept search over floor-of-score candidates.

use crate::data::ThresholdGrid;
use crate::error::{Error, Result};
use crate::metrics::objective_from_counts;

/// Intercepts chosen for a fixed coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct InterceptFit {
    pub intercepts: Vec<i64>,
    pub loss: f64,
    /// `TP_0..TP_{M+1}` at the chosen intercepts.
    pub tp: Vec<u64>,
    /// `FP_0..FP_{M+1}` at the chosen intercepts.
    pub fp: Vec<u64>,
}

/// Sorted candidate intercepts with the positive/negative counts at or above
/// each one.
#[derive(Debug, Clone)]
pub struct CandidateTable {
    pub candidates: Vec<i64>,
    pub tp: Vec<u64>,
    pub fp: Vec<u64>,
}

impl CandidateTable {
    pub fn new(scores: &[f64], labels: &[u8]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                what: "scores vs. labels",
                expected: labels.len(),
                found: scores.len(),
            });
        }
        if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("score at index {index} is not finite")));
        }
        let mut pairs: Vec<(i64, u8)> = scores
            .iter()
            .zip(labels)
            .map(|(&s, &y)| (s.floor() as i64, y))
            .collect();
        pairs.sort_unstable();
        let mut candidates = Vec::new();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (floor, y) in pairs {
            if candidates.last() != Some(&floor) {
                candidates.push(floor);
                pos.push(0u64);
                neg.push(0u64);
            }
            let last = candidates.len() - 1;
            if y == 1 {
                pos[last] += 1;
            } else {
                neg[last] += 1;
            }
        }
        candidates.push(candidates[candidates.len() - 1] + 1);
        let len = candidates.len();
        let mut tp = vec![0u64; len];
        let mut fp = vec![0u64; len];
        for m in (0..len - 1).rev() {
            tp[m] = tp[m + 1] + pos[m];
            fp[m] = fp[m + 1] + neg[m];
        }
        Ok(CandidateTable { candidates, tp, fp })
    }
}

/// Unweighted net benefit of a count pair at threshold odds `odds`.
pub fn stage_net_benefit(tp: u64, fp: u64, n: u64, odds: f64) -> f64 {
    let n = n as f64;
    tp as f64 / n - fp as f64 / n * odds
}

/// Chooses `T_0 = min⌊ŷ⌋` and, for `i = 1..=M`, the candidate
/// `T ≥ T_{i−1}` maximizing the net benefit at `p_i` (ties to the smallest
/// `T`). The loss weights each stage by `ω_i` once.
pub fn find_optimal_t(
    scores: &[f64],
    labels: &[u8],
    grid: &ThresholdGrid,
    c0: f64,
    num_nonzero: usize,
) -> Result<InterceptFit> {
    let table = CandidateTable::new(scores, labels)?;
    Ok(fit_from_table(&table, grid, c0, num_nonzero))
}

pub(crate) fn fit_from_table(table: &CandidateTable, grid: &ThresholdGrid, c0: f64, num_nonzero: usize) -> InterceptFit {
    let m = grid.m();
    let n = table.tp[0] + table.fp[0];
    let mut index = 0usize;
    let mut intercepts = Vec::with_capacity(m + 1);
    let mut tp = Vec::with_capacity(m + 2);
    let mut fp = Vec::with_capacity(m + 2);
    intercepts.push(table.candidates[0]);
    tp.push(table.tp[0]);
    fp.push(table.fp[0]);
    for i in 1..=m {
        let odds = grid.odds(i);
        let mut best = index;
        let mut best_nb = stage_net_benefit(table.tp[index], table.fp[index], n, odds);
        for c in index + 1..table.candidates.len() {
            let nb = stage_net_benefit(table.tp[c], table.fp[c], n, odds);
            if nb > best_nb {
                best = c;
                best_nb = nb;
            }
        }
        index = best;
        intercepts.push(table.candidates[index]);
        tp.push(table.tp[index]);
        fp.push(table.fp[index]);
    }
    tp.push(0);
    fp.push(0);
    let loss = objective_from_counts(&tp, &fp, n, grid, num_nonzero, c0);
    InterceptFit { intercepts, loss, tp, fp }
}

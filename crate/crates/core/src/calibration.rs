//! Prediction repair that raises AUNBC, and the risk-level assignment that
//! makes a piecewise model moderately calibrated on its training data.

use serde::{Deserialize, Serialize};

use crate::data::{PredictionVector, ThresholdGrid};
use crate::error::Result;
use crate::metrics::{aunbc, bin_stats, confusion_at_thresholds, BinStats};

/// Gap kept below `p_{i+1}` when a risk level has to be clamped into its bin.
pub const CLAMP_EPSILON: f64 = 1e-9;

/// Fraction of the original score added back by the order-preserving step.
pub const ORDER_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// Audit trail of one repair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub moved_bins: Vec<(usize, Direction)>,
    pub aunbc_before: f64,
    pub aunbc_after: f64,
    pub order_preserved: bool,
}

fn current_aunbc(scores: &[f64], labels: &[u8], grid: &ThresholdGrid) -> Result<f64> {
    let preds = PredictionVector::new(scores.to_vec())?;
    aunbc(&confusion_at_thresholds(&preds, labels, grid)?, grid)
}

/// One left-to-right sweep over the bins. Bin counts are recomputed from
/// the partially repaired scores at every step.
fn sweep(scores: &mut [f64], labels: &[u8], grid: &ThresholdGrid, moved: &mut Vec<(usize, Direction)>) -> bool {
    let m = grid.m();
    let mut any = false;
    for i in 0..=m {
        let (lo, hi) = (grid.p(i), grid.p(i + 1));
        let in_bin = |s: f64| s >= lo && (s < hi || (i == m && s <= hi));
        let (mut n_i, mut o_i) = (0u64, 0u64);
        for (&s, &y) in scores.iter().zip(labels) {
            if in_bin(s) {
                n_i += 1;
                o_i += u64::from(y);
            }
        }
        let (n_f, o_f) = (n_i as f64, o_i as f64);
        // i = 0 never moves down since p_0 = 0; i = M never moves up since p_{M+1} = 1
        let target = if o_f < n_f * lo {
            Some((grid.p(i - 1), Direction::Down))
        } else if o_f > n_f * hi {
            Some((hi, Direction::Up))
        } else {
            None
        };
        if let Some((value, direction)) = target {
            for s in scores.iter_mut().filter(|s| in_bin(**s)) {
                *s = value;
            }
            moved.push((i, direction));
            any = true;
        }
    }
    any
}

fn repair(
    preds: &PredictionVector,
    labels: &[u8],
    grid: &ThresholdGrid,
    preserve_order: bool,
    until_stable: bool,
) -> Result<(PredictionVector, RepairReport)> {
    // validates lengths and labels
    let aunbc_before = aunbc(&confusion_at_thresholds(preds, labels, grid)?, grid)?;
    let original = preds.as_slice();
    let mut scores = original.to_vec();
    let mut moved = Vec::new();
    while sweep(&mut scores, labels, grid, &mut moved) && until_stable {}
    if preserve_order {
        for (s, &c) in scores.iter_mut().zip(original) {
            *s = (*s + c * ORDER_FRACTION).min(1.0);
        }
    }
    let aunbc_after = current_aunbc(&scores, labels, grid)?;
    Ok((
        PredictionVector::new(scores)?,
        RepairReport {
            moved_bins: moved,
            aunbc_before,
            aunbc_after,
            order_preserved: preserve_order,
        },
    ))
}

/// Moves every under-predicted bin (`O_i > N_i·p_{i+1}`) up to `p_{i+1}` and
/// every over-predicted bin (`O_i < N_i·p_i`) down to `p_{i−1}` in a single
/// sweep. With `preserve_order` the result is `min(c* + c/100, 1)`.
pub fn improve_aunbc(
    preds: &PredictionVector,
    labels: &[u8],
    grid: &ThresholdGrid,
    preserve_order: bool,
) -> Result<(PredictionVector, RepairReport)> {
    repair(preds, labels, grid, preserve_order, false)
}

/// Repeats the sweep until no bin triggers, then applies the optional
/// order-preserving step once.
pub fn improve_aunbc_until_stable(
    preds: &PredictionVector,
    labels: &[u8],
    grid: &ThresholdGrid,
    preserve_order: bool,
) -> Result<(PredictionVector, RepairReport)> {
    repair(preds, labels, grid, preserve_order, true)
}

/// Per-bin risk levels plus what had to be adjusted to produce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAssignment {
    pub levels: Vec<f64>,
    /// Bins whose samples were moved into the next bin because their event
    /// rate sat exactly on the upper edge.
    pub merged: Vec<usize>,
    /// Bins whose event rate fell outside the bin and was clamped.
    pub clamped: Vec<usize>,
    /// Counts after merging.
    pub stats: BinStats,
}

/// `q_i = O_i/N_i` for occupied bins, the bin midpoint for empty ones.
///
/// A bin with `O_i/N_i = p_{i+1}` exactly is merged into bin `i+1` (which
/// leaves AUNBC unchanged) and gets the midpoint. Rates outside the bin are
/// clamped into `[p_i, p_{i+1} − 1e-9]` and flagged. The top bin is closed,
/// so `q_M` may equal 1.
pub fn assign_risk_levels(stats: &BinStats, grid: &ThresholdGrid) -> RiskAssignment {
    let m = grid.m();
    let mut n = stats.n.clone();
    let mut o = stats.o.clone();
    let mut levels = Vec::with_capacity(m + 1);
    let mut merged = Vec::new();
    let mut clamped = Vec::new();
    for i in 0..=m {
        let (lo, hi) = (grid.p(i), grid.p(i + 1));
        let midpoint = (lo + hi) / 2.0;
        if n[i] == 0 {
            levels.push(midpoint);
            continue;
        }
        let rate = o[i] as f64 / n[i] as f64;
        if i < m && rate == hi {
            n[i + 1] += n[i];
            o[i + 1] += o[i];
            n[i] = 0;
            o[i] = 0;
            merged.push(i);
            levels.push(midpoint);
        } else if rate < lo {
            clamped.push(i);
            levels.push(lo);
        } else if i < m && rate > hi {
            clamped.push(i);
            levels.push((hi - CLAMP_EPSILON).max(lo));
        } else {
            levels.push(rate);
        }
    }
    let mean_score = (0..=m).map(|i| if n[i] == 0 { 0.0 } else { levels[i] }).collect();
    RiskAssignment {
        levels,
        merged,
        clamped,
        stats: BinStats { n, o, mean_score },
    }
}

/// Bin statistics of a prediction vector followed by risk-level assignment.
pub fn risk_levels_for_predictions(
    preds: &PredictionVector,
    labels: &[u8],
    grid: &ThresholdGrid,
) -> Result<RiskAssignment> {
    Ok(assign_risk_levels(&bin_stats(preds, labels, grid)?, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ece;

    #[test]
    fn single_bin_moves_down() {
        let grid = ThresholdGrid::new(vec![0.5]).unwrap();
        let preds = PredictionVector::new(vec![0.6, 0.6, 0.6]).unwrap();
        let (out, report) = improve_aunbc(&preds, &[0, 0, 1], &grid, false).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(report.moved_bins, vec![(1, Direction::Down)]);
        assert_eq!(report.aunbc_before, 0.0);
        assert!((report.aunbc_after - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn calibrated_predictions_unchanged() {
        let grid = ThresholdGrid::new(vec![0.5]).unwrap();
        let preds = PredictionVector::new(vec![0.25, 0.25, 0.25, 0.25, 0.75, 0.75, 0.75, 0.75]).unwrap();
        let labels = [1, 0, 0, 0, 1, 1, 1, 0];
        let (out, report) = improve_aunbc(&preds, &labels, &grid, false).unwrap();
        assert_eq!(out, preds);
        assert!(report.moved_bins.is_empty());
        assert_eq!(report.aunbc_before, report.aunbc_after);
    }

    #[test]
    fn bin_zero_never_moves_down() {
        let grid = ThresholdGrid::new(vec![0.5]).unwrap();
        let preds = PredictionVector::new(vec![0.1, 0.1, 0.1]).unwrap();
        let (_, report) = improve_aunbc(&preds, &[0, 0, 0], &grid, false).unwrap();
        assert!(report.moved_bins.is_empty());
    }

    #[test]
    fn up_move_into_next_bin() {
        let grid = ThresholdGrid::uniform(4).unwrap();
        // bin 0 holds three positives out of four: 0.75 > 0.25
        let preds = PredictionVector::new(vec![0.1, 0.1, 0.1, 0.1, 0.9]).unwrap();
        let labels = [1, 1, 1, 0, 1];
        let (out, report) = improve_aunbc(&preds, &labels, &grid, false).unwrap();
        assert_eq!(report.moved_bins[0], (0, Direction::Up));
        assert!(report.aunbc_after > report.aunbc_before);
        assert!(out.as_slice()[..4].iter().all(|&s| s >= 0.25));
    }

    #[test]
    fn order_step_uses_original_scores() {
        let grid = ThresholdGrid::new(vec![0.5]).unwrap();
        let preds = PredictionVector::new(vec![0.6, 0.7, 0.8]).unwrap();
        let (out, report) = improve_aunbc(&preds, &[0, 0, 1], &grid, true).unwrap();
        assert!(report.order_preserved);
        let expected = [0.006, 0.007, 0.008];
        for (a, b) in out.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn risk_level_examples() {
        let grid = ThresholdGrid::uniform(10).unwrap();
        let mut n = vec![0u64; 10];
        let mut o = vec![0u64; 10];
        n[1] = 20;
        o[1] = 3;
        let stats = BinStats {
            n,
            o,
            mean_score: vec![0.0; 10],
        };
        let assignment = assign_risk_levels(&stats, &grid);
        assert_eq!(assignment.levels[1], 0.15);
        assert!((assignment.levels[3] - 0.35).abs() < 1e-15);
        assert!(assignment.merged.is_empty() && assignment.clamped.is_empty());
    }

    #[test]
    fn edge_rate_merges_upward() {
        let grid = ThresholdGrid::new(vec![0.5]).unwrap();
        let stats = BinStats {
            n: vec![4, 2],
            o: vec![2, 2],
            mean_score: vec![0.0; 2],
        };
        let assignment = assign_risk_levels(&stats, &grid);
        assert_eq!(assignment.merged, vec![0]);
        assert_eq!(assignment.stats.n, vec![0, 6]);
        assert_eq!(assignment.levels, vec![0.25, 4.0 / 6.0]);
    }

    #[test]
    fn out_of_bin_rates_are_clamped() {
        let grid = ThresholdGrid::new(vec![0.5]).unwrap();
        let stats = BinStats {
            n: vec![4, 4],
            o: vec![3, 1],
            mean_score: vec![0.0; 2],
        };
        let assignment = assign_risk_levels(&stats, &grid);
        assert_eq!(assignment.clamped, vec![0, 1]);
        assert_eq!(assignment.levels, vec![0.5 - CLAMP_EPSILON, 0.5]);
    }

    #[test]
    fn assigned_levels_give_zero_ece() {
        let grid = ThresholdGrid::uniform(10).unwrap();
        let preds = PredictionVector::new(vec![0.05, 0.05, 0.05, 0.32, 0.32, 0.32, 0.91, 0.91]).unwrap();
        let labels = [0, 0, 0, 1, 0, 0, 1, 1];
        let assignment = risk_levels_for_predictions(&preds, &labels, &grid).unwrap();
        assert!(assignment.clamped.is_empty());
        let relabeled: Vec<f64> = preds
            .as_slice()
            .iter()
            .map(|&s| assignment.levels[grid.bin_of(s)])
            .collect();
        let relabeled = PredictionVector::new(relabeled).unwrap();
        let stats = bin_stats(&relabeled, &labels, &grid).unwrap();
        assert_eq!(ece(&stats, 8), 0.0);
    }
}

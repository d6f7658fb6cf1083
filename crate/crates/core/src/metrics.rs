//! Threshold-binned confusion statistics and the scalar measures built on
//! them: net benefit, AUNBC, binned AUROC, ECE, Hosmer–Lemeshow and the
//! training objective.
//!
//! Counts stay in exact integers until the final division.

use serde::{Deserialize, Serialize};

use crate::data::{ConfusionCurve, PredictionVector, ThresholdGrid};
use crate::error::{Error, Result};

/// Per-bin sample count, positive count and mean predicted score.
///
/// Bin `i` is `[p_i, p_{i+1})`; the top bin `M` is `[p_M, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub n: Vec<u64>,
    pub o: Vec<u64>,
    pub mean_score: Vec<f64>,
}

impl BinStats {
    /// Accumulates statistics from explicit bin assignments.
    ///
    /// The mean is taken as `first + Σ(x − first)/n` so that a bin whose
    /// scores are all equal reports that score exactly.
    pub fn from_assignments(bins: &[usize], labels: &[u8], scores: &[f64], num_bins: usize) -> Self {
        let mut n = vec![0u64; num_bins];
        let mut o = vec![0u64; num_bins];
        let mut first = vec![f64::NAN; num_bins];
        let mut deviation = vec![0.0f64; num_bins];
        for ((&b, &y), &s) in bins.iter().zip(labels).zip(scores) {
            if n[b] == 0 {
                first[b] = s;
            } else {
                deviation[b] += s - first[b];
            }
            n[b] += 1;
            o[b] += u64::from(y);
        }
        let mean_score = (0..num_bins)
            .map(|b| {
                if n[b] == 0 {
                    0.0
                } else {
                    first[b] + deviation[b] / n[b] as f64
                }
            })
            .collect();
        Self { n, o, mean_score }
    }

    pub fn num_bins(&self) -> usize {
        self.n.len()
    }

    pub fn total(&self) -> u64 {
        self.n.iter().sum()
    }

    /// Observed event rate `O_i/N_i`, or `None` for an empty bin.
    pub fn event_rate(&self, i: usize) -> Option<f64> {
        (self.n[i] > 0).then(|| self.o[i] as f64 / self.n[i] as f64)
    }
}

fn check_lengths(preds: &PredictionVector, labels: &[u8]) -> Result<()> {
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction count vs. label count",
            expected: labels.len(),
            found: preds.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(row) = labels.iter().position(|&y| y > 1) {
        return Err(Error::NonBinaryLabel { row });
    }
    Ok(())
}

/// `TP_i = #{c_j ≥ p_i, y_j = 1}` and `FP_i` likewise, for `i = 0..=M+1`.
///
/// `TP_{M+1} = FP_{M+1} = 0` by definition, so a score of exactly 1 is
/// counted in the top bin rather than above it.
pub fn confusion_at_thresholds(
    preds: &PredictionVector,
    labels: &[u8],
    grid: &ThresholdGrid,
) -> Result<ConfusionCurve> {
    check_lengths(preds, labels)?;
    let m = grid.m();
    let mut pos = vec![0u64; m + 1];
    let mut neg = vec![0u64; m + 1];
    for (&s, &y) in preds.as_slice().iter().zip(labels) {
        let b = grid.bin_of(s);
        if y == 1 {
            pos[b] += 1;
        } else {
            neg[b] += 1;
        }
    }
    curve_from_bin_counts(&pos, &neg)
}

/// Suffix sums of per-bin positive/negative counts.
pub(crate) fn curve_from_bin_counts(pos: &[u64], neg: &[u64]) -> Result<ConfusionCurve> {
    let len = pos.len() + 1;
    let mut tp = vec![0u64; len];
    let mut fp = vec![0u64; len];
    for i in (0..pos.len()).rev() {
        tp[i] = tp[i + 1] + pos[i];
        fp[i] = fp[i + 1] + neg[i];
    }
    ConfusionCurve::from_counts(tp, fp)
}

/// Net benefit at `p_i`: `TP_i/N − (FP_i/N)·p_i/(1−p_i)`.
pub fn net_benefit(curve: &ConfusionCurve, grid: &ThresholdGrid, i: usize) -> Result<f64> {
    curve.check_grid(grid)?;
    if i > grid.m() {
        return Err(Error::IndexOutOfRange { index: i, max: grid.m() });
    }
    let n = curve.n() as f64;
    Ok(curve.tp()[i] as f64 / n - curve.fp()[i] as f64 / n * grid.odds(i))
}

/// Net benefit at every `p_0..p_M`.
pub fn net_benefit_curve(curve: &ConfusionCurve, grid: &ThresholdGrid) -> Result<Vec<f64>> {
    (0..=grid.m()).map(|i| net_benefit(curve, grid, i)).collect()
}

/// `(1/N)·Σ_i w_i (TP_i − FP_i·p_i/(1−p_i))` over `i = 0..=M`.
///
/// `tp`/`fp` need only cover `0..=M`; no curve invariants are assumed.
pub fn weighted_net_benefit(tp: &[u64], fp: &[u64], n: u64, grid: &ThresholdGrid, weights: &[f64]) -> f64 {
    let sum: f64 = (0..=grid.m())
        .map(|i| weights[i] * (tp[i] as f64 - fp[i] as f64 * grid.odds(i)))
        .sum();
    sum / n as f64
}

/// Area under the net benefit curve, always with weights `p_{i+1} − p_i`.
pub fn aunbc(curve: &ConfusionCurve, grid: &ThresholdGrid) -> Result<f64> {
    curve.check_grid(grid)?;
    let spacing: Vec<f64> = (0..=grid.m()).map(|i| grid.spacing(i)).collect();
    Ok(weighted_net_benefit(curve.tp(), curve.fp(), curve.n(), grid, &spacing))
}

/// Training objective: weighted negative net benefit plus `c0·‖λ‖₀`.
pub fn weighted_objective(curve: &ConfusionCurve, grid: &ThresholdGrid, num_nonzero: usize, c0: f64) -> Result<f64> {
    curve.check_grid(grid)?;
    Ok(objective_from_counts(curve.tp(), curve.fp(), curve.n(), grid, num_nonzero, c0))
}

pub(crate) fn objective_from_counts(
    tp: &[u64],
    fp: &[u64],
    n: u64,
    grid: &ThresholdGrid,
    num_nonzero: usize,
    c0: f64,
) -> f64 {
    -weighted_net_benefit(tp, fp, n, grid, grid.weights()) + c0 * num_nonzero as f64
}

/// Binned AUROC, `(1/(N⁺N⁻))·Σ_i (FP_i − FP_{i+1})·TP_i`.
///
/// Samples sharing a bin count as correctly ranked, so a constant predictor
/// scores 1 here rather than the rank-based 0.5.
pub fn auroc_binned(curve: &ConfusionCurve) -> Result<f64> {
    if curve.n_pos() == 0 || curve.n_neg() == 0 {
        return Err(Error::DegenerateLabels);
    }
    let (tp, fp) = (curve.tp(), curve.fp());
    let concordant: u128 = (0..curve.len() - 1)
        .map(|i| u128::from(fp[i] - fp[i + 1]) * u128::from(tp[i]))
        .sum();
    Ok(concordant as f64 / (u128::from(curve.n_pos()) * u128::from(curve.n_neg())) as f64)
}

/// Per-bin counts and mean score of a prediction vector.
pub fn bin_stats(preds: &PredictionVector, labels: &[u8], grid: &ThresholdGrid) -> Result<BinStats> {
    check_lengths(preds, labels)?;
    let bins: Vec<usize> = preds.as_slice().iter().map(|&s| grid.bin_of(s)).collect();
    Ok(BinStats::from_assignments(&bins, labels, preds.as_slice(), grid.m() + 1))
}

/// Expected calibration error over the grid bins; empty bins contribute 0.
pub fn ece(stats: &BinStats, n: u64) -> f64 {
    (0..stats.num_bins())
        .filter(|&i| stats.n[i] > 0)
        .map(|i| {
            let rate = stats.o[i] as f64 / stats.n[i] as f64;
            stats.n[i] as f64 / n as f64 * (rate - stats.mean_score[i]).abs()
        })
        .sum()
}

/// Hosmer–Lemeshow statistic with the count of bins left out of the sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HlStatistic {
    /// `None` when every bin was skipped.
    pub value: Option<f64>,
    pub skipped_bins: usize,
}

/// `Σ (O_i − E_i)²/(E_i(1 − E_i/N_i))` with `E_i = q_i·N_i`.
///
/// Bins with `N_i = 0` or `E_i ∉ (0, N_i)` have a degenerate denominator and
/// are skipped. Empty bins are not counted as skipped.
pub fn hl_statistic(stats: &BinStats, risk_levels: &[f64]) -> Result<HlStatistic> {
    if risk_levels.len() != stats.num_bins() {
        return Err(Error::DimensionMismatch {
            what: "risk level count vs. bin count",
            expected: stats.num_bins(),
            found: risk_levels.len(),
        });
    }
    if let Some(q) = risk_levels.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::Domain(format!("risk level {q} outside [0, 1]")));
    }
    let mut total = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for i in 0..stats.num_bins() {
        let n_i = stats.n[i] as f64;
        if stats.n[i] == 0 {
            continue;
        }
        let expected = risk_levels[i] * n_i;
        if !(expected > 0.0 && expected < n_i) {
            skipped += 1;
            continue;
        }
        let diff = stats.o[i] as f64 - expected;
        total += diff * diff / (expected * (1.0 - expected / n_i));
        used += 1;
    }
    Ok(HlStatistic {
        value: (used > 0).then_some(total),
        skipped_bins: skipped,
    })
}

/// Everything `eval` reports for one prediction vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// `None` when the labels contain a single class.
    pub auroc: Option<f64>,
    pub aunbc: f64,
    pub ece: f64,
    pub hl: HlStatistic,
    pub net_benefit: Vec<f64>,
    pub objective: f64,
}

/// Evaluates a prediction vector on a grid.
///
/// Hosmer–Lemeshow uses `risk_levels` when given (a piecewise model), and
/// otherwise the per-bin mean prediction as the expected rate.
pub fn evaluate(
    preds: &PredictionVector,
    labels: &[u8],
    grid: &ThresholdGrid,
    risk_levels: Option<&[f64]>,
    num_nonzero: usize,
    c0: f64,
) -> Result<MetricReport> {
    let curve = confusion_at_thresholds(preds, labels, grid)?;
    let stats = bin_stats(preds, labels, grid)?;
    let hl = hl_statistic(&stats, risk_levels.unwrap_or(&stats.mean_score))?;
    Ok(MetricReport {
        auroc: auroc_binned(&curve).ok(),
        aunbc: aunbc(&curve, grid)?,
        ece: ece(&stats, curve.n()),
        hl,
        net_benefit: net_benefit_curve(&curve, grid)?,
        objective: weighted_objective(&curve, grid, num_nonzero, c0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_half() -> ThresholdGrid {
        ThresholdGrid::new(vec![0.5]).unwrap()
    }

    fn example() -> (PredictionVector, Vec<u8>) {
        (PredictionVector::new(vec![0.9, 0.8, 0.3, 0.1]).unwrap(), vec![1, 0, 1, 0])
    }

    #[test]
    fn confusion_example() {
        let (preds, labels) = example();
        let curve = confusion_at_thresholds(&preds, &labels, &grid_half()).unwrap();
        assert_eq!(curve.tp(), &[2, 1, 0]);
        assert_eq!(curve.fp(), &[2, 1, 0]);
    }

    #[test]
    fn confusion_boundaries() {
        let grid = grid_half();
        let ones = PredictionVector::new(vec![1.0; 5]).unwrap();
        let curve = confusion_at_thresholds(&ones, &[1, 0, 1, 1, 0], &grid).unwrap();
        assert_eq!((curve.tp()[1], curve.fp()[1]), (3, 2));
        assert_eq!((curve.tp()[2], curve.fp()[2]), (0, 0));

        let at = PredictionVector::new(vec![0.5]).unwrap();
        let curve = confusion_at_thresholds(&at, &[1], &grid).unwrap();
        assert_eq!(curve.tp()[1], 1);
    }

    #[test]
    fn confusion_length_mismatch() {
        let (preds, _) = example();
        assert!(confusion_at_thresholds(&preds, &[1, 0], &grid_half()).is_err());
    }

    #[test]
    fn net_benefit_examples() {
        let (preds, labels) = example();
        let grid = grid_half();
        let curve = confusion_at_thresholds(&preds, &labels, &grid).unwrap();
        assert_eq!(net_benefit(&curve, &grid, 0).unwrap(), 0.5);
        assert_eq!(net_benefit(&curve, &grid, 1).unwrap(), 0.0);
        assert!(net_benefit(&curve, &grid, 2).is_err());

        let perfect = ConfusionCurve::from_counts(vec![3, 3, 0], vec![5, 0, 0]).unwrap();
        assert_eq!(net_benefit(&perfect, &grid, 1).unwrap(), 3.0 / 8.0);
    }

    #[test]
    fn aunbc_examples() {
        let (preds, labels) = example();
        let grid = grid_half();
        let curve = confusion_at_thresholds(&preds, &labels, &grid).unwrap();
        assert!((aunbc(&curve, &grid).unwrap() - 0.25).abs() < 1e-15);

        let grid = ThresholdGrid::uniform(10).unwrap();
        let labels = [1, 1, 0, 0, 0];
        let perfect = PredictionVector::new(vec![1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let curve = confusion_at_thresholds(&perfect, &labels, &grid).unwrap();
        assert!((aunbc(&curve, &grid).unwrap() - 0.4).abs() < 1e-12);

        let zeros = PredictionVector::new(vec![0.0; 5]).unwrap();
        let curve = confusion_at_thresholds(&zeros, &labels, &grid).unwrap();
        assert!((aunbc(&curve, &grid).unwrap() - 0.4 * 0.1).abs() < 1e-15);
    }

    #[test]
    fn objective_examples() {
        let (preds, labels) = example();
        let grid = grid_half();
        let curve = confusion_at_thresholds(&preds, &labels, &grid).unwrap();
        assert_eq!(
            weighted_objective(&curve, &grid, 0, 0.0).unwrap(),
            -aunbc(&curve, &grid).unwrap()
        );
        let value = weighted_objective(&curve, &grid, 1, 0.001).unwrap();
        assert!((value - (-0.249)).abs() < 1e-15, "{value}");

        let grid = ThresholdGrid::uniform(10).unwrap();
        let zero = ConfusionCurve::from_counts(
            [vec![2], vec![0; 10]].concat(),
            [vec![3], vec![0; 10]].concat(),
        )
        .unwrap();
        let value = weighted_objective(&zero, &grid, 2, 0.01).unwrap();
        assert!((value - (-0.4 * 0.1 + 0.02)).abs() < 1e-15);
    }

    #[test]
    fn auroc_examples() {
        let (preds, labels) = example();
        let curve = confusion_at_thresholds(&preds, &labels, &grid_half()).unwrap();
        assert_eq!(auroc_binned(&curve).unwrap(), 0.75);

        let perfect = ConfusionCurve::from_counts(vec![3, 3, 0], vec![5, 0, 0]).unwrap();
        assert_eq!(auroc_binned(&perfect).unwrap(), 1.0);

        // every score below p_1: one bin, and the binned value degenerates to 1
        let flat = PredictionVector::new(vec![0.2; 4]).unwrap();
        let curve = confusion_at_thresholds(&flat, &[1, 0, 0, 1], &grid_half()).unwrap();
        assert_eq!(auroc_binned(&curve).unwrap(), 1.0);

        let single = ConfusionCurve::from_counts(vec![0, 0, 0], vec![4, 1, 0]).unwrap();
        assert!(matches!(auroc_binned(&single), Err(Error::DegenerateLabels)));
    }

    #[test]
    fn bin_stats_examples() {
        let (preds, labels) = example();
        let stats = bin_stats(&preds, &labels, &grid_half()).unwrap();
        assert_eq!(stats.n, vec![2, 2]);
        assert_eq!(stats.o, vec![1, 1]);
        assert!((stats.mean_score[0] - 0.2).abs() < 1e-15);
        assert!((stats.mean_score[1] - 0.85).abs() < 1e-15);

        let grid = ThresholdGrid::uniform(4).unwrap();
        let preds = PredictionVector::new(vec![0.1, 1.0]).unwrap();
        let stats = bin_stats(&preds, &[0, 1], &grid).unwrap();
        assert_eq!(stats.n, vec![1, 0, 0, 1]);
        assert_eq!(stats.mean_score[1], 0.0);
        assert_eq!(stats.mean_score[3], 1.0);
    }

    #[test]
    fn ece_examples() {
        let (preds, labels) = example();
        let stats = bin_stats(&preds, &labels, &grid_half()).unwrap();
        assert!((ece(&stats, 4) - 0.325).abs() < 1e-15);

        let stats = BinStats {
            n: vec![10],
            o: vec![3],
            mean_score: vec![0.3],
        };
        assert_eq!(ece(&stats, 10), 0.0);

        let preds = PredictionVector::new(vec![0.25, 0.25, 0.25, 0.25, 0.75, 0.75, 0.75, 0.75]).unwrap();
        let stats = bin_stats(&preds, &[1, 0, 0, 0, 1, 1, 1, 0], &grid_half()).unwrap();
        assert_eq!(ece(&stats, 8), 0.0);
    }

    #[test]
    fn hl_examples() {
        let stats = BinStats {
            n: vec![10],
            o: vec![7],
            mean_score: vec![0.5],
        };
        let hl = hl_statistic(&stats, &[0.5]).unwrap();
        assert!((hl.value.unwrap() - 1.6).abs() < 1e-12);
        assert_eq!(hl.skipped_bins, 0);

        let stats = BinStats {
            n: vec![10, 10],
            o: vec![2, 6],
            mean_score: vec![0.2, 0.6],
        };
        let hl = hl_statistic(&stats, &[0.2, 0.6]).unwrap();
        assert_eq!(hl.value, Some(0.0));

        let stats = BinStats {
            n: vec![4, 10],
            o: vec![0, 6],
            mean_score: vec![0.0, 0.6],
        };
        let hl = hl_statistic(&stats, &[0.0, 0.6]).unwrap();
        assert_eq!(hl.skipped_bins, 1);
        assert_eq!(hl.value, Some(0.0));

        let hl = hl_statistic(
            &BinStats {
                n: vec![4],
                o: vec![0],
                mean_score: vec![0.0],
            },
            &[0.0],
        )
        .unwrap();
        assert_eq!(hl.value, None);
        assert_eq!(hl.skipped_bins, 1);
    }

    #[test]
    fn report_serializes_with_sorted_keys() {
        let (preds, labels) = example();
        let report = evaluate(&preds, &labels, &grid_half(), None, 0, 0.0).unwrap();
        let text = serde_json::to_string(&serde_json::to_value(&report).unwrap()).unwrap();
        let keys = ["\"aunbc\"", "\"auroc\"", "\"ece\"", "\"hl\"", "\"net_benefit\"", "\"objective\""];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert_eq!(report.auroc, Some(0.75));
    }
}

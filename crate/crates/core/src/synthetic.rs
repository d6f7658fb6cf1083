//! Synthetic prediction generators for probing the AUROC/AUNBC envelope.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::bounds::p_cumulative;
use crate::data::{PredictionVector, ThresholdGrid};
use crate::error::{Error, Result};

/// Seeded ChaCha20 stream. Normal deviates come from `rand_distr`'s
/// ziggurat `StandardNormal`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn population_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

fn check_labels(labels: &[u8]) -> Result<(usize, usize)> {
    if let Some(row) = labels.iter().position(|&y| y > 1) {
        return Err(Error::NonBinaryLabel { row });
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::DegenerateLabels);
    }
    Ok((pos, labels.len() - pos))
}

/// Pearson correlation between two equal-length vectors.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Scores whose Pearson correlation with the labels equals `r`.
pub fn synth_correlated(labels: &[u8], r: f64, rng: &mut RngStream) -> Result<PredictionVector> {
    if labels.len() < 3 {
        return Err(Error::Domain("at least 3 samples required".into()));
    }
    check_labels(labels)?;
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("correlation {r} outside [-1, 1]")));
    }
    let raw: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    let (m, sd) = (mean(&raw), population_std(&raw));
    let y: Vec<f64> = raw.iter().map(|v| (v - m) / sd).collect();

    let mut z: Vec<f64> = (0..y.len()).map(|_| rng.standard_normal()).collect();
    let zy: f64 = z.iter().zip(&y).map(|(a, b)| a * b).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    for (zi, yi) in z.iter_mut().zip(&y) {
        *zi -= zy / yy * yi;
    }
    let zsd = population_std(&z);
    let noise = (1.0 - r * r).max(0.0).sqrt();
    let s: Vec<f64> = y.iter().zip(&z).map(|(yi, zi)| r * yi + noise * zi / zsd).collect();

    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = s.iter().map(|v| v - lo).collect();
    let hi = shifted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    PredictionVector::new(shifted.into_iter().map(|v| (v / hi).clamp(0.0, 1.0)).collect())
}

/// Envelope-attaining configuration chosen for a target AUROC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPlan {
    /// Threshold index at which the false positives are concentrated.
    pub k: usize,
    /// Fraction of all samples that are negatives scored at `p_K`.
    pub b1: f64,
    /// Fraction of all samples that are positives scored at 1. Candidates
    /// that are not the argmax may carry a negative value.
    pub a_k: f64,
    /// Maximal AUNBC at the target AUROC.
    pub aunbc: f64,
}

fn boundary_candidate(g: f64, a0: f64, grid: &ThresholdGrid, k: usize) -> Result<BoundaryPlan> {
    let b0 = 1.0 - a0;
    let pk = p_cumulative(grid, k)?;
    let p = grid.p(k);
    let b1 = if g <= 1.0 - b0 * pk / ((1.0 - p) * a0) {
        b0
    } else {
        ((1.0 - p) * a0 * b0 * (1.0 - g) / pk).sqrt()
    };
    let a_k = if b1 > 0.0 { a0 - (1.0 - g) * a0 * b0 / b1 } else { a0 };
    // AUNBC of the configuration: thresholds below p_k keep every positive,
    // the rest keep a_k; the b1 negatives cost their odds up to p_k.
    let aunbc = a0 * p + a_k * (1.0 - p) - b1 * pk;
    Ok(BoundaryPlan { k, b1, a_k, aunbc })
}

/// The candidate with the largest AUNBC, ties to the smallest index.
pub fn boundary_plan(g: f64, a0: f64, grid: &ThresholdGrid) -> Result<BoundaryPlan> {
    if grid.m() == 0 {
        return Err(Error::InvalidGrid("at least one inner threshold required".into()));
    }
    let mut best = boundary_candidate(g, a0, grid, 1)?;
    for k in 2..=grid.m() {
        let cand = boundary_candidate(g, a0, grid, k)?;
        if cand.aunbc > best.aunbc {
            best = cand;
        }
    }
    Ok(best)
}

/// Scores whose (AUROC, AUNBC) pair lies on the upper envelope at AUROC `g`.
///
/// The first `round(N·a_K)` positives score 1 and the rest `p_{K−1}`. The
/// first `round(N·b_1)` negatives score `p_K` and the rest 0.
pub fn synth_boundary(labels: &[u8], g: f64, grid: &ThresholdGrid) -> Result<PredictionVector> {
    let (pos, _) = check_labels(labels)?;
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::Domain(format!("target AUROC {g} outside [0, 1]")));
    }
    let n = labels.len() as f64;
    let plan = boundary_plan(g, pos as f64 / n, grid)?;
    let top_pos = (n * plan.a_k.max(0.0)).round() as usize;
    let mid_neg = (n * plan.b1).round() as usize;
    let (mut seen_pos, mut seen_neg) = (0usize, 0usize);
    let scores = labels
        .iter()
        .map(|&y| {
            if y == 1 {
                seen_pos += 1;
                if seen_pos <= top_pos {
                    1.0
                } else {
                    grid.p(plan.k - 1)
                }
            } else {
                seen_neg += 1;
                if seen_neg <= mid_neg {
                    grid.p(plan.k)
                } else {
                    0.0
                }
            }
        })
        .collect();
    PredictionVector::new(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{aunbc_bounds, EnvelopeQuery};
    use crate::metrics::{aunbc, auroc_binned, confusion_at_thresholds};

    #[test]
    fn correlation_hits_target() {
        let labels = [1, 0, 1, 0, 1, 0, 1, 0];
        let mut rng = RngStream::new(7);
        let s = synth_correlated(&labels, 0.5, &mut rng).unwrap();
        let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
        assert!((pearson(s.as_slice(), &y) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn perfect_correlation_is_label_image() {
        let labels = [1, 0, 0, 1, 0];
        let s = synth_correlated(&labels, 1.0, &mut RngStream::new(1)).unwrap();
        for (&v, &y) in s.as_slice().iter().zip(&labels) {
            assert!((v - f64::from(y)).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_vector() {
        let labels = [1, 0, 0, 1, 0, 1];
        let a = synth_correlated(&labels, 0.3, &mut RngStream::new(99)).unwrap();
        let b = synth_correlated(&labels, 0.3, &mut RngStream::new(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_tiny_or_single_class() {
        assert!(synth_correlated(&[1, 0], 0.1, &mut RngStream::new(0)).is_err());
        assert!(synth_correlated(&[1, 1, 1], 0.1, &mut RngStream::new(0)).is_err());
        assert!(synth_boundary(&[0, 0], 0.7, &ThresholdGrid::uniform(10).unwrap()).is_err());
    }

    #[test]
    fn boundary_is_on_envelope() {
        let grid = ThresholdGrid::uniform(10).unwrap();
        let labels: Vec<u8> = (0..200).map(|i| u8::from(i % 3 == 0)).collect();
        let n = labels.len() as f64;
        for g in [0.5, 0.75, 0.9, 1.0] {
            let s = synth_boundary(&labels, g, &grid).unwrap();
            let curve = confusion_at_thresholds(&s, &labels, &grid).unwrap();
            let x = auroc_binned(&curve).unwrap();
            let y = aunbc(&curve, &grid).unwrap();
            let a0 = curve.n_pos() as f64 / n;
            let (_, upper) = aunbc_bounds(x, &EnvelopeQuery::new(a0, grid.clone()).unwrap()).unwrap();
            assert!((y - upper).abs() <= 2.0 / n, "g={g}: {y} vs {upper}");
        }
    }

    #[test]
    fn perfect_target_scores_positives_at_one() {
        let grid = ThresholdGrid::uniform(10).unwrap();
        let labels = [1, 0, 0, 1, 0, 0];
        let s = synth_boundary(&labels, 1.0, &grid).unwrap();
        let curve = confusion_at_thresholds(&s, &labels, &grid).unwrap();
        assert_eq!(auroc_binned(&curve).unwrap(), 1.0);
        assert!((aunbc(&curve, &grid).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
}

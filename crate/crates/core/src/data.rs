//! Domain types shared by every module.
//!
//! All types here validate on construction and are immutable afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ ω_i = 1` for threshold weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset {
    features: Vec<f64>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    n: usize,
    p: usize,
    n_pos: usize,
}

impl BinaryDataset {
    /// Validates a row-major feature matrix and its labels.
    pub fn new(features: Vec<Vec<f64>>, labels: &[i64], feature_names: Vec<String>) -> Result<Self> {
        let n = features.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let p = features[0].len();
        if p == 0 {
            return Err(Error::NoFeatures);
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                what: "label count vs. row count",
                expected: n,
                found: labels.len(),
            });
        }
        if feature_names.len() != p {
            return Err(Error::DimensionMismatch {
                what: "feature name count vs. column count",
                expected: p,
                found: feature_names.len(),
            });
        }
        let mut flat = Vec::with_capacity(n * p);
        for (row, values) in features.iter().enumerate() {
            if values.len() != p {
                return Err(Error::DimensionMismatch {
                    what: "row length",
                    expected: p,
                    found: values.len(),
                });
            }
            for (col, &v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteFeature { row, col });
                }
            }
            flat.extend_from_slice(values);
        }
        let mut binary = Vec::with_capacity(n);
        for (row, &y) in labels.iter().enumerate() {
            match y {
                0 => binary.push(0u8),
                1 => binary.push(1u8),
                _ => return Err(Error::NonBinaryLabel { row }),
            }
        }
        let n_pos = binary.iter().filter(|&&y| y == 1).count();
        Ok(Self {
            features: flat,
            labels: binary,
            feature_names,
            n,
            p,
            n_pos,
        })
    }

    /// Convenience constructor that names features `x1..xP`.
    pub fn unnamed(features: Vec<Vec<f64>>, labels: &[i64]) -> Result<Self> {
        let p = features.first().map_or(0, Vec::len);
        let names = (1..=p).map(|k| format!("x{k}")).collect();
        Self::new(features, labels, names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n - self.n_pos
    }

    /// Fraction of positive samples, `a_0 = N⁺/N`.
    pub fn prevalence(&self) -> f64 {
        self.n_pos as f64 / self.n as f64
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.features[j * self.p..(j + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.p)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Linear scores `x_j · λ` for every sample.
    pub fn scores(&self, coefficients: &[f64]) -> Vec<f64> {
        self.rows()
            .map(|row| row.iter().zip(coefficients).map(|(x, c)| x * c).sum())
            .collect()
    }

    /// Linear scores for integer coefficients.
    pub fn integer_scores(&self, coefficients: &[i64]) -> Vec<f64> {
        self.rows()
            .map(|row| {
                row.iter()
                    .zip(coefficients)
                    .map(|(x, &c)| x * c as f64)
                    .sum()
            })
            .collect()
    }

    /// Largest row ℓ1 norm, `‖X‖_∞ = max_j ‖x_j‖_1`.
    pub fn max_row_l1(&self) -> f64 {
        self.rows()
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// True when every feature value is an integer.
    pub fn is_integer_valued(&self) -> bool {
        self.features.iter().all(|x| x.fract() == 0.0)
    }

    /// Sub-dataset made of the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let rows = indices.iter().map(|&j| self.row(j).to_vec()).collect();
        let labels: Vec<i64> = indices.iter().map(|&j| i64::from(self.labels[j])).collect();
        Self::new(rows, &labels, self.feature_names.clone())
    }
}

/// Ordered decision thresholds `p_1 < … < p_M` with weights `ω_0..ω_M`.
///
/// The sentinels `p_0 = 0` and `p_{M+1} = 1` are implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDocument", into = "GridDocument")]
pub struct ThresholdGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridDocument {
    thresholds: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<GridDocument> for ThresholdGrid {
    type Error = Error;

    fn try_from(doc: GridDocument) -> Result<Self> {
        ThresholdGrid::with_weights(doc.thresholds, doc.weights)
    }
}

impl From<ThresholdGrid> for GridDocument {
    fn from(grid: ThresholdGrid) -> Self {
        GridDocument {
            thresholds: grid.inner().to_vec(),
            weights: grid.weights,
        }
    }
}

impl ThresholdGrid {
    /// Grid with AUNBC weights `ω_i = p_{i+1} − p_i`.
    pub fn new(inner: Vec<f64>) -> Result<Self> {
        let points = Self::points_from(inner)?;
        let weights = points.windows(2).map(|w| w[1] - w[0]).collect();
        Self::checked(points, weights)
    }

    /// Grid with caller-supplied weights, which must be nonnegative and sum to one.
    pub fn with_weights(inner: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let points = Self::points_from(inner)?;
        Self::checked(points, weights)
    }

    /// `p_i = i/k` for `i = 1..k−1`, the evenly spaced grid.
    pub fn uniform(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidGrid("at least one interval is required".into()));
        }
        Self::new((1..k).map(|i| i as f64 / k as f64).collect())
    }

    fn points_from(inner: Vec<f64>) -> Result<Vec<f64>> {
        let mut points = Vec::with_capacity(inner.len() + 2);
        points.push(0.0);
        for (i, &p) in inner.iter().enumerate() {
            if !(p.is_finite() && p > 0.0 && p < 1.0) {
                return Err(Error::InvalidGrid(format!(
                    "threshold {} = {p} is not inside (0, 1)",
                    i + 1
                )));
            }
            if i > 0 && p <= inner[i - 1] {
                return Err(Error::InvalidGrid(format!(
                    "thresholds must be strictly increasing (p_{} = {} ≥ p_{} = {p})",
                    i,
                    inner[i - 1],
                    i + 1
                )));
            }
            points.push(p);
        }
        points.push(1.0);
        Ok(points)
    }

    fn checked(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let m = points.len() - 2;
        if weights.len() != m + 1 {
            return Err(Error::InvalidGrid(format!(
                "expected {} weights, found {}",
                m + 1,
                weights.len()
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::InvalidGrid(format!("weight ω_{i} = {w} is negative or not finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidGrid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights })
    }

    /// Number of inner thresholds `M`.
    pub fn m(&self) -> usize {
        self.points.len() - 2
    }

    /// `p_i` for `i = 0..=M+1`.
    pub fn p(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// All points `p_0..p_{M+1}`, sentinels included.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Inner thresholds `p_1..p_M`.
    pub fn inner(&self) -> &[f64] {
        &self.points[1..self.points.len() - 1]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `p_{i+1} − p_i`, the AUNBC weight of threshold `i`.
    pub fn spacing(&self, i: usize) -> f64 {
        self.points[i + 1] - self.points[i]
    }

    /// Exchange rate `p_i/(1 − p_i)` for `i = 0..=M`.
    pub fn odds(&self, i: usize) -> f64 {
        let p = self.points[i];
        p / (1.0 - p)
    }

    /// Bin index of a score in `[0, 1]`: bins are `[p_i, p_{i+1})`, the
    /// top bin is closed at 1.
    pub fn bin_of(&self, score: f64) -> usize {
        // number of inner thresholds ≤ score
        self.inner().partition_point(|&p| p <= score)
    }
}

/// `TP_i`/`FP_i` counts at every grid point, `i = 0..=M+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCurve {
    tp: Vec<u64>,
    fp: Vec<u64>,
    n_pos: u64,
    n_neg: u64,
}

impl ConfusionCurve {
    /// Builds a curve from raw counts, checking the sentinel and
    /// monotonicity invariants.
    pub fn from_counts(tp: Vec<u64>, fp: Vec<u64>) -> Result<Self> {
        if tp.len() != fp.len() || tp.len() < 2 {
            return Err(Error::DimensionMismatch {
                what: "TP/FP vector length",
                expected: tp.len().max(2),
                found: fp.len(),
            });
        }
        let last = tp.len() - 1;
        if tp[last] != 0 || fp[last] != 0 {
            return Err(Error::Domain("TP and FP must vanish at p_{M+1} = 1".into()));
        }
        let monotone = |v: &[u64]| v.windows(2).all(|w| w[0] >= w[1]);
        if !monotone(&tp) || !monotone(&fp) {
            return Err(Error::Domain("TP and FP must be nonincreasing".into()));
        }
        if tp[0] + fp[0] == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            n_pos: tp[0],
            n_neg: fp[0],
            tp,
            fp,
        })
    }

    pub fn tp(&self) -> &[u64] {
        &self.tp
    }

    pub fn fp(&self) -> &[u64] {
        &self.fp
    }

    pub fn n_pos(&self) -> u64 {
        self.n_pos
    }

    pub fn n_neg(&self) -> u64 {
        self.n_neg
    }

    pub fn n(&self) -> u64 {
        self.n_pos + self.n_neg
    }

    /// Number of grid points including both sentinels, `M + 2`.
    pub fn len(&self) -> usize {
        self.tp.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub(crate) fn check_grid(&self, grid: &ThresholdGrid) -> Result<()> {
        if self.len() != grid.m() + 2 {
            return Err(Error::DimensionMismatch {
                what: "curve length vs. grid size M+2",
                expected: grid.m() + 2,
                found: self.len(),
            });
        }
        Ok(())
    }
}

/// Per-sample risk scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionVector(Vec<f64>);

impl PredictionVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = scores
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && (0.0..=1.0).contains(*s)))
        {
            return Err(Error::PredictionOutOfRange { index, value });
        }
        Ok(Self(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Training configuration: sparsity penalty, coefficient box and annealing
/// schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub c0: f64,
    pub lambda_bounds: Vec<(i64, i64)>,
    pub t_max: i64,
    pub sa_initial_temp: f64,
    pub sa_cooling_rate: f64,
    pub sa_min_temp: f64,
    pub sa_iters_per_temp: usize,
    pub seed: u64,
    pub restarts: usize,
    pub enumeration_cap: u64,
}

impl SolverConfig {
    /// Defaults for `p` features: `C0 = 1e-3`, coefficients in `{−10..10}`,
    /// `t⁰ = 1e-3`, `α = 1e-6`, `t^min = 0`, `L = 10`.
    pub fn new(p: usize) -> Self {
        Self {
            c0: 1e-3,
            lambda_bounds: vec![(-10, 10); p],
            t_max: 100,
            sa_initial_temp: 1e-3,
            sa_cooling_rate: 1e-6,
            sa_min_temp: 0.0,
            sa_iters_per_temp: 10,
            seed: 0,
            restarts: 1,
            enumeration_cap: 1_000_000,
        }
    }

    /// Same box `[lo, hi]` on every coefficient.
    pub fn with_bounds(mut self, lo: i64, hi: i64) -> Self {
        let p = self.lambda_bounds.len();
        self.lambda_bounds = vec![(lo, hi); p];
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.lambda_bounds.len() != p {
            return bad(format!(
                "{} coefficient bounds given for {p} features",
                self.lambda_bounds.len()
            ));
        }
        if let Some((k, (lo, hi))) = self
            .lambda_bounds
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| lo > hi)
        {
            return bad(format!("bound {k} has lo = {lo} > hi = {hi}"));
        }
        if !(self.c0.is_finite() && self.c0 >= 0.0) {
            return bad(format!("c0 = {} must be a nonnegative real", self.c0));
        }
        if self.t_max < 1 {
            return bad("t_max must be positive".into());
        }
        let temps = [self.sa_initial_temp, self.sa_cooling_rate, self.sa_min_temp];
        if temps.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("annealing temperatures and cooling rate must be nonnegative".into());
        }
        if self.sa_min_temp > self.sa_initial_temp {
            return bad("minimum temperature exceeds the initial temperature".into());
        }
        if self.sa_initial_temp > self.sa_min_temp && self.sa_cooling_rate == 0.0 {
            return bad("cooling rate must be positive".into());
        }
        if self.sa_iters_per_temp == 0 || self.restarts == 0 {
            return bad("iterations per temperature and restarts must be positive".into());
        }
        Ok(())
    }

    /// Number of temperature levels the linear cooling schedule visits.
    pub fn temperature_levels(&self) -> usize {
        let mut t = self.sa_initial_temp;
        let mut levels = 0;
        while t > self.sa_min_temp {
            levels += 1;
            t -= self.sa_cooling_rate;
        }
        levels
    }
}

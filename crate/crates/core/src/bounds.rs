//! Envelope relating discrimination (binned AUROC) and utility (AUNBC) on a
//! fixed threshold grid, and the finite-class generalization margin.
//!
//! With `a_0` the prevalence and `P_k = Σ_{i=1..k} (p_{i+1} − p_i)·p_i/(1 − p_i)`:
//!
//! * `a_0·p_1 − (1 − a_0)·P_M ≤ AUNBC ≤ max_k A_k(AUROC)`
//! * `AUROC ≥ max(min_k B_k(AUNBC), 0)`, with `B_k` the inverse of `A_k`.

use crate::data::ThresholdGrid;
use crate::error::{Error, Result};

/// Number of AUROC sample points in an emitted envelope curve.
pub const ENVELOPE_POINTS: usize = 1001;

/// Prevalence and grid for envelope evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeQuery {
    a0: f64,
    grid: ThresholdGrid,
}

impl EnvelopeQuery {
    pub fn new(a0: f64, grid: ThresholdGrid) -> Result<Self> {
        if !(a0 > 0.0 && a0 < 1.0) {
            return Err(Error::Domain(format!("prevalence {a0} must lie in (0, 1)")));
        }
        if grid.m() == 0 {
            return Err(Error::InvalidGrid("the envelope needs at least one inner threshold".into()));
        }
        Ok(Self { a0, grid })
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn grid(&self) -> &ThresholdGrid {
        &self.grid
    }

    /// Constant lower bound on AUNBC, `a_0·p_1 − (1 − a_0)·P_M`.
    pub fn aunbc_floor(&self) -> f64 {
        let m = self.grid.m();
        self.a0 * self.grid.p(1) - (1.0 - self.a0) * p_cumulative(&self.grid, m).unwrap_or(0.0)
    }
}

fn check_k(grid: &ThresholdGrid, k: usize) -> Result<()> {
    if k == 0 || k > grid.m() {
        return Err(Error::IndexOutOfRange { index: k, max: grid.m() });
    }
    Ok(())
}

/// `P_k = Σ_{i=1..k} (p_{i+1} − p_i)·p_i/(1 − p_i)` for `1 ≤ k ≤ M`.
pub fn p_cumulative(grid: &ThresholdGrid, k: usize) -> Result<f64> {
    check_k(grid, k)?;
    Ok((1..=k).map(|i| grid.spacing(i) * grid.odds(i)).sum())
}

/// `A_k(x; a_0)`, the largest AUNBC reachable at AUROC `x` when the false
/// positives are concentrated at threshold `k`.
pub fn a_k(x: f64, a0: f64, grid: &ThresholdGrid, k: usize) -> Result<f64> {
    let pk = p_cumulative(grid, k)?;
    let p = grid.p(k);
    let gap = (1.0 - x).max(0.0);
    if x <= 1.0 - (1.0 - a0) * pk / ((1.0 - p) * a0) {
        Ok(-a0 * (1.0 - p) * gap + a0 - (1.0 - a0) * pk)
    } else {
        Ok(a0 - 2.0 * (pk * (1.0 - p) * a0 * (1.0 - a0) * gap).sqrt())
    }
}

/// Lower and upper AUNBC bounds at a given AUROC.
pub fn aunbc_bounds(auroc: f64, query: &EnvelopeQuery) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&auroc) {
        return Err(Error::Domain(format!("AUROC {auroc} outside [0, 1]")));
    }
    let grid = &query.grid;
    let mut upper = f64::NEG_INFINITY;
    for k in 1..=grid.m() {
        upper = upper.max(a_k(auroc, query.a0, grid, k)?);
    }
    Ok((query.aunbc_floor(), upper))
}

/// `B_k(y; a_0)`, the inverse of `A_k`. Values below the envelope floor
/// are extrapolated along the linear branch; only `y > a_0` is rejected.
pub fn b_k(y: f64, a0: f64, grid: &ThresholdGrid, k: usize) -> Result<f64> {
    check_k(grid, k)?;
    if !(y <= a0 + 1e-12) {
        return Err(Error::Domain(format!("AUNBC {y} exceeds the prevalence {a0}")));
    }
    let pk = p_cumulative(grid, k)?;
    let p = grid.p(k);
    if y <= a0 - 2.0 * (1.0 - a0) * pk {
        Ok(1.0 - (a0 - y - (1.0 - a0) * pk) / (a0 * (1.0 - p)))
    } else {
        let d = a0 - y;
        Ok(1.0 - d * d / (4.0 * pk * (1.0 - p) * a0 * (1.0 - a0)))
    }
}

/// Smallest AUROC compatible with an observed AUNBC.
pub fn auroc_lower(aunbc: f64, query: &EnvelopeQuery) -> Result<f64> {
    let floor = query.aunbc_floor();
    if !(aunbc >= floor - 1e-12 && aunbc <= query.a0 + 1e-12) {
        return Err(Error::Domain(format!("AUNBC {aunbc} outside [{floor}, {}]", query.a0)));
    }
    let mut lowest = f64::INFINITY;
    for k in 1..=query.grid.m() {
        lowest = lowest.min(b_k(aunbc, query.a0, &query.grid, k)?);
    }
    Ok(lowest.max(0.0))
}

/// One row of an envelope curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePoint {
    pub auroc: f64,
    pub aunbc_upper: f64,
    pub aunbc_lower: f64,
}

/// The envelope sampled at `ENVELOPE_POINTS` evenly spaced AUROC values.
pub fn envelope_curve(query: &EnvelopeQuery) -> Result<Vec<EnvelopePoint>> {
    (0..ENVELOPE_POINTS)
        .map(|i| {
            let auroc = i as f64 / (ENVELOPE_POINTS - 1) as f64;
            let (lower, upper) = aunbc_bounds(auroc, query)?;
            Ok(EnvelopePoint {
                auroc,
                aunbc_upper: upper,
                aunbc_lower: lower,
            })
        })
        .collect()
}

/// Gap between expected and empirical weighted negative net benefit that
/// holds with high probability over a finite coefficient/intercept class:
/// `Σ_i ω_i/(1 − p_i) · √((ln|L| + ln|T| − ln δ)/(2n))`.
pub fn generalization_margin(size_l: u64, size_t: u64, delta: f64, n: u64, grid: &ThresholdGrid) -> Result<f64> {
    if size_l == 0 || size_t == 0 || n == 0 {
        return Err(Error::Domain("class sizes and n must be positive".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1]")));
    }
    let complexity = (size_l as f64).ln() + (size_t as f64).ln() - delta.ln();
    let root = (complexity / (2.0 * n as f64)).sqrt();
    let scale: f64 = (0..=grid.m())
        .map(|i| grid.weights()[i] / (1.0 - grid.p(i)))
        .sum();
    Ok(scale * root)
}

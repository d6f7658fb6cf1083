//! Exhaustive search over the coefficient box.

use super::intercepts::{fit_from_table, CandidateTable};
use super::{num_nonzero, train_result, TrainResult};
use crate::data::{BinaryDataset, SolverConfig, ThresholdGrid};
use crate::error::{Error, Result};

/// Evaluates every coefficient vector in the box in lexicographic order and
/// keeps the first minimizer.
pub fn exact_enumerate(data: &BinaryDataset, grid: &ThresholdGrid, config: &SolverConfig) -> Result<TrainResult> {
    config.validate(data.p())?;
    let bounds = &config.lambda_bounds;
    let size = bounds
        .iter()
        .try_fold(1u128, |acc, &(lo, hi)| acc.checked_mul((hi - lo) as u128 + 1))
        .unwrap_or(u128::MAX);
    if size > u128::from(config.enumeration_cap) {
        return Err(Error::EnumerationCap {
            size,
            cap: u128::from(config.enumeration_cap),
        });
    }
    let mut lambda: Vec<i64> = bounds.iter().map(|b| b.0).collect();
    let mut best: Option<(Vec<i64>, Vec<i64>, f64)> = None;
    let mut evaluations = 0u64;
    loop {
        let scores = data.integer_scores(&lambda);
        let table = CandidateTable::new(&scores, data.labels())?;
        let fit = fit_from_table(&table, grid, config.c0, num_nonzero(&lambda));
        evaluations += 1;
        if best.as_ref().is_none_or(|b| fit.loss < b.2) {
            best = Some((lambda.clone(), fit.intercepts, fit.loss));
        }
        // odometer step, last coordinate fastest
        let mut k = lambda.len();
        loop {
            if k == 0 {
                let (coefficients, intercepts, loss) = best.expect("box is nonempty");
                return train_result(data, grid, config, coefficients, intercepts, vec![loss], evaluations);
            }
            k -= 1;
            if lambda[k] < bounds[k].1 {
                lambda[k] += 1;
                break;
            }
            lambda[k] = bounds[k].0;
        }
    }
}

//! Simulated annealing over integer coefficient vectors.

use rayon::prelude::*;

use super::intercepts::{fit_from_table, CandidateTable};
use super::{num_nonzero, train_result, TrainResult};
use crate::data::{BinaryDataset, SolverConfig, ThresholdGrid};
use crate::error::{Error, Result};
use crate::synthetic::RngStream;

/// Seed of restart `chain`, derived from the configured seed by SplitMix64.
pub fn chain_seed(seed: u64, chain: usize) -> u64 {
    let mut z = seed.wrapping_add((chain as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Chain {
    lambda: Vec<i64>,
    intercepts: Vec<i64>,
    loss: f64,
    trace: Vec<f64>,
    evaluations: u64,
}

struct Problem<'a> {
    data: &'a BinaryDataset,
    grid: &'a ThresholdGrid,
    config: &'a SolverConfig,
}

impl Problem<'_> {
    fn evaluate(&self, lambda: &[i64]) -> Result<(Vec<i64>, f64)> {
        let scores = self.data.integer_scores(lambda);
        let table = CandidateTable::new(&scores, self.data.labels())?;
        let fit = fit_from_table(&table, self.grid, self.config.c0, num_nonzero(lambda));
        Ok((fit.intercepts, fit.loss))
    }

    fn run_chain(&self, start: &[i64], movable: &[usize], seed: u64) -> Result<Chain> {
        let config = self.config;
        let mut rng = RngStream::new(seed);
        let mut lambda = start.to_vec();
        let (intercepts, mut loss) = self.evaluate(&lambda)?;
        let mut best = (lambda.clone(), intercepts, loss);
        let mut trace = Vec::new();
        let mut evaluations = 1u64;

        let mut t = config.sa_initial_temp;
        while t > config.sa_min_temp {
            for _ in 0..config.sa_iters_per_temp {
                let k = movable[rng.index(movable.len())];
                let (lo, hi) = config.lambda_bounds[k];
                let span = (hi - lo) as usize;
                let mut value = lo + rng.index(span) as i64;
                if value >= lambda[k] {
                    value += 1;
                }
                let mut candidate = lambda.clone();
                candidate[k] = value;
                let (new_intercepts, new_loss) = self.evaluate(&candidate)?;
                evaluations += 1;
                if new_loss < loss {
                    if new_loss < best.2 {
                        best = (candidate.clone(), new_intercepts, new_loss);
                    }
                    lambda = candidate;
                    loss = new_loss;
                } else if rng.uniform() < ((loss - new_loss) / t).exp() {
                    lambda = candidate;
                    loss = new_loss;
                }
            }
            trace.push(best.2);
            t -= config.sa_cooling_rate;
        }
        Ok(Chain {
            lambda: best.0,
            intercepts: best.1,
            loss: best.2,
            trace,
            evaluations,
        })
    }
}

fn better(a: &Chain, b: &Chain) -> bool {
    a.loss < b.loss || (a.loss == b.loss && a.lambda < b.lambda)
}

/// Anneals the coefficients with linear cooling, re-fitting the intercepts
/// after every move. Independent restarts run in parallel; the best chain
/// wins with ties going to the lexicographically smallest coefficients.
///
/// Without `initial`, each chain starts from zero clamped into the bounds.
pub fn sa_train(
    data: &BinaryDataset,
    grid: &ThresholdGrid,
    config: &SolverConfig,
    initial: Option<&[i64]>,
) -> Result<TrainResult> {
    config.validate(data.p())?;
    let start: Vec<i64> = match initial {
        Some(v) => {
            if v.len() != data.p() {
                return Err(Error::DimensionMismatch {
                    what: "initial coefficients",
                    expected: data.p(),
                    found: v.len(),
                });
            }
            for (k, (&l, &(lo, hi))) in v.iter().zip(&config.lambda_bounds).enumerate() {
                if l < lo || l > hi {
                    return Err(Error::InvalidConfig(format!(
                        "initial coefficient {k} = {l} outside [{lo}, {hi}]"
                    )));
                }
            }
            v.to_vec()
        }
        None => config.lambda_bounds.iter().map(|&(lo, hi)| 0i64.clamp(lo, hi)).collect(),
    };
    let movable: Vec<usize> = (0..data.p())
        .filter(|&k| config.lambda_bounds[k].1 > config.lambda_bounds[k].0)
        .collect();
    if movable.is_empty() {
        return Err(Error::NoMoves);
    }
    let problem = Problem { data, grid, config };
    let chains: Vec<Chain> = (0..config.restarts)
        .into_par_iter()
        .map(|c| problem.run_chain(&start, &movable, chain_seed(config.seed, c)))
        .collect::<Result<_>>()?;
    let evaluations = chains.iter().map(|c| c.evaluations).sum();
    let best = chains
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("at least one restart");
    log::debug!("annealing finished with loss {} after {evaluations} evaluations", best.loss);
    train_result(data, grid, config, best.lambda, best.intercepts, best.trace, evaluations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (BinaryDataset, ThresholdGrid) {
        let data = BinaryDataset::unnamed(vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]], &[0, 0, 1, 1]).unwrap();
        (data, ThresholdGrid::new(vec![0.5]).unwrap())
    }

    #[test]
    fn tiny_instance_reaches_optimum() {
        let (data, grid) = tiny();
        let config = SolverConfig::new(1).with_bounds(-1, 1);
        let result = sa_train(&data, &grid, &config, None).unwrap();
        assert_eq!(result.model.coefficients(), &[1]);
        assert!((result.loss - (-0.499)).abs() < 1e-12);
        assert_eq!(result.trace.len(), config.temperature_levels());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (data, grid) = tiny();
        let mut config = SolverConfig::new(1).with_bounds(-3, 3);
        config.restarts = 4;
        config.seed = 11;
        let a = sa_train(&data, &grid, &config, None).unwrap();
        let b = sa_train(&data, &grid, &config, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_moves_is_an_error() {
        let (data, grid) = tiny();
        let config = SolverConfig::new(1).with_bounds(2, 2);
        assert!(matches!(sa_train(&data, &grid, &config, None), Err(Error::NoMoves)));
    }

    #[test]
    fn initial_must_be_in_bounds() {
        let (data, grid) = tiny();
        let config = SolverConfig::new(1).with_bounds(-1, 1);
        assert!(sa_train(&data, &grid, &config, Some(&[5])).is_err());
    }

    #[test]
    fn chain_seeds_differ() {
        assert_ne!(chain_seed(0, 0), chain_seed(0, 1));
        assert_eq!(chain_seed(3, 2), chain_seed(3, 2));
    }
}

//! Repeated k-fold cross-validation of the annealing trainer.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BinaryDataset, SolverConfig, ThresholdGrid};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricReport};
use crate::solver::{chain_seed, sa_train};
use crate::synthetic::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl CvPlan {
    pub fn new(folds: usize, repeats: usize, seed: u64) -> Self {
        CvPlan {
            folds,
            repeats,
            seed,
            stratified: true,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.folds < 2 || self.repeats < 1 {
            return Err(Error::InvalidConfig("need at least 2 folds and 1 repeat".into()));
        }
        if self.folds > n {
            return Err(Error::InvalidConfig(format!("{} folds for {n} samples", self.folds)));
        }
        Ok(())
    }
}

/// Fold index of every sample for one repeat. Stratified plans deal each
/// shuffled class round-robin, continuing the rotation from one class to
/// the next so fold sizes differ by at most one.
pub fn fold_assignment(labels: &[u8], plan: &CvPlan, repeat: usize) -> Vec<usize> {
    let mut rng = RngStream::new(chain_seed(plan.seed, repeat));
    let mut folds = vec![0usize; labels.len()];
    let groups: Vec<Vec<usize>> = if plan.stratified {
        vec![
            (0..labels.len()).filter(|&j| labels[j] == 1).collect(),
            (0..labels.len()).filter(|&j| labels[j] == 0).collect(),
        ]
    } else {
        vec![(0..labels.len()).collect()]
    };
    let mut next = 0usize;
    for mut group in groups {
        group.shuffle(rng.rng_mut());
        for j in group {
            folds[j] = next % plan.folds;
            next += 1;
        }
    }
    folds
}

/// Discrimination, utility and calibration of one model on one sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub auroc: f64,
    pub aunbc: f64,
    pub ece: f64,
}

impl From<&MetricReport> for SplitMetrics {
    fn from(r: &MetricReport) -> Self {
        SplitMetrics {
            auroc: r.auroc.unwrap_or(f64::NAN),
            aunbc: r.aunbc,
            ece: r.ece,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub train: SplitMetrics,
    pub test: SplitMetrics,
    pub model_size: usize,
    pub coefficients: Vec<i64>,
    pub intercepts: Vec<i64>,
    pub risk_levels: Vec<f64>,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (divisor `k − 1`); 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)).sqrt()
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub auroc: MeanStd,
    pub aunbc: MeanStd,
    pub ece: MeanStd,
}

impl SplitSummary {
    fn of<'a>(items: impl Iterator<Item = &'a SplitMetrics> + Clone) -> Self {
        let pick = |f: fn(&SplitMetrics) -> f64| MeanStd::of(&items.clone().map(f).collect::<Vec<_>>());
        SplitSummary {
            auroc: pick(|m| m.auroc),
            aunbc: pick(|m| m.aunbc),
            ece: pick(|m| m.ece),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub plan: CvPlan,
    pub config: SolverConfig,
    pub folds: Vec<FoldResult>,
    pub train: SplitSummary,
    pub test: SplitSummary,
    pub model_size: MeanStd,
    /// Out-of-fold predicted risk per repeat, in sample order.
    pub oof_predictions: Vec<Vec<f64>>,
}

fn run_fold(
    data: &BinaryDataset,
    grid: &ThresholdGrid,
    config: &SolverConfig,
    assignment: &[usize],
    repeat: usize,
    fold: usize,
) -> Result<(FoldResult, Vec<(usize, f64)>)> {
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..data.n()).partition(|&j| assignment[j] == fold);
    let single = |idx: &[usize]| {
        let pos = idx.iter().filter(|&&j| data.labels()[j] == 1).count();
        pos == 0 || pos == idx.len()
    };
    if single(&train_idx) || single(&test_idx) {
        return Err(Error::SingleClassFold { repeat, fold });
    }
    let train = data.subset(&train_idx)?;
    let test = data.subset(&test_idx)?;
    let result = sa_train(&train, grid, config, None)?;
    let model = &result.model;
    let nnz = model.num_nonzero();
    let train_preds = model.predict_dataset(&train)?;
    let test_preds = model.predict_dataset(&test)?;
    let levels = Some(model.risk_levels());
    let train_report = evaluate(&train_preds, train.labels(), grid, levels, nnz, config.c0)?;
    let test_report = evaluate(&test_preds, test.labels(), grid, levels, nnz, config.c0)?;
    let oof = test_idx.iter().copied().zip(test_preds.into_inner()).collect();
    Ok((
        FoldResult {
            repeat,
            fold,
            train: (&train_report).into(),
            test: (&test_report).into(),
            model_size: nnz,
            coefficients: model.coefficients().to_vec(),
            intercepts: model.intercepts().to_vec(),
            risk_levels: model.risk_levels().to_vec(),
            clamped: !result.risk.clamped.is_empty(),
        },
        oof,
    ))
}

/// Trains on each fold's complement and evaluates on both sides. Folds run
/// in parallel; results are ordered by `(repeat, fold)`.
pub fn run_cv(data: &BinaryDataset, grid: &ThresholdGrid, config: &SolverConfig, plan: &CvPlan) -> Result<CvReport> {
    plan.validate(data.n())?;
    config.validate(data.p())?;
    let assignments: Vec<Vec<usize>> = (0..plan.repeats)
        .map(|r| fold_assignment(data.labels(), plan, r))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..plan.repeats)
        .flat_map(|r| (0..plan.folds).map(move |f| (r, f)))
        .collect();
    let outcomes: Vec<(FoldResult, Vec<(usize, f64)>)> = jobs
        .par_iter()
        .map(|&(r, f)| run_fold(data, grid, config, &assignments[r], r, f))
        .collect::<Result<_>>()?;

    let mut oof_predictions = vec![vec![0.0; data.n()]; plan.repeats];
    let mut folds = Vec::with_capacity(outcomes.len());
    for (fold, oof) in outcomes {
        for (j, risk) in oof {
            oof_predictions[fold.repeat][j] = risk;
        }
        folds.push(fold);
    }
    let sizes: Vec<f64> = folds.iter().map(|f| f.model_size as f64).collect();
    Ok(CvReport {
        plan: plan.clone(),
        config: config.clone(),
        train: SplitSummary::of(folds.iter().map(|f| &f.train)),
        test: SplitSummary::of(folds.iter().map(|f| &f.test)),
        model_size: MeanStd::of(&sizes),
        folds,
        oof_predictions,
    })
}

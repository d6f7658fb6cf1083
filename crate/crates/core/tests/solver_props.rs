use proptest::prelude::*;
use riskscore::cv::{fold_assignment, CvPlan};
use riskscore::metrics::{confusion_at_thresholds, weighted_objective};
use riskscore::solver::{exact_enumerate, sa_train};
use riskscore::{BinaryDataset, SolverConfig, ThresholdGrid};

fn dataset() -> impl Strategy<Value = BinaryDataset> {
    (6usize..30, 1usize..4)
        .prop_flat_map(|(n, p)| {
            (
                prop::collection::vec(prop::collection::vec(0u8..=2, p), n),
                prop::collection::vec(0i64..=1, n),
            )
        })
        .prop_map(|(x, mut y)| {
            y[0] = 1;
            y[1] = 0;
            let x = x.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
            BinaryDataset::unnamed(x, &y).unwrap()
        })
}

fn config(p: usize, seed: u64) -> SolverConfig {
    let mut c = SolverConfig::new(p).with_bounds(-2, 2);
    c.seed = seed;
    c.c0 = 1e-3;
    c.sa_cooling_rate = 2e-5;
    c.restarts = 2;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sa_is_deterministic(data in dataset(), seed in any::<u64>()) {
        let grid = ThresholdGrid::uniform(4).unwrap();
        let cfg = config(data.p(), seed);
        let a = sa_train(&data, &grid, &cfg, None).unwrap();
        let b = sa_train(&data, &grid, &cfg, None).unwrap();
        prop_assert_eq!(a.model, b.model);
        prop_assert_eq!(a.loss, b.loss);
        prop_assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn reported_loss_matches_predictions(data in dataset(), seed in any::<u64>()) {
        let grid = ThresholdGrid::new(vec![0.2, 0.5, 0.8]).unwrap();
        let cfg = config(data.p(), seed);
        for result in [sa_train(&data, &grid, &cfg, None).unwrap(), exact_enumerate(&data, &grid, &cfg).unwrap()] {
            let preds = result.model.predict_dataset(&data).unwrap();
            let curve = confusion_at_thresholds(&preds, data.labels(), &grid).unwrap();
            let recomputed = weighted_objective(&curve, &grid, result.model.num_nonzero(), cfg.c0).unwrap();
            prop_assert!((recomputed - result.loss).abs() < 1e-12, "{} vs {}", recomputed, result.loss);
        }
    }

    #[test]
    fn exact_never_loses_to_sa(data in dataset(), seed in any::<u64>()) {
        let grid = ThresholdGrid::uniform(4).unwrap();
        let cfg = config(data.p(), seed);
        let exact = exact_enumerate(&data, &grid, &cfg).unwrap();
        let sa = sa_train(&data, &grid, &cfg, None).unwrap();
        prop_assert!(exact.loss <= sa.loss + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn folds_partition_and_balance(
        labels in prop::collection::vec(0u8..=1, 10..200),
        folds in 2usize..8,
        seed in any::<u64>(),
        repeat in 0usize..3,
    ) {
        let plan = CvPlan::new(folds, 3, seed);
        let assignment = fold_assignment(&labels, &plan, repeat);
        prop_assert_eq!(assignment.len(), labels.len());
        prop_assert!(assignment.iter().all(|&f| f < folds));
        for class in 0..=1u8 {
            let mut counts = vec![0usize; folds];
            for (&f, &y) in assignment.iter().zip(&labels) {
                if y == class {
                    counts[f] += 1;
                }
            }
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "class {} counts {:?}", class, counts);
        }
        prop_assert_eq!(&assignment, &fold_assignment(&labels, &plan, repeat));
    }
}

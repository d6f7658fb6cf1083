#![allow(dead_code)]

use proptest::prelude::*;
use riskscore::{PredictionVector, ThresholdGrid};

/// Inner thresholds drawn from multiples of 1/20.
pub fn grid() -> impl Strategy<Value = ThresholdGrid> {
    prop::collection::btree_set(1u32..20, 1..6)
        .prop_map(|s| ThresholdGrid::new(s.into_iter().map(|k| f64::from(k) / 20.0).collect()).unwrap())
}

/// Score that lands exactly on a grid-friendly value a quarter of the time.
pub fn score() -> impl Strategy<Value = f64> {
    prop_oneof![
        3 => 0.0..=1.0f64,
        1 => (0u32..=20).prop_map(|k| f64::from(k) / 20.0),
    ]
}

/// Predictions and labels with both classes present.
pub fn labelled(max_n: usize) -> impl Strategy<Value = (PredictionVector, Vec<u8>)> {
    (2..max_n)
        .prop_flat_map(|n| (prop::collection::vec(score(), n), prop::collection::vec(0u8..=1, n)))
        .prop_map(|(s, mut y)| {
            y[0] = 1;
            y[1] = 0;
            (PredictionVector::new(s).unwrap(), y)
        })
}

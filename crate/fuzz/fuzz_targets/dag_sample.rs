#![no_main]

use bida::structlearn::DagSample;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // First line of a split pair is the DAG file, the rest the weights.
    let split = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    let (dags, weights) = data.split_at(split);
    let weights = weights.get(1..).filter(|w| !w.is_empty());
    if let Ok(s) = DagSample::read(dags, weights) {
        let total: f64 = s.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
});

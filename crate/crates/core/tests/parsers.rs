//! Replays the fuzz corpus through the parser entry points with the same
//! invariants as the fuzz targets, and throws random bytes at them.

use std::fs;
use std::path::PathBuf;

use bida::data::parse_cards_json;
use bida::harness::ExperimentConfig;
use bida::structlearn::DagSample;
use bida::{CptNetwork, Dag, Dataset, EffectTable, Pdag};
use proptest::prelude::*;

fn check_dag_json(data: &[u8]) {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(g) = Dag::from_json(s) {
        assert!(g.topological_order().is_some());
        assert_eq!(Dag::from_json(&g.to_json()).unwrap(), g);
    }
}

fn check_pdag_json(data: &[u8]) {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(mut g) = Pdag::from_json(s) {
        assert_eq!(Pdag::from_json(&g.to_json()).unwrap(), g);
        if g.n() <= 8 {
            g.apply_meek_rules();
            let _ = g.consistent_extensions(100);
        }
    }
}

fn check_network_json(data: &[u8]) {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(net) = CptNetwork::from_json(s) {
        let back = CptNetwork::from_json(&net.to_json()).unwrap();
        assert_eq!(back.cards(), net.cards());
        let _ = net.all_interventions(1 << 12);
        let _ = net.forward_sample(4, 0);
    }
}

fn check_dataset_csv(data: &[u8]) {
    if let Ok(d) = Dataset::from_csv(data, None) {
        let mut out = Vec::new();
        d.write_csv(&mut out).unwrap();
        let back = Dataset::from_csv(out.as_slice(), Some(d.cards())).unwrap();
        assert_eq!(back, d);
    }
}

fn check_cards_json(data: &[u8]) {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let _ = parse_cards_json(s);
}

fn check_experiment_config(data: &[u8]) {
    let Ok(s) = std::str::from_utf8(data) else { return };
    for c in [ExperimentConfig::from_json(s), ExperimentConfig::from_toml(s)].into_iter().flatten() {
        assert!(c.validate().is_ok());
    }
}

fn check_effect_table_csv(data: &[u8]) {
    if let Ok(t) = EffectTable::read_csv(data) {
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert!(EffectTable::read_csv(out.as_slice()).is_ok());
    }
}

fn check_dag_sample(data: &[u8]) {
    let split = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    let (dags, weights) = data.split_at(split);
    let weights = weights.get(1..).filter(|w| !w.is_empty());
    if let Ok(s) = DagSample::read(dags, weights) {
        let total: f64 = s.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

type Check = fn(&[u8]);

const TARGETS: [(&str, Check); 8] = [
    ("dag_json", check_dag_json),
    ("pdag_json", check_pdag_json),
    ("network_json", check_network_json),
    ("dataset_csv", check_dataset_csv),
    ("cards_json", check_cards_json),
    ("experiment_config", check_experiment_config),
    ("effect_table_csv", check_effect_table_csv),
    ("dag_sample", check_dag_sample),
];

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files.iter().map(|p| fs::read(p).unwrap()).collect()
}

#[test]
fn corpus_seeds_hold_invariants() {
    for (target, check) in TARGETS {
        let seeds = corpus(target);
        assert!(!seeds.is_empty(), "no seeds for {target}");
        for s in seeds {
            check(&s);
        }
    }
}

#[test]
fn corpus_seeds_parse_where_expected() {
    let s = |t: &str, k: usize| String::from_utf8(corpus(t)[k].clone()).unwrap();
    // Sorted file names: cycle, empty, toy.
    assert!(Dag::from_json(&s("dag_json", 0)).is_err());
    assert!(Dag::from_json(&s("dag_json", 2)).is_ok());
    // four_cycle, toy_cpdag.
    assert!(matches!(Pdag::from_json(&s("pdag_json", 0)).unwrap().consistent_extensions(10), Err(bida::Error::NotExtendable)));
    assert_eq!(Pdag::from_json(&s("pdag_json", 1)).unwrap().consistent_extensions(10).unwrap().len(), 2);
    assert!(CptNetwork::from_json(&s("network_json", 0)).is_ok());
    assert!(ExperimentConfig::from_toml(&s("experiment_config", 0)).is_ok());
    assert!(ExperimentConfig::from_json(&s("experiment_config", 1)).is_ok());
    assert!(EffectTable::read_csv(corpus("effect_table_csv")[0].as_slice()).is_ok());
    assert!(EffectTable::read_csv(corpus("effect_table_csv")[1].as_slice()).is_ok());
    let w = corpus("dag_sample")[1].clone();
    let split = w.iter().position(|&b| b == 0).unwrap();
    let sample = DagSample::read(&w[..split], Some(&w[split + 1..])).unwrap();
    assert_eq!(sample.weights(), &[0.25, 0.75]);
}

fn mutated() -> impl Strategy<Value = (usize, usize, Vec<u8>)> {
    (0..TARGETS.len(), any::<usize>(), prop::collection::vec(any::<u8>(), 0..8))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        for (_, check) in TARGETS {
            check(&bytes);
        }
    }

    #[test]
    fn mutated_seeds_never_panic((t, at, insert) in mutated()) {
        let (target, check) = TARGETS[t];
        for mut seed in corpus(target) {
            let pos = at % (seed.len() + 1);
            seed.splice(pos..pos, insert.iter().copied());
            check(&seed);
            seed.truncate(pos);
            check(&seed);
        }
    }
}

#![no_main]

use bida::Dag;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(g) = Dag::from_json(s) {
        assert!(g.topological_order().is_some());
        assert_eq!(Dag::from_json(&g.to_json()).unwrap(), g);
    }
});

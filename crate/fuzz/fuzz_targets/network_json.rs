#![no_main]

use bida::CptNetwork;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(net) = CptNetwork::from_json(s) {
        let back = CptNetwork::from_json(&net.to_json()).unwrap();
        assert_eq!(back.cards(), net.cards());
        // Small enough to enumerate without stalling the fuzzer.
        let _ = net.all_interventions(1 << 12);
        let _ = net.forward_sample(4, 0);
    }
});

#![no_main]

use bida::harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    for parsed in [ExperimentConfig::from_json(s), ExperimentConfig::from_toml(s)] {
        if let Ok(c) = parsed {
            assert!(c.validate().is_ok());
        }
    }
});

#![no_main]

use bida::EffectTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = EffectTable::read_csv(data) {
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert!(EffectTable::read_csv(out.as_slice()).is_ok());
    }
});

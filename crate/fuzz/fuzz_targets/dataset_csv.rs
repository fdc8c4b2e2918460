#![no_main]

use bida::Dataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = Dataset::from_csv(data, None) {
        let mut out = Vec::new();
        d.write_csv(&mut out).unwrap();
        let back = Dataset::from_csv(out.as_slice(), Some(d.cards())).unwrap();
        assert_eq!(back, d);
    }
});

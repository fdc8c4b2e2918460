#![no_main]

use bida::Pdag;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(mut g) = Pdag::from_json(s) {
        assert_eq!(Pdag::from_json(&g.to_json()).unwrap(), g);
        if g.n() <= 8 {
            g.apply_meek_rules();
            let _ = g.consistent_extensions(100);
        }
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use sqfn::io::parse_bellman_grid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_bellman_grid(text) {
        for r in rows {
            assert!(r.u > 0.0 && r.v > 0.0 && r.value >= 0.0 && r.value.is_finite());
        }
    }
});

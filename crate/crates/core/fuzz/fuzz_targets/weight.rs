#![no_main]

use libfuzzer_sys::fuzz_target;
use sqfn::io::{parse_weight, write_weight};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(w) = parse_weight(text) {
        assert!(w.q() >= 1.0 - 1e-12);
        let again = parse_weight(&write_weight(&w)).expect("written text parses");
        assert_eq!(again.w(), w.w());
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use sqfn::io::{parse_step_function, write_step_function};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_step_function(text) {
        let again = parse_step_function(&write_step_function(&f)).expect("written text parses");
        assert_eq!(again, f);
    }
});

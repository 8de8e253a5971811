#![no_main]

use libfuzzer_sys::fuzz_target;
use sqfn::io::{parse_sparse_family, write_sparse_family};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(family) = parse_sparse_family(text) {
        let written = write_sparse_family(&family).expect("parsed family writes");
        let again = parse_sparse_family(&written).expect("written text parses");
        assert_eq!(again, family);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use shfold::interval::hexfloat::{format_hex, parse_hex, parse_interval};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(iv) = parse_interval(s) {
        assert!(iv.lo() <= iv.hi());
        let back = parse_interval(&format!("{},{}", format_hex(iv.lo()), format_hex(iv.hi()))).unwrap();
        assert_eq!(back, iv);
    }
    if let Ok(v) = parse_hex(s) {
        assert_eq!(parse_hex(&format_hex(v)).unwrap().to_bits(), v.to_bits());
    }
});

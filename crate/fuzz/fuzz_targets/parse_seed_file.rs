#![no_main]

use libfuzzer_sys::fuzz_target;
use shfold::seeds::parse_seed_file;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_seed_file(s) {
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(parse_seed_file(&text).unwrap(), f);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use shfold::certificate::{parse_branch_certificate, parse_certificate, FoldBody, Kind};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_branch_certificate(s) {
        assert_eq!(parse_branch_certificate(&c.to_json()).unwrap(), c);
    }
    if let Ok(c) = parse_certificate::<FoldBody>(s, Kind::Fold) {
        assert_eq!(parse_certificate::<FoldBody>(&c.to_json(), Kind::Fold).unwrap(), c);
    }
});

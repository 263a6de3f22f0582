//! Replays the checked-in fuzz corpus through the parsers with the same
//! round-trip assertions as the fuzz targets.

use std::fs;
use std::path::PathBuf;

use shfold::certificate::{parse_branch_certificate, parse_certificate, CertificateError, FoldBody, Kind};
use shfold::interval::hexfloat::{format_hex, parse_hex, parse_interval};
use shfold::pipeline::parse_range;
use shfold::seeds::parse_seed_file;

fn corpus(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn interval_corpus() {
    for (name, s) in corpus("parse_interval_hex") {
        let r = parse_interval(&s);
        if let Ok(iv) = r {
            let back = parse_interval(&format!("{},{}", format_hex(iv.lo()), format_hex(iv.hi()))).unwrap();
            assert_eq!(back, iv);
        }
        if let Ok(v) = parse_hex(&s) {
            assert_eq!(parse_hex(&format_hex(v)).unwrap().to_bits(), v.to_bits());
        }
        let expect_ok = matches!(name.as_str(), "ordered" | "point");
        assert_eq!(r.is_ok(), expect_ok, "{name}");
    }
}

#[test]
fn range_corpus() {
    for (name, s) in corpus("parse_range_flag") {
        let r = parse_range(&s);
        assert_eq!(r.is_ok(), matches!(name.as_str(), "decimal" | "hex"), "{name}");
    }
}

#[test]
fn seed_corpus() {
    for (name, s) in corpus("parse_seed_file") {
        let r = parse_seed_file(&s);
        if let Ok(f) = &r {
            assert_eq!(&parse_seed_file(&serde_json::to_string(f).unwrap()).unwrap(), f);
        }
        assert_eq!(r.is_ok(), name == "builtin.json", "{name}");
    }
}

#[test]
fn certificate_corpus() {
    for (name, s) in corpus("parse_certificate_json") {
        let branch = parse_branch_certificate(&s);
        if let Ok(c) = &branch {
            assert_eq!(&parse_branch_certificate(&c.to_json()).unwrap(), c);
        }
        let fold = parse_certificate::<FoldBody>(&s, Kind::Fold);
        match name.as_str() {
            "branch.json" => assert!(branch.is_ok()),
            "fold.json" => assert!(fold.is_ok() && matches!(branch, Err(CertificateError::Syntax(_)))),
            "schema.json" => assert!(matches!(branch, Err(CertificateError::Schema(2)))),
            _ => assert!(branch.is_err() && fold.is_err(), "{name}"),
        }
    }
}

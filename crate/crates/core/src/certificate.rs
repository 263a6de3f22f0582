//! On-disk certificates.
//!
//! Every file carries a header naming the tool, the schema and the SHA-256
//! of the run configuration, followed by the configuration itself and the
//! body. Timing and thread counts never enter a certificate, so the bytes
//! depend only on the configuration.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::continuation::{validate_chain, CertifiedBranch, Concavity, Glue, Separation};
use crate::fold::{FoldCertificate, Theorem};
use crate::interval::Interval;
use crate::pipeline::{Comparison, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "shfold";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Branch,
    Step1,
    Step2,
    Fold,
    Theorem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub tool: String,
    pub tool_version: String,
    pub schema_version: u32,
    pub kind: Kind,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate<T> {
    pub header: Header,
    pub config: RunConfig,
    pub body: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchBody {
    pub name: String,
    pub branch: CertifiedBranch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step1Body {
    pub separation: Separation,
    pub comparisons: Vec<Comparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step2Body {
    pub switching_range: Interval,
    pub concavity: Concavity,
    pub glue: Glue,
    pub comparisons: Vec<Comparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldBody {
    pub fold: FoldCertificate,
    pub comparisons: Vec<Comparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremBody {
    pub theorem: Theorem,
    /// SHA-256 of each input certificate file, by file name.
    pub inputs: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CertificateError {
    #[error("malformed certificate: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("certificate from {0}, expected {TOOL}")]
    Tool(String),
    #[error("schema version {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("expected a {expected:?} certificate, found {found:?}")]
    Kind { expected: Kind, found: Kind },
    #[error("configuration hash {found} does not match {expected}")]
    ConfigHash { expected: String, found: String },
    #[error("certificate content is inconsistent: {0}")]
    Content(String),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(config: &RunConfig) -> String {
    sha256_hex(&serde_json::to_vec(config).expect("configuration serializes"))
}

impl<T: Serialize> Certificate<T> {
    pub fn new(kind: Kind, config: &RunConfig, body: T) -> Self {
        Certificate {
            header: Header {
                tool: TOOL.into(),
                tool_version: TOOL_VERSION.into(),
                schema_version: SCHEMA_VERSION,
                kind,
                config_hash: config_hash(config),
            },
            config: config.clone(),
            body,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }
}

/// Parses a certificate of the given kind and checks its header against
/// the embedded configuration.
pub fn parse_certificate<T: DeserializeOwned>(text: &str, kind: Kind) -> Result<Certificate<T>, CertificateError> {
    let c: Certificate<T> = serde_json::from_str(text)?;
    let h = &c.header;
    if h.tool != TOOL {
        return Err(CertificateError::Tool(h.tool.clone()));
    }
    if h.schema_version != SCHEMA_VERSION {
        return Err(CertificateError::Schema(h.schema_version));
    }
    if h.kind != kind {
        return Err(CertificateError::Kind { expected: kind, found: h.kind });
    }
    let expected = config_hash(&c.config);
    if h.config_hash != expected {
        return Err(CertificateError::ConfigHash { expected, found: h.config_hash.clone() });
    }
    Ok(c)
}

/// A branch certificate, with its chain re-validated.
pub fn parse_branch_certificate(text: &str) -> Result<Certificate<BranchBody>, CertificateError> {
    let c: Certificate<BranchBody> = parse_certificate(text, Kind::Branch)?;
    validate_chain(&c.body.branch).map_err(|e| CertificateError::Content(e.to_string()))?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::{certify_branch, ContinuationConfig, Orientation};
    use crate::interval::Interval;
    use crate::poincare::{FnG, GEvaluation};

    fn small_branch() -> CertifiedBranch {
        // G(ξ, x) = x − ξ
        let g = FnG(|xi: Interval, x: Interval, _| GEvaluation {
            value: x - xi,
            d_dx: Some(Interval::point(1.0)),
            d_dxi: Some(Interval::point(-1.0)),
            d2: None,
            extrema: vec![Interval::point(-1.5), Interval::point(1.3), Interval::point(0.2)],
            crossing_times: vec![],
        });
        let range = Interval::new(0.0, 1.0).unwrap();
        certify_branch(&g, range, 0.0, Orientation::ParamIsXi, &ContinuationConfig::default()).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let cfg = RunConfig::default();
        let c = Certificate::new(Kind::Branch, &cfg, BranchBody { name: "lower".into(), branch: small_branch() });
        let text = c.to_json();
        let back = parse_branch_certificate(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn header_is_checked() {
        let cfg = RunConfig::default();
        let c = Certificate::new(Kind::Branch, &cfg, BranchBody { name: "lower".into(), branch: small_branch() });
        let mut wrong = c.clone();
        wrong.config.fold_radius *= 2.0;
        assert!(matches!(parse_branch_certificate(&wrong.to_json()), Err(CertificateError::ConfigHash { .. })));
        let mut wrong = c.clone();
        wrong.header.schema_version += 1;
        assert!(matches!(parse_branch_certificate(&wrong.to_json()), Err(CertificateError::Schema(_))));
        let mut wrong = c.clone();
        wrong.header.kind = Kind::Fold;
        assert!(matches!(parse_branch_certificate(&wrong.to_json()), Err(CertificateError::Kind { .. })));
        let mut wrong = c.clone();
        wrong.header.tool = "other".into();
        assert!(matches!(parse_branch_certificate(&wrong.to_json()), Err(CertificateError::Tool(_))));
    }

    #[test]
    fn tampered_chain_is_rejected() {
        let cfg = RunConfig::default();
        let mut b = small_branch();
        let n = b.segments.len();
        b.segments[n / 2].solution_box = Interval::point(5.0);
        let c = Certificate::new(Kind::Branch, &cfg, BranchBody { name: "lower".into(), branch: b });
        assert!(matches!(parse_branch_certificate(&c.to_json()), Err(CertificateError::Content(_))));
    }

    #[test]
    fn hash_depends_on_every_field() {
        let a = RunConfig::default();
        let b = RunConfig::default().with_lower(1.9);
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_eq!(config_hash(&a).len(), 64);
    }
}

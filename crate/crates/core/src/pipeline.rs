//! The four stages, wired together.
//!
//! 1. both branches `x₋ < x₊` over `[a, ξ_s]`, `ξ_s` = [`XI_SWITCH`];
//! 2. the curve `ξ̃(x)` over the switching range, its concavity, and the
//!    membership of the branch ends in its boxes;
//! 3. the fold box and its place on `ξ̃`;
//! 4. the assembled result.

use serde::{Deserialize, Serialize};

use crate::continuation::{
    certify_branch, certify_concavity, glue_check, verify_separation, CertifiedBranch, Concavity, ContinuationConfig,
    ContinuationError, Glue, Orientation, Separation,
};
use crate::fold::{assemble_theorem, certify_unique_maximum, locate_fold, FoldCertificate, FoldError, Theorem};
use crate::interval::hexfloat::parse_hex;
use crate::interval::Interval;
use crate::odeint::IntegratorConfig;
use crate::poincare::{check_extrema, ShootingG};
use crate::reference::{self, XI_SWITCH};
use crate::seeds::{SeedError, SeedFile, Which};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub integrator: IntegratorConfig,
    /// `[a, ξ_s]` for stage 1.
    pub step1_range: [f64; 2],
    pub branches: ContinuationConfig,
    pub curve: ContinuationConfig,
    pub fold_radius: f64,
    pub seeds: SeedFile,
}

pub const DESK_LOWER: f64 = 1.5;

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            integrator: IntegratorConfig::default(),
            step1_range: [DESK_LOWER, XI_SWITCH],
            branches: ContinuationConfig::default(),
            curve: ContinuationConfig { second_order: true, max_fraction: 1.0 / 256.0, ..ContinuationConfig::default() },
            fold_radius: reference::FOLD_RADIUS,
            seeds: SeedFile::builtin(),
        }
    }
}

impl RunConfig {
    pub fn with_lower(mut self, a: f64) -> Self {
        self.step1_range[0] = a;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |m: String| Err(PipelineError::config(m));
        if let Err(e) = self.integrator.validate() {
            return cfg(e.to_string());
        }
        if let Err(e) = self.branches.validate().and(self.curve.validate()) {
            return cfg(e);
        }
        if !self.curve.second_order {
            return cfg("the curve stage needs second partials".into());
        }
        let [a, b] = self.step1_range;
        if !(a.is_finite() && 0.0 <= a && a < b && b <= XI_SWITCH) {
            return cfg(format!("stage-1 range [{a}, {b}] must satisfy 0 <= a < b <= {XI_SWITCH}"));
        }
        if !(self.fold_radius > 0.0 && self.fold_radius < 1e-3) {
            return cfg(format!("fold radius {} outside (0, 1e-3)", self.fold_radius));
        }
        self.seeds.validate().map_err(|e| PipelineError::config(e.to_string()))
    }

    fn g(&self) -> ShootingG {
        ShootingG { cfg: self.integrator }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Other,
    Config,
    Integration,
    Newton,
    Gluing,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Other => 1,
            ErrorClass::Config => 2,
            ErrorClass::Integration => 3,
            ErrorClass::Newton => 4,
            ErrorClass::Gluing => 5,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{class:?}: {message}")]
pub struct PipelineError {
    pub class: ErrorClass,
    pub message: String,
    /// The named branch certified before a continuation failure.
    pub partial: Option<(String, Box<CertifiedBranch>)>,
}

impl PipelineError {
    pub fn new(class: ErrorClass, message: impl Into<String>) -> Self {
        PipelineError { class, message: message.into(), partial: None }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorClass::Config, message)
    }

    fn from_continuation(name: &str, e: ContinuationError) -> Self {
        let class = match &e {
            ContinuationError::CannotAdvance { .. } | ContinuationError::Defect(_) => ErrorClass::Newton,
            ContinuationError::Seed(_) => ErrorClass::Integration,
            ContinuationError::InvalidInput(_) => ErrorClass::Config,
            ContinuationError::GeometryViolated { .. }
            | ContinuationError::BrokenChain { .. }
            | ContinuationError::Indeterminate(_) => ErrorClass::Gluing,
        };
        let message = format!("{name}: {e}");
        let partial = match e {
            ContinuationError::CannotAdvance { partial, .. } => Some((name.to_string(), partial)),
            _ => None,
        };
        PipelineError { class, message, partial }
    }
}

impl From<SeedError> for PipelineError {
    fn from(e: SeedError) -> Self {
        let class = match e {
            SeedError::Lost { .. } => ErrorClass::Integration,
            _ => ErrorClass::Config,
        };
        PipelineError::new(class, e.to_string())
    }
}

impl From<FoldError> for PipelineError {
    fn from(e: FoldError) -> Self {
        let class = match &e {
            FoldError::NotProven(_) => ErrorClass::Newton,
            FoldError::Evaluation(_) | FoldError::Interval(_) => ErrorClass::Integration,
            FoldError::Continuation(c) => return PipelineError::from_continuation("theorem", clone_light(c)),
            FoldError::Indeterminate(_) | FoldError::Missing(_) => ErrorClass::Gluing,
        };
        PipelineError::new(class, e.to_string())
    }
}

fn clone_light(e: &ContinuationError) -> ContinuationError {
    match e {
        ContinuationError::BrokenChain { index, reason } => {
            ContinuationError::BrokenChain { index: *index, reason: reason.clone() }
        }
        other => ContinuationError::Indeterminate(other.to_string()),
    }
}

/// A computed enclosure next to its reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub computed: Interval,
    pub reference: Interval,
    pub intersects: bool,
}

impl Comparison {
    pub fn new(name: &str, computed: Interval, reference: Interval) -> Self {
        Comparison { name: name.into(), computed, reference, intersects: computed.intersects(reference) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step1 {
    pub lower: CertifiedBranch,
    pub upper: CertifiedBranch,
    pub separation: Separation,
}

impl Step1 {
    pub fn comparisons(&self) -> Vec<Comparison> {
        vec![
            Comparison::new("x_lower(xi_s)", self.lower.endpoints[1], reference::x_lower_end()),
            Comparison::new("x_upper(xi_s)", self.upper.endpoints[1], reference::x_upper_end()),
        ]
    }
}

pub fn step1(cfg: &RunConfig) -> Result<Step1, PipelineError> {
    cfg.validate()?;
    let g = cfg.g();
    let range = Interval::new(cfg.step1_range[0], cfg.step1_range[1]).map_err(|e| PipelineError::config(e.to_string()))?;
    let run = |which: Which, name: &str| {
        let seed = cfg.seeds.branch_at(&g, range.lo(), which)?;
        certify_branch(&g, range, seed, Orientation::ParamIsXi, &cfg.branches)
            .map_err(|e| PipelineError::from_continuation(name, e))
    };
    let lower = run(Which::Lower, "lower")?;
    let upper = run(Which::Upper, "upper")?;
    let separation = verify_separation(&lower, &upper).map_err(|e| PipelineError::from_continuation("separation", e))?;
    Ok(Step1 { lower, upper, separation })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2 {
    pub curve: CertifiedBranch,
    pub concavity: Concavity,
    pub glue: Glue,
}

impl Step2 {
    pub fn comparisons(&self) -> Vec<Comparison> {
        vec![Comparison::new("xi_tilde''", self.concavity.hull, reference::concavity())]
    }
}

pub fn step2(cfg: &RunConfig, s1: &Step1) -> Result<Step2, PipelineError> {
    cfg.validate()?;
    if cfg.step1_range[1] != XI_SWITCH {
        return Err(PipelineError::config(format!("the branches must reach {XI_SWITCH} before the curve stage")));
    }
    let g = cfg.g();
    let range = reference::switching_range(s1.lower.endpoints[1], s1.upper.endpoints[1]);
    let curve = certify_branch(&g, range, XI_SWITCH, Orientation::ParamIsX, &cfg.curve)
        .map_err(|e| PipelineError::from_continuation("curve", e))?;
    let concavity = certify_concavity(&curve).map_err(|e| PipelineError::from_continuation("curve", e))?;
    if !concavity.concave {
        return Err(PipelineError::new(
            ErrorClass::Gluing,
            format!("concavity hull {:?} is not negative", concavity.hull),
        ));
    }
    let glue = glue_check(&s1.lower, &s1.upper, &curve).map_err(|e| PipelineError::from_continuation("glue", e))?;
    Ok(Step2 { curve, concavity, glue })
}

pub fn fold_comparisons(fc: &FoldCertificate) -> Vec<Comparison> {
    let mut v = vec![
        Comparison::new("xi_star", fc.xi_star, reference::xi_star()),
        Comparison::new("x_star", fc.x_star, reference::x_star()),
    ];
    if let Some(a) = fc.alpha_star {
        v.push(Comparison::new("alpha_star", a, reference::alpha_star()));
    }
    v
}

pub fn step3(cfg: &RunConfig, s2: &Step2) -> Result<FoldCertificate, PipelineError> {
    cfg.validate()?;
    let seed = (cfg.seeds.fold.xi, cfg.seeds.fold.x);
    let fc = locate_fold(&cfg.g(), seed, cfg.fold_radius)?;
    let mut fc = certify_unique_maximum(fc, &s2.curve, &s2.concavity)?;
    fc.glue = Some(s2.glue.clone());
    Ok(fc)
}

pub fn step4(s1: &Step1, s2: &Step2, fc: &FoldCertificate) -> Result<Theorem, PipelineError> {
    Ok(assemble_theorem(fc, &s1.lower, &s1.upper, &s2.curve)?)
}

/// Parses `lo:hi`; each end is a decimal or hexadecimal float literal.
pub fn parse_range(text: &str) -> Result<[f64; 2], PipelineError> {
    let bad = || PipelineError::config(format!("range {text:?} is not of the form lo:hi"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let num = |s: &str| {
        let s = s.trim();
        s.parse::<f64>().ok().or_else(|| parse_hex(s).ok()).filter(|v| v.is_finite())
    };
    let (a, b) = (num(a).ok_or_else(bad)?, num(b).ok_or_else(bad)?);
    if !(a < b) {
        return Err(PipelineError::config(format!("range {text:?} is empty")));
    }
    Ok([a, b])
}

/// Segments whose recorded extrema do not pass the strict ordering test.
pub fn geometry_failures(b: &CertifiedBranch) -> usize {
    b.segments
        .iter()
        .filter(|s| check_extrema(&[s.geometry.x0, s.geometry.x1, s.geometry.x2]).is_err())
        .count()
}

//! Adaptive continuation of the zero set of `G` along a parameter range.
//!
//! A branch is a chain of segments `P^j × U^j` on which a parameterized
//! interval Newton step is `Proven`, so the zero set inside each box is the
//! graph of a smooth function of the parameter. With orientation
//! [`Orientation::ParamIsXi`] the parameter is `ξ` and the unknown is `x`;
//! [`Orientation::ParamIsX`] swaps the roles.
//!
//! Per segment two evaluations are made: a first-order (or second-order)
//! box evaluation over `P^j × U^j`, which supplies the Newton derivative,
//! the geometry check and the mean-value slope, and a zeroth-order point
//! evaluation at the centre. `[e] = G(p̄, u0) + G_p(P × U)(P − p̄)`, intersected
//! with the box value.
//!
//! Consecutive segments are glued at their common parameter `c` when the
//! exit enclosure of one lies in the next solution box, or the entry
//! enclosure of the next lies in the previous one. Either way uniqueness in
//! one of the boxes identifies the two local graphs at `c`.
//!
//! The range is cut into a fixed number of chunks that are certified
//! independently (in parallel) from non-rigorous seeds and then joined in
//! order. Chunk boundaries depend only on the configuration, so the output
//! does not depend on the number of worker threads.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::interval::Interval;
use crate::newton::{scalar_step, NewtonOutcome, NewtonStatus};
use crate::odeint::VarOrder;
use crate::poincare::{check_extrema, GEvaluation, GFunction, GSecond, GeometryError, GeometryReport, PoincareError};


#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    ParamIsXi,
    ParamIsX,
}

impl Orientation {
    /// `(ξ, x)` from `(parameter, unknown)`.
    pub fn to_xi_x(self, p: Interval, u: Interval) -> (Interval, Interval) {
        match self {
            Orientation::ParamIsXi => (p, u),
            Orientation::ParamIsX => (u, p),
        }
    }

    fn eval<G: GFunction + ?Sized>(
        self,
        g: &G,
        p: Interval,
        u: Interval,
        order: VarOrder,
    ) -> Result<GEvaluation, PoincareError> {
        let (xi, x) = self.to_xi_x(p, u);
        g.eval(xi, x, order)
    }

    /// `(∂G/∂u, ∂G/∂p)` from a first-order evaluation.
    fn partials(self, e: &GEvaluation) -> Option<(Interval, Interval)> {
        let (gx, gxi) = (e.d_dx?, e.d_dxi?);
        Some(match self {
            Orientation::ParamIsXi => (gx, gxi),
            Orientation::ParamIsX => (gxi, gx),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    /// First trial width as a fraction of the whole range.
    pub initial_fraction: f64,
    pub growth: f64,
    /// Cap on the segment width as a fraction of the range.
    pub max_fraction: f64,
    /// Factor applied to the predicted tube to get the solution box.
    pub inflation: f64,
    /// `CannotAdvance` below this fraction of the range.
    pub min_fraction: f64,
    pub chunks: usize,
    /// Evaluate second partials on every segment (needed for concavity).
    pub second_order: bool,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            initial_fraction: 1.0 / 1024.0,
            growth: 1.5,
            max_fraction: 1.0 / 8.0,
            inflation: 1.5,
            min_fraction: 1e-12,
            chunks: 4,
            second_order: false,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<(), String> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if !(frac(self.initial_fraction) && frac(self.max_fraction) && frac(self.min_fraction)) {
            return Err("width fractions must lie in (0, 1]".into());
        }
        if self.min_fraction > self.initial_fraction {
            return Err("min_fraction exceeds initial_fraction".into());
        }
        if !(self.growth >= 1.0 && self.growth.is_finite()) {
            return Err("growth must be at least 1".into());
        }
        if !(self.inflation > 1.0 && self.inflation.is_finite()) {
            return Err("inflation must exceed 1".into());
        }
        if self.chunks == 0 {
            return Err("chunks must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSegment {
    pub param_box: Interval,
    pub solution_box: Interval,
    pub newton: NewtonOutcome,
    pub geometry: GeometryReport,
    /// Enclosure of the unknown at `param_box.lo`.
    pub entry: Interval,
    /// Enclosure of the unknown at `param_box.hi`.
    pub exit: Interval,
    pub g_x: Interval,
    pub g_xi: Interval,
    pub d2: Option<GSecond>,
    /// `ξ̃″` over the segment (orientation `ParamIsX` with second partials).
    pub second_derivative: Option<Interval>,
}

impl BranchSegment {
    pub fn refined(&self) -> Interval {
        self.newton.refined[0]
    }

    /// `(Ξ, X)` of the segment box.
    pub fn xi_x_box(&self, orientation: Orientation) -> (Interval, Interval) {
        orientation.to_xi_x(self.param_box, self.solution_box)
    }
}

/// Attempt counters; deterministic for a given configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchStats {
    pub proven: u64,
    pub inconclusive: u64,
    pub defect: u64,
    pub geometry_indeterminate: u64,
    pub evaluation_failures: u64,
    pub rejoined_chunks: u64,
}

impl BranchStats {
    fn absorb(&mut self, o: &BranchStats) {
        self.proven += o.proven;
        self.inconclusive += o.inconclusive;
        self.defect += o.defect;
        self.geometry_indeterminate += o.geometry_indeterminate;
        self.evaluation_failures += o.evaluation_failures;
        self.rejoined_chunks += o.rejoined_chunks;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBranch {
    pub orientation: Orientation,
    pub range: Interval,
    pub segments: Vec<BranchSegment>,
    /// The unknown at `range.lo` and at `range.hi`.
    pub endpoints: [Interval; 2],
    pub stats: BranchStats,
}

#[derive(Debug, thiserror::Error)]
pub enum ContinuationError {
    #[error("cannot advance past {at}: width {width:e} below the floor ({reason})")]
    CannotAdvance {
        at: f64,
        width: f64,
        reason: String,
        partial: Box<CertifiedBranch>,
    },
    #[error("geometry violated at parameter {at}: {error}")]
    GeometryViolated { at: f64, error: GeometryError },
    #[error("seed: {0}")]
    Seed(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("chain broken at segment {index}: {reason}")]
    BrokenChain { index: usize, reason: String },
    #[error("indeterminate: {0}")]
    Indeterminate(String),
    #[error("defect: {0}")]
    Defect(String),
}

impl ContinuationError {
    /// The segments certified before the failure, if any.
    pub fn partial(&self) -> Option<&CertifiedBranch> {
        match self {
            ContinuationError::CannotAdvance { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Non-rigorous Newton on `u ↦ G(p, u)` using midpoints of point
/// evaluations. Returns `(u, ∂G/∂u, ∂G/∂p)` at the converged point.
pub fn refine_point<G: GFunction + ?Sized>(
    g: &G,
    orientation: Orientation,
    p: f64,
    guess: f64,
) -> Option<(f64, f64, f64)> {
    let mut u = guess;
    for _ in 0..12 {
        let e = orientation
            .eval(g, Interval::point(p), Interval::point(u), VarOrder::First)
            .ok()?;
        let (a, dp) = orientation.partials(&e)?;
        let (gv, a, dp) = (e.value.mid(), a.mid(), dp.mid());
        if !(gv.is_finite() && a.is_finite() && a != 0.0) {
            return None;
        }
        let du = gv / a;
        u -= du;
        if du.abs() <= 1e-14 * u.abs().max(1.0) {
            return Some((u, a, dp));
        }
    }
    None
}

/// Follows the branch non-rigorously from `(p0, u0)` to `p1`. A step is
/// accepted only if `∂G/∂u` keeps its sign and the corrector moves the
/// predicted point by less than half the step's own displacement, which
/// keeps the tracker off neighbouring branches.
pub fn track_point<G: GFunction + ?Sized>(
    g: &G,
    orientation: Orientation,
    (p0, u0): (f64, f64),
    p1: f64,
) -> Option<f64> {
    let (mut u, a0, dp0) = refine_point(g, orientation, p0, u0)?;
    let sign = a0.signum();
    let mut p = p0;
    let mut slope = -dp0 / a0;
    let mut h = (p1 - p0) / 64.0;
    let floor = (p1 - p0).abs() * 1e-12;
    while p != p1 {
        let next = if (p1 - p).abs() <= h.abs() * 1.01 { p1 } else { p + h };
        let predicted = u + slope * (next - p);
        match refine_point(g, orientation, next, predicted) {
            Some((un, a, dp))
                if a.signum() == sign && (un - predicted).abs() <= 0.5 * (un - u).abs() + 1e-12 * u.abs().max(1.0) =>
            {
                p = next;
                u = un;
                slope = -dp / a;
                h *= 2.0;
            }
            _ => {
                h /= 2.0;
                if h.abs() < floor {
                    return None;
                }
            }
        }
    }
    Some(u)
}

enum Start {
    Seed { u: f64, slope: f64 },
    After { exit: Interval, slope: f64 },
}

enum Attempt {
    Proven(Box<BranchSegment>),
    Inconclusive(Interval),
    Defect,
    GeometryIndeterminate,
    EvaluationFailed(String),
    GeometryViolated(GeometryError),
}

fn attempt<G: GFunction + ?Sized>(
    g: &G,
    orientation: Orientation,
    pbox: Interval,
    ubox: Interval,
    order: VarOrder,
) -> Attempt {
    let u0 = ubox.mid();
    let pm = pbox.mid();
    let bx = match orientation.eval(g, pbox, ubox, order) {
        Ok(e) => e,
        Err(e) => return Attempt::EvaluationFailed(e.to_string()),
    };
    let geometry = match check_extrema(&bx.extrema) {
        Ok(r) => r,
        Err(e @ GeometryError::Violated { .. }) => return Attempt::GeometryViolated(e),
        Err(_) => return Attempt::GeometryIndeterminate,
    };
    let Some((a, dp)) = orientation.partials(&bx) else {
        return Attempt::EvaluationFailed("box evaluation returned no first partials".into());
    };
    if a.contains_zero() || !a.is_bounded() {
        return Attempt::Defect;
    }
    let centre = match orientation.eval(g, Interval::point(pm), Interval::point(u0), VarOrder::None) {
        Ok(e) => e.value,
        Err(e) => return Attempt::EvaluationFailed(e.to_string()),
    };
    // G(p, u0) for p in `at`, by the mean value theorem in p
    let value_on = |at: Interval| {
        let mv = centre + dp * (at - Interval::point(pm));
        mv.intersect(bx.value).unwrap_or(mv)
    };
    let newton = scalar_step(value_on(pbox), a, ubox, u0);
    match newton.status {
        NewtonStatus::Proven => {}
        NewtonStatus::Inconclusive => return Attempt::Inconclusive(newton.refined[0]),
        NewtonStatus::Defect => return Attempt::Defect,
    }
    let refined = newton.refined[0];
    let at_end = |p: f64| {
        let n = Interval::point(u0) - value_on(Interval::point(p)) / a;
        n.intersect(refined).unwrap_or(refined)
    };
    let (gx, gxi) = (bx.d_dx.unwrap(), bx.d_dxi.unwrap());
    let second_derivative = match (orientation, bx.d2) {
        (Orientation::ParamIsX, Some(d2)) => implicit_second_derivative(gx, gxi, &d2),
        _ => None,
    };
    Attempt::Proven(Box::new(BranchSegment {
        param_box: pbox,
        solution_box: ubox,
        entry: at_end(pbox.lo()),
        exit: at_end(pbox.hi()),
        newton,
        geometry,
        g_x: gx,
        g_xi: gxi,
        d2: bx.d2,
        second_derivative,
    }))
}

/// `ξ̃″ = −(G_xx + 2 G_xξ ξ̃′ + G_ξξ ξ̃′²)/G_ξ` with `ξ̃′ = −G_x/G_ξ`, or `None`
/// when `G_ξ` may vanish.
pub fn implicit_second_derivative(g_x: Interval, g_xi: Interval, d2: &GSecond) -> Option<Interval> {
    if g_xi.contains_zero() {
        return None;
    }
    let s = -(g_x / g_xi);
    let r = -((d2.xx + (d2.xxi * s).scale(2.0) + d2.xixi * s.sqr()) / g_xi);
    r.is_bounded().then_some(r)
}

struct ChunkRun {
    segments: Vec<BranchSegment>,
    stats: BranchStats,
}

struct ChunkFailure {
    at: f64,
    width: f64,
    reason: String,
    geometry: Option<GeometryError>,
    run: ChunkRun,
}

/// Least radius of a solution box; keeps boxes on flat stretches of a
/// curve from becoming narrower than enclosures computed elsewhere.
fn pad_for(u: f64) -> f64 {
    1e-11 * u.abs().max(1.0)
}

fn run_chunk<G: GFunction + ?Sized>(
    g: &G,
    orientation: Orientation,
    chunk: Interval,
    start: Start,
    range_width: f64,
    cfg: &ContinuationConfig,
) -> Result<ChunkRun, ChunkFailure> {
    let order = if cfg.second_order { VarOrder::Second } else { VarOrder::First };
    let floor = range_width * cfg.min_fraction;
    let cap = range_width * cfg.max_fraction;
    let mut run = ChunkRun { segments: Vec::new(), stats: BranchStats::default() };
    let (mut base, mut slope) = match start {
        Start::Seed { u, slope } => (Interval::point(u), slope),
        Start::After { exit, slope } => (exit, slope),
    };
    let mut p = chunk.lo();
    let mut w = (range_width * cfg.initial_fraction).min(cap);
    let mut last_reason = String::from("no attempt");
    while p < chunk.hi() {
        if w < floor {
            return Err(ChunkFailure { at: p, width: w, reason: last_reason, geometry: None, run });
        }
        let mut b = p + w;
        if b >= chunk.hi() || chunk.hi() - b < 0.01 * w {
            b = chunk.hi();
        }
        let pbox = Interval::new(p, b).expect("ordered parameter box");
        let shifted = base + Interval::point(slope * (b - p));
        let tube = base.hull(shifted);
        let mut ubox = tube.inflate(cfg.inflation, pad_for(base.mid()));
        let mut inflated = false;
        let outcome = loop {
            match attempt(g, orientation, pbox, ubox, order) {
                Attempt::Inconclusive(n) if !inflated => {
                    run.stats.inconclusive += 1;
                    inflated = true;
                    ubox = ubox.hull(n).inflate(2.0, pad_for(n.mid()));
                }
                other => break other,
            }
        };
        match outcome {
            Attempt::Proven(seg) => {
                run.stats.proven += 1;
                let prev_exit = base.mid();
                slope = if run.segments.is_empty() {
                    let (a, dp) = match orientation {
                        Orientation::ParamIsXi => (seg.g_x, seg.g_xi),
                        Orientation::ParamIsX => (seg.g_xi, seg.g_x),
                    };
                    -dp.mid() / a.mid()
                } else {
                    (seg.exit.mid() - prev_exit) / (b - p)
                };
                base = seg.exit;
                run.segments.push(*seg);
                p = b;
                w = (w * cfg.growth).min(cap);
            }
            Attempt::Inconclusive(_) => {
                run.stats.inconclusive += 1;
                last_reason = "Newton image escaped the solution box".into();
                w /= 2.0;
            }
            Attempt::Defect => {
                run.stats.defect += 1;
                last_reason = "derivative enclosure contains zero".into();
                w /= 2.0;
            }
            Attempt::GeometryIndeterminate => {
                run.stats.geometry_indeterminate += 1;
                last_reason = "geometry indeterminate".into();
                w /= 2.0;
            }
            Attempt::EvaluationFailed(e) => {
                run.stats.evaluation_failures += 1;
                last_reason = e;
                w /= 2.0;
            }
            Attempt::GeometryViolated(e) => {
                return Err(ChunkFailure { at: p, width: w, reason: e.to_string(), geometry: Some(e), run });
            }
        }
    }
    Ok(run)
}

/// Whether the branch values at the common parameter of `a` and `b` are
/// identified by uniqueness in one of the two boxes.
pub fn glued(a: &BranchSegment, b: &BranchSegment) -> bool {
    a.param_box.hi() == b.param_box.lo() && (a.exit.subset(b.solution_box) || b.entry.subset(a.solution_box))
}

/// Certifies the branch through `(range.lo, seed)` over `range`.
pub fn certify_branch<G: GFunction + ?Sized>(
    g: &G,
    range: Interval,
    seed: f64,
    orientation: Orientation,
    cfg: &ContinuationConfig,
) -> Result<CertifiedBranch, ContinuationError> {
    cfg.validate().map_err(ContinuationError::InvalidInput)?;
    if !(range.is_bounded() && range.diam() > 0.0) {
        return Err(ContinuationError::InvalidInput(format!("range {range:?} must be a proper interval")));
    }
    let width = range.hi() - range.lo();
    let chunks = range.split(cfg.chunks);
    let mut starts = Vec::with_capacity(chunks.len());
    let mut u = seed;
    for (i, c) in chunks.iter().enumerate() {
        if i > 0 {
            u = track_point(g, orientation, (chunks[i - 1].lo(), u), c.lo())
                .ok_or_else(|| ContinuationError::Seed(format!("lost the branch before {}", c.lo())))?;
        }
        let (u_ref, a, dp) = refine_point(g, orientation, c.lo(), u)
            .ok_or_else(|| ContinuationError::Seed(format!("no convergence at {}", c.lo())))?;
        u = u_ref;
        starts.push((u, -dp / a));
    }
    let runs: Vec<Result<ChunkRun, ChunkFailure>> = chunks
        .par_iter()
        .zip(starts.par_iter())
        .map(|(c, &(u, slope))| run_chunk(g, orientation, *c, Start::Seed { u, slope }, width, cfg))
        .collect();

    let mut segments: Vec<BranchSegment> = Vec::new();
    let mut stats = BranchStats::default();
    let fail = |f: ChunkFailure, mut segments: Vec<BranchSegment>, mut stats: BranchStats| {
        stats.absorb(&f.run.stats);
        if let Some(error) = f.geometry {
            return ContinuationError::GeometryViolated { at: f.at, error };
        }
        segments.extend(f.run.segments);
        let endpoints = match (segments.first(), segments.last()) {
            (Some(a), Some(b)) => [a.entry, b.exit],
            _ => [Interval::ENTIRE, Interval::ENTIRE],
        };
        ContinuationError::CannotAdvance {
            at: f.at,
            width: f.width,
            reason: f.reason,
            partial: Box::new(CertifiedBranch { orientation, range, segments, endpoints, stats }),
        }
    };
    for (i, run) in runs.into_iter().enumerate() {
        let mut run = match run {
            Ok(r) => r,
            Err(f) => return Err(fail(f, segments, stats)),
        };
        let joined = match (segments.last(), run.segments.first()) {
            (Some(a), Some(b)) => glued(a, b),
            _ => true,
        };
        if !joined {
            // redo the chunk from the previous exit; sequential, so still deterministic
            let last = segments.last().unwrap();
            let prev_slope = -last.g_xi.mid() / last.g_x.mid();
            let slope = match orientation {
                Orientation::ParamIsXi => prev_slope,
                Orientation::ParamIsX => 1.0 / prev_slope,
            };
            stats.absorb(&run.stats);
            stats.rejoined_chunks += 1;
            run = match run_chunk(g, orientation, chunks[i], Start::After { exit: last.exit, slope }, width, cfg) {
                Ok(r) => r,
                Err(f) => return Err(fail(f, segments, stats)),
            };
        }
        stats.absorb(&run.stats);
        segments.extend(run.segments);
    }
    let mut branch = CertifiedBranch {
        orientation,
        range,
        endpoints: [segments[0].entry, segments.last().unwrap().exit],
        segments,
        stats,
    };
    validate_chain(&branch)?;
    branch.endpoints = [
        sharpen_endpoint(g, &branch, 0, range.lo(), branch.endpoints[0]),
        sharpen_endpoint(g, &branch, branch.segments.len() - 1, range.hi(), branch.endpoints[1]),
    ];
    Ok(branch)
}

/// Tightens the enclosure of the unknown at parameter `p` in segment `k` by
/// point Newton steps on sub-boxes of its solution box.
fn sharpen_endpoint<G: GFunction + ?Sized>(
    g: &G,
    branch: &CertifiedBranch,
    k: usize,
    p: f64,
    start: Interval,
) -> Interval {
    let seg = &branch.segments[k];
    let mut best = start;
    let mut ubox = start.inflate(1.5, pad_for(start.mid()));
    for _ in 0..4 {
        let Some(b) = ubox.intersect(seg.solution_box) else { break };
        let u0 = b.mid();
        if !(b.lo() < u0 && u0 < b.hi()) {
            break;
        }
        let pp = Interval::point(p);
        let Ok(d) = branch.orientation.eval(g, pp, b, VarOrder::First) else { break };
        let Some((a, _)) = branch.orientation.partials(&d) else { break };
        let Ok(c) = branch.orientation.eval(g, pp, Interval::point(u0), VarOrder::None) else { break };
        let n = scalar_step(c.value, a, b, u0);
        if !n.is_proven() {
            break;
        }
        match n.refined[0].intersect(best) {
            Some(r) if r.diam() < best.diam() => best = r,
            _ => break,
        }
        ubox = best.inflate(4.0, pad_for(best.mid()));
    }
    best
}

/// The structural invariants of a branch.
pub fn validate_chain(b: &CertifiedBranch) -> Result<(), ContinuationError> {
    let broken = |index: usize, reason: &str| ContinuationError::BrokenChain { index, reason: reason.into() };
    let (Some(first), Some(last)) = (b.segments.first(), b.segments.last()) else {
        return Err(broken(0, "no segments"));
    };
    if first.param_box.lo() != b.range.lo() || last.param_box.hi() != b.range.hi() {
        return Err(broken(0, "segments do not cover the range"));
    }
    for (i, s) in b.segments.iter().enumerate() {
        if !s.newton.is_proven() || !s.newton.refined[0].subset_interior(s.solution_box) {
            return Err(broken(i, "Newton step not proven"));
        }
        if s.g_x.contains_zero() && b.orientation == Orientation::ParamIsXi
            || s.g_xi.contains_zero() && b.orientation == Orientation::ParamIsX
        {
            return Err(broken(i, "derivative may vanish"));
        }
        if check_extrema(&[s.geometry.x0, s.geometry.x1, s.geometry.x2]).is_err() {
            return Err(broken(i, "geometry"));
        }
        if !(s.entry.subset(s.refined()) && s.exit.subset(s.refined())) {
            return Err(broken(i, "end enclosures outside the refined box"));
        }
    }
    for (i, w) in b.segments.windows(2).enumerate() {
        if w[0].param_box.hi() != w[1].param_box.lo() {
            return Err(broken(i + 1, "parameter boxes do not share an endpoint"));
        }
        if !w[0].solution_box.intersects(w[1].solution_box) {
            return Err(broken(i + 1, "solution boxes are disjoint"));
        }
        if !glued(&w[0], &w[1]) {
            return Err(broken(i + 1, "end enclosures not contained in the neighbouring box"));
        }
    }
    if !(b.endpoints[0].subset(first.entry) && b.endpoints[1].subset(last.exit)) {
        return Err(broken(0, "endpoint enclosures inconsistent with the chain"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub lower_end: Interval,
    pub upper_end: Interval,
    pub argument: Vec<String>,
}

/// `x₋ < x₊` on the whole common range.
pub fn verify_separation(lower: &CertifiedBranch, upper: &CertifiedBranch) -> Result<Separation, ContinuationError> {
    if lower.range != upper.range || lower.orientation != Orientation::ParamIsXi || upper.orientation != lower.orientation {
        return Err(ContinuationError::InvalidInput("branches must share the range and be parameterized by xi".into()));
    }
    validate_chain(lower)?;
    validate_chain(upper)?;
    let (l, u) = (lower.endpoints[1], upper.endpoints[1]);
    if !l.certainly_lt(u) {
        return Err(ContinuationError::Indeterminate(format!("end enclosures {l:?} and {u:?} are not ordered")));
    }
    let argument = vec![
        format!("x_lower({}) <= {:e} < {:e} <= x_upper({})", lower.range.hi(), l.hi(), u.lo(), upper.range.hi()),
        "both branches are continuous chains of zeros of G with G_x nonzero on every segment box".into(),
        "near a common zero the zero set is a single graph, so the coincidence set is open".into(),
        "it is also closed; being a proper subset of a connected range it is empty".into(),
    ];
    Ok(Separation { lower_end: l, upper_end: u, argument })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Concavity {
    pub hull: Interval,
    pub concave: bool,
}

/// Hull of the per-segment `ξ̃″` enclosures of an `x`-parameterized branch.
pub fn certify_concavity(b: &CertifiedBranch) -> Result<Concavity, ContinuationError> {
    if b.orientation != Orientation::ParamIsX {
        return Err(ContinuationError::InvalidInput("concavity needs an x-parameterized branch".into()));
    }
    let mut hull: Option<Interval> = None;
    for (i, s) in b.segments.iter().enumerate() {
        let d2 = s
            .d2
            .as_ref()
            .ok_or_else(|| ContinuationError::InvalidInput(format!("segment {i} has no second partials")))?;
        let v = implicit_second_derivative(s.g_x, s.g_xi, d2)
            .ok_or_else(|| ContinuationError::Defect(format!("G_xi may vanish on segment {i}")))?;
        hull = Some(hull.map_or(v, |h| h.hull(v)));
    }
    let hull = hull.ok_or_else(|| ContinuationError::InvalidInput("empty branch".into()))?;
    Ok(Concavity { hull, concave: hull.is_negative() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Glue {
    pub xi: f64,
    pub lower_segment: usize,
    pub upper_segment: usize,
}

fn witness(b: &CertifiedBranch, xi: f64, x: Interval) -> Option<usize> {
    b.segments.iter().position(|s| {
        let (xi_box, x_box) = s.xi_x_box(b.orientation);
        xi_box.contains(xi) && x.subset(x_box)
    })
}

/// Checks `(ξ_e, x₋(ξ_e))` and `(ξ_e, x₊(ξ_e))` against the boxes of the
/// `x`-parameterized chain, where `ξ_e` is the common right end of the
/// `ξ`-parameterized branches.
pub fn glue_check(lower: &CertifiedBranch, upper: &CertifiedBranch, tilde: &CertifiedBranch) -> Result<Glue, ContinuationError> {
    if tilde.orientation != Orientation::ParamIsX {
        return Err(ContinuationError::InvalidInput("the glue target must be x-parameterized".into()));
    }
    if lower.range.hi() != upper.range.hi() {
        return Err(ContinuationError::InvalidInput("branches end at different parameters".into()));
    }
    let xi = lower.range.hi();
    glue_points(xi, lower.endpoints[1], upper.endpoints[1], tilde)
}

/// Membership of `(xi, x_lower)` and `(xi, x_upper)` in boxes of `tilde`.
pub fn glue_points(xi: f64, x_lower: Interval, x_upper: Interval, tilde: &CertifiedBranch) -> Result<Glue, ContinuationError> {
    let find = |x: Interval, which: &str| {
        witness(tilde, xi, x).ok_or_else(|| {
            ContinuationError::Indeterminate(format!("({xi}, {x:?}) of the {which} branch lies in no segment box"))
        })
    };
    Ok(Glue { xi, lower_segment: find(x_lower, "lower")?, upper_segment: find(x_upper, "upper")? })
}

/// One row per segment: `branch,xi_mid,x_mid,xi_width,x_width`.
pub fn write_branch_csv<W: Write>(branches: &[(&str, &CertifiedBranch)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "branch,xi_mid,x_mid,xi_width,x_width")?;
    for (id, b) in branches {
        for s in &b.segments {
            let (xi, x) = b.orientation.to_xi_x(s.param_box, s.refined());
            writeln!(out, "{id},{:e},{:e},{:e},{:e}", xi.mid(), x.mid(), xi.diam(), x.diam())?;
        }
    }
    Ok(())
}

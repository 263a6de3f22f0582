//! Property suites run by `shfold selftest`.
//!
//! Each suite compares a rigorous routine against something computed
//! independently: exact double-double arithmetic, the extrapolation
//! integrator, or a closed form.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fold::locate_fold;
use crate::interval::Interval;
use crate::model::{self, ModelParams};
use crate::newton::newton_scalar;
use crate::nonrigorous::{self, Gbs, DD};
use crate::odeint::{extended_point, flow, project, InitialData, IntegratorConfig, VarOrder};
use crate::poincare::{FnG, GEvaluation, GFunction, GSecond, ShootingG};
use crate::reference::XI_SWITCH;
use crate::seeds::{SeedFile, Which};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// The largest error seen, in the suite's own measure.
    pub worst: f64,
    pub tolerance: f64,
    pub seconds: f64,
    pub notes: Vec<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.worst <= self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SelftestConfig {
    pub seed: u64,
    pub containment_samples: usize,
    pub derivative_points: usize,
    pub energy_points: usize,
    pub reversibility_states: usize,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            seed: 0x5eed,
            containment_samples: 1_000_000,
            derivative_points: 20,
            energy_points: 6,
            reversibility_states: 20,
        }
    }
}

struct Tally {
    name: &'static str,
    samples: usize,
    violations: usize,
    worst: f64,
    tolerance: f64,
    notes: Vec<String>,
    t0: Instant,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally { name, samples: 0, violations: 0, worst: 0.0, tolerance, notes: Vec::new(), t0: Instant::now() }
    }

    fn check(&mut self, ok: bool, note: impl FnOnce() -> String) {
        self.samples += 1;
        if !ok {
            self.violations += 1;
            if self.notes.len() < 5 {
                self.notes.push(note());
            }
        }
    }

    fn error(&mut self, err: f64, note: impl FnOnce() -> String) {
        self.samples += 1;
        if !(err <= self.tolerance) {
            self.violations += 1;
            if self.notes.len() < 5 {
                self.notes.push(note());
            }
        }
        self.worst = if err.is_nan() { f64::INFINITY } else { self.worst.max(err) };
    }

    fn done(self) -> SuiteResult {
        SuiteResult {
            name: self.name.into(),
            samples: self.samples,
            violations: self.violations,
            worst: self.worst,
            tolerance: self.tolerance,
            seconds: self.t0.elapsed().as_secs_f64(),
            notes: self.notes,
        }
    }
}

pub fn run(cfg: &SelftestConfig) -> SelftestReport {
    let t0 = Instant::now();
    let g = ShootingG::default();
    let points = branch_points(&g, cfg.derivative_points.max(cfg.energy_points));
    let suites = vec![
        containment(cfg.seed, cfg.containment_samples),
        energy(&points[..cfg.energy_points.min(points.len())]),
        derivatives(&g, &points[..cfg.derivative_points.min(points.len())]),
        reversibility(cfg.seed, cfg.reversibility_states),
        newton(),
    ];
    let passed = suites.iter().all(SuiteResult::passed) && points.len() >= cfg.derivative_points;
    SelftestReport { seed: cfg.seed, suites, passed, seconds: t0.elapsed().as_secs_f64() }
}

// -- interval containment -------------------------------------------------

/// Exact ordering of normalized double-doubles.
fn dd_le(a: DD, b: DD) -> bool {
    a.hi < b.hi || (a.hi == b.hi && a.lo <= b.lo)
}

fn dd_in(v: DD, iv: Interval) -> bool {
    dd_le(DD::new(iv.lo()), v) && dd_le(v, DD::new(iv.hi()))
}

/// Exact product of two doubles.
fn prod(a: f64, b: f64) -> DD {
    DD::new(a) * DD::new(b)
}

fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    let scale = 2f64.powi(rng.gen_range(-30..30));
    let a = rng.gen_range(-1.0..1.0) * scale;
    let width = match rng.gen_range(0..4) {
        0 => 0.0,
        1 => a.abs() * f64::EPSILON * rng.gen_range(0.0..8.0),
        _ => rng.gen_range(0.0..1.0) * scale,
    };
    Interval::new(a, a + width).unwrap_or(Interval::point(a))
}

fn random_member(rng: &mut ChaCha8Rng, x: Interval) -> f64 {
    match rng.gen_range(0..4) {
        0 => x.lo(),
        1 => x.hi(),
        _ => (x.lo() + rng.gen_range(0.0..1.0) * (x.hi() - x.lo())).clamp(x.lo(), x.hi()),
    }
}

/// Random intervals and random members; the result of each operation on
/// the members, computed exactly, must lie in the interval result.
fn containment(seed: u64, samples: usize) -> SuiteResult {
    let mut t = Tally::new("interval containment", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let (x, y) = (random_interval(&mut rng), random_interval(&mut rng));
        let (a, b) = (random_member(&mut rng, x), random_member(&mut rng, y));
        let op = rng.gen_range(0..6);
        let ok = match op {
            0 => dd_in(DD::new(a) + DD::new(b), x + y),
            1 => dd_in(DD::new(a) - DD::new(b), x - y),
            2 => dd_in(prod(a, b), x * y),
            3 => dd_in(prod(a, a), x.sqr()),
            4 => match x.checked_div(y) {
                // a/b ∈ [lo, hi]  ⇔  lo·b ≤ a ≤ hi·b  (b > 0), reversed for b < 0
                Ok(q) if b != 0.0 && q.is_bounded() => {
                    let (l, h) = (prod(q.lo(), b), prod(q.hi(), b));
                    let a = DD::new(a);
                    if b > 0.0 {
                        dd_le(l, a) && dd_le(a, h)
                    } else {
                        dd_le(h, a) && dd_le(a, l)
                    }
                }
                _ => true,
            },
            _ => {
                let (l, h) = (x.lo().abs(), x.hi().abs());
                let lo = if x.contains_zero() { 0.0 } else { l.min(h) };
                let (xa, a) = (Interval::new(lo, l.max(h)).unwrap(), a.abs());
                match xa.sqrt() {
                    Ok(r) => dd_le(prod(r.lo(), r.lo()), DD::new(a)) && dd_le(DD::new(a), prod(r.hi(), r.hi())),
                    Err(_) => false,
                }
            }
        };
        t.check(ok, || format!("op {op} on {x:?} ∋ {a:e}, {y:?} ∋ {b:e}"));
    }
    t.done()
}

// -- orbits used by the remaining suites ----------------------------------

#[derive(Clone, Copy, Debug)]
struct OrbitPoint {
    xi: f64,
    x: f64,
}

/// Points on both branches at midpoints of an even split of
/// `[1.9, ξ_s]`, found by nonrigorous tracking from the seeds.
fn branch_points(g: &ShootingG, n: usize) -> Vec<OrbitPoint> {
    let seeds = SeedFile::builtin();
    let levels = n.div_ceil(2);
    let (a, b) = (1.9, XI_SWITCH);
    let mut out = Vec::new();
    for k in 0..levels {
        let xi = a + (b - a) * (k as f64 + 0.5) / levels as f64;
        for which in [Which::Lower, Which::Upper] {
            if let Some(x) = seeds.branch_at(g, xi, which).ok().and_then(|x| nonrigorous::solve_branch_point(xi, x)) {
                out.push(OrbitPoint { xi, x });
            }
        }
    }
    out.truncate(n);
    out
}

/// Energy drift of the extrapolation integrator over one full period, and
/// consistency of rigorous energy enclosures along the interval flow.
fn energy(points: &[OrbitPoint]) -> SuiteResult {
    let mut t = Tally::new("energy first integral", 1e-8);
    let gbs = Gbs::dd_default();
    for p in points {
        let start = nonrigorous::embed(DD::new(p.xi), DD::new(p.x));
        let Some((_, _, cr)) = nonrigorous::shoot(DD::new(p.xi), DD::new(p.x), &gbs) else {
            t.check(false, || format!("no crossings from {p:?}"));
            continue;
        };
        // the orbit is symmetric about both crossings: the period is twice
        // the time to the second one
        let period = 2.0 * cr[1].time;
        let e0 = nonrigorous::energy(&start);
        let n = 64;
        let mut u = start;
        for _ in 0..n {
            u = gbs.flow(&u, period / n as f64);
            let drift = (nonrigorous::energy(&u) - e0).hi.abs();
            t.error(drift, || format!("drift {drift:e} at {p:?}"));
        }
        let closure = (0..4).map(|i| (u[i] - start[i]).hi.abs()).fold(0.0, f64::max);
        if closure > 1e-6 {
            t.notes.push(format!("orbit at {p:?} closes only to {closure:e}"));
        }
        // rigorous: every step's end enclosure meets the initial energy
        let s0 = [p.x, 0.0, (p.x * p.x - 1.0) * std::f64::consts::FRAC_1_SQRT_2, 0.0, p.xi];
        let params = ModelParams::new(Interval::point(p.xi));
        let init = extended_point(s0);
        let e_init = model::energy(&project(&init), &params);
        match flow(InitialData::from_box(&init, VarOrder::None), VarOrder::None, period, &IntegratorConfig::default())
        {
            Ok(chain) => {
                for e in &chain {
                    let ok = model::energy(&project(&e.end), &params).intersects(e_init)
                        && model::energy(&project(&e.tube), &params).intersects(e_init);
                    t.check(ok, || format!("energy enclosure misses E0 at t = {:?} from {p:?}", e.time));
                }
            }
            Err(err) => t.check(false, || format!("interval flow from {p:?} failed: {err}")),
        }
    }
    t.done()
}

/// First and second partials of `G` from the variational equations against
/// central differences of double-double shooting.
fn derivatives(g: &ShootingG, points: &[OrbitPoint]) -> SuiteResult {
    let mut first = Tally::new("DP and D2P vs finite differences", 1e-4);
    let mut second_worst: f64 = 0.0;
    let rel = |an: f64, fd: f64| (an - fd).abs() / an.abs().max(fd.abs()).max(1e-300);
    for p in points {
        let (Ok(e), Some(fd)) =
            (g.eval(Interval::point(p.xi), Interval::point(p.x), VarOrder::Second), nonrigorous::g_partials(p.xi, p.x))
        else {
            first.check(false, || format!("evaluation failed at {p:?}"));
            continue;
        };
        let (gx, gxi, d2) = (e.d_dx.unwrap(), e.d_dxi.unwrap(), e.d2.unwrap());
        for (name, an, fd) in [("G_x", gx, fd.g_x), ("G_xi", gxi, fd.g_xi)] {
            let r = rel(an.mid(), fd);
            first.error(r, || format!("{name} at {p:?}: {} vs {fd}", an.mid()));
        }
        for (name, an, fd) in [("G_xx", d2.xx, fd.g_xx), ("G_xxi", d2.xxi, fd.g_xxi), ("G_xixi", d2.xixi, fd.g_xixi)] {
            let r = rel(an.mid(), fd);
            second_worst = second_worst.max(r);
            first.samples += 1;
            if !(r <= 1e-3) {
                first.violations += 1;
                first.notes.push(format!("{name} at {p:?}: {} vs {fd} (rel {r:e})", an.mid()));
            }
        }
    }
    first.notes.push(format!("worst second-order relative error {second_worst:e} (tolerance 1e-3)"));
    first.done()
}

/// `s ∈ R φ_t R φ_t (s)` for random point states.
fn reversibility(seed: u64, n: usize) -> SuiteResult {
    let mut t = Tally::new("reversibility", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e7);
    let cfg = IntegratorConfig::default();
    for _ in 0..n {
        let s = [
            rng.gen_range(-1.6..1.6),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(1.5..2.8),
        ];
        let time = rng.gen_range(0.5..2.0);
        let reflect = |v: &crate::odeint::Vec5| {
            let mut r = *v;
            r[1] = -r[1];
            r[3] = -r[3];
            r
        };
        let there = flow(InitialData::from_box(&extended_point(s), VarOrder::None), VarOrder::None, time, &cfg);
        let back = there.and_then(|c| {
            let end = reflect(&c.last().expect("one step").end);
            flow(InitialData::from_box(&end, VarOrder::None), VarOrder::None, time, &cfg)
        });
        match back {
            Ok(c) => {
                let r = reflect(&c.last().expect("one step").end);
                t.check(r.contains(&s), || format!("{s:?} not in its round trip over t = {time}"));
            }
            Err(e) => t.check(false, || format!("flow from {s:?} failed: {e}")),
        }
    }
    t.done()
}

/// Interval Newton on `x² − 2` and on the fold model `G = x² − ξ`, whose
/// fold sits at the origin; also a shifted copy.
fn newton() -> SuiteResult {
    let mut t = Tally::new("interval Newton", 0.0);
    let mut x = Interval::new(1.0, 2.0).unwrap();
    let mut proven = false;
    for _ in 0..8 {
        if x.diam() <= 4.0 * f64::EPSILON {
            break;
        }
        let out = newton_scalar::<std::convert::Infallible>(|v| Ok(v.sqr() - Interval::point(2.0)), |v| Ok(v.scale(2.0)), x, x.mid())
            .unwrap();
        proven |= out.is_proven();
        match out.refined[0].intersect(x) {
            Some(r) if r.diam() < x.diam() => x = r,
            _ => break,
        }
    }
    let exact = dd_le(prod(x.lo(), x.lo()), DD::new(2.0)) && dd_le(DD::new(2.0), prod(x.hi(), x.hi()));
    t.check(proven && exact && x.diam() <= 4.0 * f64::EPSILON, || format!("sqrt 2 enclosure {x:?}"));

    for (c, d) in [(0.0, 0.0), (1.25, -0.5)] {
        let g = FnG(move |xi: Interval, x: Interval, order: VarOrder| {
            let u = x - Interval::point(d);
            GEvaluation {
                value: u.sqr() - (xi - Interval::point(c)),
                d_dx: (order >= VarOrder::First).then(|| u.scale(2.0)),
                d_dxi: (order >= VarOrder::First).then_some(Interval::point(-1.0)),
                d2: (order >= VarOrder::Second).then_some(GSecond {
                    xx: Interval::point(2.0),
                    xxi: Interval::ZERO,
                    xixi: Interval::ZERO,
                }),
                extrema: vec![],
                crossing_times: vec![],
            }
        });
        let ok = match locate_fold(&g, (c + 1e-5, d - 1e-5), 1e-3) {
            Ok(fc) => fc.newton2d.is_proven() && fc.xi_star.contains(c) && fc.x_star.contains(d),
            Err(_) => false,
        };
        t.check(ok, || format!("fold model with fold at ({c}, {d})"));
    }
    t.done()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn containment_suite_is_clean_on_a_small_sample() {
        let r = containment(1, 20_000);
        assert!(r.passed(), "{:?}", r.notes);
    }

    #[test]
    fn dd_ordering_is_exact() {
        let tiny = DD { hi: 1.0, lo: 1e-30 };
        assert!(dd_le(DD::new(1.0), tiny) && !dd_le(tiny, DD::new(1.0)));
        assert!(!dd_in(prod(0.1, 0.1), Interval::point(0.1 * 0.1)));
    }

    #[test]
    fn newton_suite_passes() {
        assert!(newton().passed());
    }

    #[test]
    fn a_bad_interval_operation_would_be_caught() {
        // rounding to nearest instead of outward misses the exact product
        let x = Interval::point(0.1);
        let wrong = Interval::point(0.1 * 0.1);
        assert!(dd_in(prod(0.1, 0.1), x * x) && !dd_in(prod(0.1, 0.1), wrong));
    }
}

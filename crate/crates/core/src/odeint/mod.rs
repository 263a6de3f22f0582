//! Rigorous Taylor integration of the extended system with first and second
//! order variational equations (a C^r-Lohner scheme).
//!
//! One step from a set `[X]` works as follows:
//!
//! 1. a step size is chosen from the last two Taylor coefficients at the
//!    centre of `[X]`;
//! 2. a rough enclosure `Y ⊇ φ([0,h], [X])` is validated by the high-order
//!    inclusion `Σ_{k<p} c_k([X])[0,h]^k + c_p(Y)[0,h]^p ⊂ int Y`, inflating
//!    `Y` and halving `h` on failure;
//! 3. the end state is `T_p(x̄) + c_{p+1}(Y)h^{p+1} + DT_p([X])(x − x̄)`, kept
//!    as a doubleton (see [`lohner`]);
//! 4. derivatives are composed by the chain rule; the Lagrange remainders
//!    of the variational equations come from `Y` and from rough enclosures
//!    of `Dφ` and `D²φ` over `[0,h]`, validated the same way as `Y`.

pub mod lohner;
mod step;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::interval::{Interval, IntervalVector};
use crate::model::{ExtendedState, ModelParams, SystemState};
use crate::taylor::Field;
pub use lohner::{AffineSet, ColumnSet, Mat5, Representation, Vec5};
pub use step::{Hess, StepData};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("no rough enclosure could be validated at t = {t} (step {h})")]
    ValidationFailed { t: f64, h: f64 },
    #[error("required step {h} fell below the minimum step at t = {t}")]
    StepUnderflow { t: f64, h: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("enclosure became unbounded at t = {t}")]
    Unbounded { t: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub taylor_order: usize,
    pub min_step: f64,
    pub max_step: f64,
    pub tolerance: f64,
    #[serde(with = "rep_serde")]
    pub representation: Representation,
}

mod rep_serde {
    use super::Representation;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Representation, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match r {
            Representation::Doubleton => "doubleton",
            Representation::Box => "box",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Representation, D::Error> {
        match String::deserialize(d)?.as_str() {
            "doubleton" => Ok(Representation::Doubleton),
            "box" => Ok(Representation::Box),
            other => Err(serde::de::Error::custom(format!("unknown representation {other}"))),
        }
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            taylor_order: 20,
            min_step: 1e-10,
            max_step: 1.0,
            tolerance: 1e-14,
            representation: Representation::Doubleton,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), OdeError> {
        if self.taylor_order < 3 || self.taylor_order > 60 {
            return Err(OdeError::InvalidConfig(format!(
                "taylor_order {} outside 3..=60",
                self.taylor_order
            )));
        }
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.min_step) || !ok(self.max_step) || self.min_step > self.max_step {
            return Err(OdeError::InvalidConfig(format!(
                "need 0 < min_step ({}) <= max_step ({})",
                self.min_step, self.max_step
            )));
        }
        if !ok(self.tolerance) || self.tolerance >= 1.0 {
            return Err(OdeError::InvalidConfig(format!("tolerance {}", self.tolerance)));
        }
        Ok(())
    }
}

/// Which derivatives of the flow are carried along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarOrder {
    None = 0,
    First = 1,
    Second = 2,
}

impl VarOrder {
    pub fn from_level(level: u8) -> Option<Self> {
        match level {
            0 => Some(VarOrder::None),
            1 => Some(VarOrder::First),
            2 => Some(VarOrder::Second),
            _ => None,
        }
    }
}

/// Number of packed second-derivative columns for `m` directions.
pub fn pair_count(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Position of the direction pair `(j, k)` among `m` directions.
pub fn pair_index(m: usize, j: usize, k: usize) -> usize {
    let (a, b) = if j <= k { (j, k) } else { (k, j) };
    a * m - a * (a + 1) / 2 + b
}

/// Enclosure of one accepted step (or of a chain of steps up to its end).
#[derive(Clone, Debug)]
pub struct FlowEnclosure {
    pub time_step: Interval,
    /// Time at the end of this step, measured from the start of the run.
    pub time: Interval,
    pub start: Vec5,
    pub end: Vec5,
    pub tube: Vec5,
    /// Derivative of the flow at the end of the step with respect to the
    /// directions the run was started with; one column per direction.
    pub monodromy: Option<Vec<Vec5>>,
    /// Packed second derivatives, one column per direction pair.
    pub second_variations: Option<Vec<Vec5>>,
}

/// Initial data for an integrator run.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub set: AffineSet,
    /// `V(0)`, one column per direction; required for `VarOrder::First` and up.
    pub v0: Vec<Vec5>,
    /// `H(0)`, packed columns; required for `VarOrder::Second`.
    pub h0: Vec<Vec5>,
}

impl InitialData {
    /// A box with the identity as initial derivative.
    pub fn from_box(x: &Vec5, order: VarOrder) -> Self {
        let v0 = if order >= VarOrder::First {
            (0..5)
                .map(|j| {
                    let mut e = Vec5::zero();
                    e[j] = Interval::ONE;
                    e
                })
                .collect()
        } else {
            Vec::new()
        };
        let h0 = if order >= VarOrder::Second {
            vec![Vec5::zero(); pair_count(5)]
        } else {
            Vec::new()
        };
        InitialData { set: AffineSet::from_box(x), v0, h0 }
    }
}

/// Single-use, single-threaded integrator.
#[derive(Clone, Debug)]
pub struct Integrator {
    pub cfg: IntegratorConfig,
    pub order: VarOrder,
    pub time: Interval,
    pub set: AffineSet,
    pub v: Option<ColumnSet>,
    pub h: Option<ColumnSet>,
    field: Field,
    trace: Option<Vec<TraceRow>>,
}

#[derive(Clone, Copy, Debug)]
struct TraceRow {
    t: f64,
    h: f64,
    state_diam: f64,
    var_diam: f64,
}

impl Integrator {
    pub fn new(init: InitialData, order: VarOrder, cfg: IntegratorConfig) -> Result<Self, OdeError> {
        cfg.validate()?;
        if order >= VarOrder::First && init.v0.is_empty() {
            return Err(OdeError::InvalidConfig("first variations need V(0)".into()));
        }
        let m = init.v0.len();
        if order >= VarOrder::Second && init.h0.len() != pair_count(m) {
            return Err(OdeError::InvalidConfig("second variations need packed H(0)".into()));
        }
        Ok(Integrator {
            cfg,
            order,
            time: Interval::ZERO,
            v: (order >= VarOrder::First).then(|| ColumnSet::from_columns(&init.v0)),
            h: (order >= VarOrder::Second).then(|| ColumnSet::from_columns(&init.h0)),
            set: init.set,
            field: Field::SwiftHohenberg,
            trace: None,
        })
    }

    /// Replaces the right-hand side; only meant for tests.
    #[doc(hidden)]
    pub fn with_field(mut self, field: Field) -> Self {
        self.field = field;
        self
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn directions(&self) -> usize {
        self.v.as_ref().map_or(0, ColumnSet::len)
    }

    pub fn state(&self) -> Vec5 {
        self.set.hull()
    }

    /// Validates a step of length at most `h_max` without committing it.
    pub fn prepare(&self, h_max: f64) -> Result<StepData, OdeError> {
        StepData::prepare(self.field, &self.set, self.order, &self.cfg, h_max, self.time.mid())
    }

    /// Advances to the end of a prepared step.
    pub fn commit(&mut self, data: &StepData) -> Result<FlowEnclosure, OdeError> {
        self.commit_at(data, Interval::point(data.h))
    }

    /// Advances by an interval time `t ⊂ [0, h]` of a prepared step.
    pub fn commit_at(&mut self, data: &StepData, t: Interval) -> Result<FlowEnclosure, OdeError> {
        let start = self.set.hull();
        let rep = self.cfg.representation;
        let (set, m) = data.advance_set(&self.set, t, rep);
        let h_new = match (&self.h, &self.v) {
            (Some(hs), Some(vs)) => {
                let k = data.second_at(t);
                let src = second_source(&k, &vs.columns());
                Some(hs.propagate(&m, Some(&src), rep))
            }
            _ => None,
        };
        let v_new = self.v.as_ref().map(|v| v.propagate(&m, None, rep));
        let end = set.hull();
        if !end.is_bounded() {
            return Err(OdeError::Unbounded { t: self.time.hi() });
        }
        self.set = set;
        self.v = v_new;
        self.h = h_new;
        self.time = self.time + t;
        if let Some(tr) = self.trace.as_mut() {
            let vd = self
                .v
                .as_ref()
                .map_or(0.0, |v| v.columns().iter().map(|c| c.max_diam()).fold(0.0, f64::max));
            tr.push(TraceRow { t: self.time.mid(), h: t.hi(), state_diam: end.max_diam(), var_diam: vd });
        }
        Ok(FlowEnclosure {
            time_step: t,
            time: self.time,
            start,
            end,
            tube: data.tube,
            monodromy: self.v.as_ref().map(ColumnSet::columns),
            second_variations: self.h.as_ref().map(ColumnSet::columns),
        })
    }

    /// One full step with the automatic step size.
    pub fn step(&mut self) -> Result<FlowEnclosure, OdeError> {
        let data = self.prepare(self.cfg.max_step)?;
        self.commit(&data)
    }

    /// Steps until the elapsed time reaches `t_target` (see [`flow`]).
    pub fn run_to(&mut self, t_target: f64) -> Result<Vec<FlowEnclosure>, OdeError> {
        if !(t_target > 0.0 && t_target.is_finite()) {
            return Err(OdeError::InvalidConfig(format!("t_target {t_target}")));
        }
        let target = Interval::point(t_target);
        let mut chain = Vec::new();
        loop {
            let remaining = target - self.time;
            if remaining.hi() <= 0.0 {
                break;
            }
            let data = self.prepare(remaining.hi().min(self.cfg.max_step))?;
            if data.h >= remaining.hi() {
                // last step: evaluate at the exact remaining time
                let rest = Interval::new(remaining.lo().max(0.0), remaining.hi())
                    .map_err(|_| OdeError::Unbounded { t: self.time.hi() })?;
                chain.push(self.commit_at(&data, rest)?);
                break;
            }
            if data.h < self.cfg.min_step {
                return Err(OdeError::StepUnderflow { t: self.time.mid(), h: data.h });
            }
            chain.push(self.commit(&data)?);
        }
        Ok(chain)
    }

    /// Writes the accepted-step trace as CSV.
    pub fn write_trace<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,h,state_diam,variation_diam")?;
        for r in self.trace.iter().flatten() {
            writeln!(out, "{:e},{:e},{:e},{:e}", r.t, r.h, r.state_diam, r.var_diam)?;
        }
        Ok(())
    }
}

/// `Σ_{a,b} K_{·,ab} V_{a j} V_{b k}` for every packed pair `(j, k)`.
pub fn second_source(k: &Hess, v: &[Vec5]) -> Vec<Vec5> {
    use crate::taylor::sym_index;
    let m = v.len();
    let mut out = vec![Vec5::zero(); pair_count(m)];
    for j in 0..m {
        for l in j..m {
            let mut col = Vec5::zero();
            for (i, ki) in k.iter().enumerate() {
                let mut acc = Interval::ZERO;
                for a in 0..5 {
                    for b in 0..5 {
                        let kab = ki[sym_index(a, b)];
                        if kab == Interval::ZERO {
                            continue;
                        }
                        acc += kab * v[j][a] * v[l][b];
                    }
                }
                col[i] = acc;
            }
            out[pair_index(m, j, l)] = col;
        }
    }
    out
}

/// Integrates from `init` up to exactly `t_target`, returning one enclosure
/// per accepted step. The final step is evaluated at the interval time
/// `t_target − t_n`, so the last entry encloses the flow at `t_target`.
pub fn flow(
    init: InitialData,
    order: VarOrder,
    t_target: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<FlowEnclosure>, OdeError> {
    Integrator::new(init, order, *cfg)?.run_to(t_target)
}

/// Convenience: a one-step enclosure for a system state with parameter `p`.
pub fn step(s: &SystemState, p: &ModelParams, cfg: &IntegratorConfig) -> Result<FlowEnclosure, OdeError> {
    let x = s.extend(p.xi).to_vector();
    let mut integ = Integrator::new(InitialData::from_box(&x, VarOrder::None), VarOrder::None, *cfg)?;
    integ.step()
}

/// Extended point state as an interval vector.
pub fn extended_point(p: [f64; 5]) -> Vec5 {
    IntervalVector::from_points(p)
}

/// Projection of an extended vector onto the `(x, y, z, w)` state.
pub fn project(v: &Vec5) -> SystemState {
    ExtendedState::from_vector(v).state
}

#[cfg(test)]
mod tests;

use proptest::prelude::*;

use super::*;
use crate::model::{self, ModelParams};
use crate::nonrigorous::{Gbs, DD};
use crate::taylor::Field;

const SEED: (f64, f64) = (2.0316516135713902, -1.5824941113082425);

fn seed_point() -> [f64; 5] {
    let (xi, x) = SEED;
    [x, 0.0, (x * x - 1.0) * std::f64::consts::FRAC_1_SQRT_2, 0.0, xi]
}

fn reference(p: [f64; 5], t: f64) -> [DD; 5] {
    Gbs::dd_default().flow(&p.map(DD::new), t)
}

fn reference_with(p: [f64; 5], t: f64, cubic: bool) -> [DD; 5] {
    let gbs = Gbs { cubic, ..Gbs::dd_default() };
    gbs.flow(&p.map(DD::new), t)
}

fn dd_in(iv: Interval, v: DD) -> bool {
    let slack = 1e-26 * (1.0 + v.hi.abs());
    (DD::new(iv.lo()) - v).hi <= slack && (v - DD::new(iv.hi())).hi <= slack
}

fn encloses(b: &Vec5, v: &[DD; 5]) -> bool {
    (0..5).all(|i| dd_in(b[i], v[i]))
}

fn meets(a: &Vec5, b: &Vec5) -> bool {
    (0..5).all(|i| a[i].intersects(b[i]))
}

fn last(chain: &[FlowEnclosure]) -> &FlowEnclosure {
    chain.last().expect("at least one step")
}

fn point_flow(p: [f64; 5], order: VarOrder, t: f64) -> Vec<FlowEnclosure> {
    flow(InitialData::from_box(&extended_point(p), order), order, t, &IntegratorConfig::default()).unwrap()
}

#[test]
fn equilibria_stay_fixed() {
    for x in [-1.0, 0.0, 1.0] {
        let p = [x, 0.0, 0.0, 0.0, 1.5];
        let s = model::SystemState::from_points([x, 0.0, 0.0, 0.0]);
        let e = step(&s, &ModelParams::new(Interval::point(1.5)), &IntegratorConfig::default()).unwrap();
        assert!(e.end.contains(&p));
        assert!(e.tube.contains(&p));
        assert!(e.end.max_diam() <= 10.0 * f64::EPSILON, "x = {x}: {}", e.end.max_diam());
    }
}

#[test]
fn parameter_component_is_exact() {
    let chain = point_flow(seed_point(), VarOrder::First, 5.0);
    for e in &chain {
        assert_eq!(e.end[4], Interval::point(SEED.0));
    }
    let mut b = extended_point(seed_point());
    b[4] = Interval::new(2.03, 2.04).unwrap();
    let chain = flow(InitialData::from_box(&b, VarOrder::None), VarOrder::None, 3.0, &IntegratorConfig::default())
        .unwrap();
    assert!(chain.iter().all(|e| e.end[4] == b[4]));
}

#[test]
fn long_flow_encloses_reference() {
    let p = seed_point();
    let chain = point_flow(p, VarOrder::None, 9.3);
    let e = last(&chain);
    assert!(e.time.contains(9.3));
    assert!(encloses(&e.end, &reference(p, 9.3)));
    assert!(e.end.max_diam() < 1e-9, "{}", e.end.max_diam());
}

#[test]
fn box_flow_encloses_sampled_trajectories() {
    let p = seed_point();
    let mut b = extended_point(p);
    b[0] = Interval::new(p[0] - 1e-9, p[0] + 1e-9).unwrap();
    b[4] = Interval::new(p[4] - 1e-9, p[4] + 1e-9).unwrap();
    let init = InitialData::from_box(&b, VarOrder::None);
    let e = flow(init, VarOrder::None, 6.0, &IntegratorConfig::default()).unwrap();
    let end = &last(&e).end;
    for (dx, dxi) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0), (0.3, -0.7)] {
        let q = [p[0] + dx * 1e-9, 0.0, p[2], 0.0, p[4] + dxi * 1e-9];
        assert!(encloses(end, &reference(q, 6.0)));
    }
}

#[test]
fn box_representation_is_still_rigorous() {
    let p = seed_point();
    let cfg = IntegratorConfig { representation: Representation::Box, ..Default::default() };
    let chain = flow(InitialData::from_box(&extended_point(p), VarOrder::First), VarOrder::First, 2.0, &cfg)
        .unwrap();
    assert!(encloses(&last(&chain).end, &reference(p, 2.0)));
}

#[test]
fn semigroup_property() {
    let p = seed_point();
    let whole = point_flow(p, VarOrder::None, 4.0);
    let half = point_flow(p, VarOrder::None, 2.0);
    let mid = last(&half).end;
    let rest = flow(InitialData::from_box(&mid, VarOrder::None), VarOrder::None, 2.0, &IntegratorConfig::default())
        .unwrap();
    assert!(meets(&last(&whole).end, &last(&rest).end));
}

#[test]
fn time_reversal_returns_to_mirror_image() {
    let p = [-1.2, 0.3, 0.1, -0.2, 1.7];
    let t = 3.0;
    let a = last(&point_flow(p, VarOrder::None, t)).end;
    let ra = IntervalVector([a[0], -a[1], a[2], -a[3], a[4]]);
    let b = flow(InitialData::from_box(&ra, VarOrder::None), VarOrder::None, t, &IntegratorConfig::default())
        .unwrap();
    let rp = [p[0], -p[1], p[2], -p[3], p[4]];
    assert!(last(&b).end.contains(&rp));
}

#[test]
fn energy_is_consistent_along_steps() {
    let chain = point_flow(seed_point(), VarOrder::None, 8.0);
    let params = ModelParams::new(Interval::point(SEED.0));
    for e in &chain {
        let e0 = model::energy(&project(&e.start), &params);
        let e1 = model::energy(&project(&e.end), &params);
        assert!(e0.intersects(e1));
    }
}

fn expm(a: &[[f64; 5]; 5], t: f64) -> [[f64; 5]; 5] {
    let mul = |x: &[[f64; 5]; 5], y: &[[f64; 5]; 5]| {
        let mut o = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                o[i][j] = (0..5).map(|k| x[i][k] * y[k][j]).sum();
            }
        }
        o
    };
    let squarings = 10;
    let s = t / f64::from(1u32 << squarings);
    let mut term = lohner::identity();
    let mut sum = lohner::identity();
    for k in 1..30 {
        let mut scaled = *a;
        for row in scaled.iter_mut() {
            for v in row.iter_mut() {
                *v *= s / k as f64;
            }
        }
        term = mul(&term, &scaled);
        for i in 0..5 {
            for j in 0..5 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}

#[test]
fn monodromy_at_equilibrium_is_matrix_exponential() {
    for x in [0.0, 1.0] {
        let xi = 1.5;
        let p = [x, 0.0, 0.0, 0.0, xi];
        let jac = model::extended_jacobian(&ExtendedState::from_vector(&extended_point(p))).mid();
        let ex = expm(&jac, 1.0);
        let chain = point_flow(p, VarOrder::First, 1.0);
        let m = last(&chain).monodromy.clone().unwrap();
        for (j, col) in m.iter().enumerate() {
            for i in 0..5 {
                let slack = Interval::symmetric(1e-12 * (1.0 + ex[i][j].abs()));
                assert!(col[i].intersects(Interval::point(ex[i][j]) + slack), "x={x} ({i},{j})");
                assert!(col[i].diam() < 1e-12);
            }
        }
    }
}

#[test]
fn first_variation_over_a_short_step() {
    let p = seed_point();
    let h = 1e-3;
    let chain = point_flow(p, VarOrder::First, h);
    let m = last(&chain).monodromy.clone().unwrap();
    let jac = model::extended_jacobian(&ExtendedState::from_vector(&extended_point(p))).mid();
    for (j, col) in m.iter().enumerate() {
        for i in 0..5 {
            let approx = if i == j { 1.0 } else { 0.0 } + h * jac[i][j];
            assert!((col[i].mid() - approx).abs() <= 50.0 * h * h, "({i},{j})");
        }
    }
}

fn fd_first(p: [f64; 5], t: f64, a: usize, eps: f64) -> [f64; 5] {
    let mut pp = p;
    let mut pm = p;
    pp[a] += eps;
    pm[a] -= eps;
    let (fp, fm) = (reference(pp, t), reference(pm, t));
    std::array::from_fn(|i| ((fp[i] - fm[i]).hi) / (2.0 * eps))
}

fn fd_second(p: [f64; 5], t: f64, a: usize, b: usize, eps: f64) -> [f64; 5] {
    let shifted = |da: f64, db: f64| {
        let mut q = p;
        q[a] += da;
        q[b] += db;
        reference(q, t)
    };
    if a == b {
        let (fp, f0, fm) = (shifted(eps, 0.0), reference(p, t), shifted(-eps, 0.0));
        return std::array::from_fn(|i| (fp[i] - f0[i] - f0[i] + fm[i]).hi / (eps * eps));
    }
    let (pp, pm, mp, mm) = (shifted(eps, eps), shifted(eps, -eps), shifted(-eps, eps), shifted(-eps, -eps));
    std::array::from_fn(|i| (pp[i] - pm[i] - mp[i] + mm[i]).hi / (4.0 * eps * eps))
}

#[test]
fn variations_match_finite_differences() {
    let p = seed_point();
    let t = 3.0;
    let chain = point_flow(p, VarOrder::Second, t);
    let e = last(&chain);
    let v = e.monodromy.clone().unwrap();
    let h = e.second_variations.clone().unwrap();
    let close = |an: f64, fd: f64, rel: f64| (an - fd).abs() <= rel * an.abs().max(fd.abs()).max(1.0);
    for a in 0..5 {
        let fd = fd_first(p, t, a, 1e-7);
        for i in 0..5 {
            assert!(close(v[a][i].mid(), fd[i], 1e-4), "D[{i}][{a}]: {} vs {}", v[a][i].mid(), fd[i]);
        }
        for b in a..5 {
            let fd = fd_second(p, t, a, b, 1e-5);
            let col = h[pair_index(5, a, b)];
            for i in 0..5 {
                assert!(close(col[i].mid(), fd[i], 1e-3), "D2[{i}][{a}{b}]: {} vs {}", col[i].mid(), fd[i]);
            }
        }
    }
}

#[test]
fn linear_field_has_no_second_variation_in_state_directions() {
    let p = seed_point();
    let init = InitialData::from_box(&extended_point(p), VarOrder::Second);
    let mut integ = Integrator::new(init, VarOrder::Second, IntegratorConfig::default())
        .unwrap()
        .with_field(Field::Linear);
    let chain = integ.run_to(2.0).unwrap();
    let e = last(&chain);
    assert!(encloses(&e.end, &reference_with(p, 2.0, false)));
    let h = e.second_variations.clone().unwrap();
    for a in 0..4 {
        for b in a..4 {
            let col = h[pair_index(5, a, b)];
            for i in 0..5 {
                assert!(col[i].contains_zero() && col[i].mag() < 1e-9, "({a},{b}) row {i}: {:?}", col[i]);
            }
        }
    }
}

#[test]
fn raising_the_order_does_not_widen_a_fixed_step() {
    let p = seed_point();
    let mut b = extended_point(p);
    b[0] = Interval::new(p[0] - 1e-8, p[0] + 1e-8).unwrap();
    let h = 0.02;
    let width = |order: usize| {
        let cfg = IntegratorConfig { taylor_order: order, ..Default::default() };
        let mut integ = Integrator::new(InitialData::from_box(&b, VarOrder::None), VarOrder::None, cfg).unwrap();
        let data = integ.prepare(h).unwrap();
        assert_eq!(data.h, h);
        integ.commit(&data).unwrap().end.max_diam()
    };
    assert!(width(20) <= 1.1 * width(10));
}

#[test]
fn trace_has_one_row_per_step() {
    let init = InitialData::from_box(&extended_point(seed_point()), VarOrder::First);
    let mut integ = Integrator::new(init, VarOrder::First, IntegratorConfig::default()).unwrap();
    integ.enable_trace();
    let chain = integ.run_to(1.0).unwrap();
    let mut buf = Vec::new();
    integ.write_trace(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,h,state_diam,variation_diam"));
    assert_eq!(lines.count(), chain.len());
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad = [
        IntegratorConfig { taylor_order: 2, ..Default::default() },
        IntegratorConfig { min_step: 0.0, ..Default::default() },
        IntegratorConfig { min_step: 2.0, max_step: 1.0, ..Default::default() },
        IntegratorConfig { tolerance: f64::NAN, ..Default::default() },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(OdeError::InvalidConfig(_))));
    }
    let init = InitialData::from_box(&extended_point(seed_point()), VarOrder::None);
    assert!(Integrator::new(init.clone(), VarOrder::First, IntegratorConfig::default()).is_err());
    assert!(flow(init, VarOrder::None, -1.0, &IntegratorConfig::default()).is_err());
}

#[test]
fn config_roundtrips_through_json() {
    let cfg = IntegratorConfig { representation: Representation::Box, ..Default::default() };
    let text = serde_json::to_string(&cfg).unwrap();
    assert!(text.contains("\"box\""));
    assert_eq!(serde_json::from_str::<IntegratorConfig>(&text).unwrap(), cfg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn single_step_encloses_reference(
        x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0, w in -2.0f64..2.0, xi in 0.0f64..2.1,
    ) {
        let p = [x, y, z, w, xi];
        let mut integ = Integrator::new(
            InitialData::from_box(&extended_point(p), VarOrder::None),
            VarOrder::None,
            IntegratorConfig::default(),
        ).unwrap();
        let e = integ.step().unwrap();
        prop_assert!(encloses(&e.end, &reference(p, e.time_step.hi())));
        prop_assert_eq!(e.end[4], Interval::point(xi));
        let params = ModelParams::new(Interval::point(xi));
        let e0 = model::energy(&project(&e.start), &params);
        let e1 = model::energy(&project(&e.end), &params);
        prop_assert!(e0.intersects(e1));
    }
}


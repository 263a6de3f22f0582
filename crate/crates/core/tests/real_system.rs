//! End-to-end runs on the real shooting map over short ranges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shfold::continuation::{certify_branch, glue_check, ContinuationConfig, Orientation};
use shfold::interval::Interval;
use shfold::nonrigorous;
use shfold::pipeline::{self, RunConfig};
use shfold::poincare::ShootingG;
use shfold::reference::XI_SWITCH;
use shfold::seeds::{SeedFile, Which};

#[test]
fn certified_boxes_contain_independent_shooting_solutions() {
    let g = ShootingG::default();
    let (a, b) = (2.0, 2.005);
    let seed = SeedFile::builtin().branch_at(&g, a, Which::Lower).unwrap();
    let branch =
        certify_branch(&g, Interval::new(a, b).unwrap(), seed, Orientation::ParamIsXi, &ContinuationConfig::default())
            .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..50 {
        let xi = rng.gen_range(a..b);
        let s = branch.segments.iter().find(|s| s.param_box.contains(xi)).unwrap();
        let x = nonrigorous::solve_branch_point(xi, s.refined().mid()).unwrap();
        assert!(s.refined().contains(x), "xi = {xi}: {x} outside {:?}", s.refined());
    }
}

#[test]
fn short_run_through_all_stages() {
    let cfg = RunConfig::default().with_lower(XI_SWITCH - 1e-4);
    let s1 = pipeline::step1(&cfg).unwrap();
    assert!(s1.comparisons().iter().all(|c| c.intersects));
    let s2 = pipeline::step2(&cfg, &s1).unwrap();
    assert!(s2.concavity.concave);
    let fc = pipeline::step3(&cfg, &s2).unwrap();
    assert!(pipeline::fold_comparisons(&fc).iter().all(|c| c.intersects));
    let theorem = pipeline::step4(&s1, &s2, &fc).unwrap();
    assert_eq!(theorem.fold.xi_star, fc.xi_star);

    // moving the end of the lower branch by 1e-3 must break the join
    let mut moved = s1.lower.clone();
    let shift = Interval::point(1e-3);
    let last = moved.segments.len() - 1;
    moved.segments[last].solution_box = moved.segments[last].solution_box + shift;
    moved.segments[last].newton.refined[0] = moved.segments[last].newton.refined[0] + shift;
    moved.endpoints[1] = moved.endpoints[1] + shift;
    assert!(glue_check(&moved, &s1.upper, &s2.curve).is_err());
    assert!(pipeline::step4(&pipeline::Step1 { lower: moved, ..s1.clone() }, &s2, &fc).is_err());
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windtree_core::billiard::*;
use windtree_core::homology::Block;
use windtree_core::invariant::block_invariant;
use windtree_core::quad::QuadNum;
use windtree_core::section::*;
use windtree_core::surface::Cover;

const TABLE: Table = Table { a: 0.5, b: 0.5 };

fn primary() -> SectionData {
    let p = WindTreeParams { a: (1, 2), b: (1, 2), slope: (-1, 1, 1, 2) };
    build_section(&p, Cover::Fourfold, SectionBudget::default()).unwrap()
}

fn free_point(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let q = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        if TABLE.margin(q.0, q.1) > 0.01 {
            return q;
        }
    }
}

#[test]
fn long_trajectory_is_elastic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let v = (0.6, 0.8);
    let tr = simulate_billiard(TABLE, free_point(&mut rng), v, 30_000.0, 1_000_000).unwrap_or_else(|e| panic!("{e}"));
    assert!(tr.bounces >= 10_000, "{}", tr.bounces);
    for w in tr.velocities.iter() {
        assert!((w.0.hypot(w.1) - 1.0).abs() < 4.0 * f64::EPSILON);
        assert!((w.0.abs() - 0.6).abs() == 0.0 && (w.1.abs() - 0.8).abs() == 0.0);
    }
    for (i, p) in tr.points.iter().enumerate() {
        assert!(TABLE.margin(p.0, p.1) >= -1e-12, "point {i}: {p:?}");
    }
    // Sample between bounces as well.
    for k in 0..10_000 {
        let (p, _) = tr.at(tr.length() * k as f64 / 10_000.0);
        assert!(TABLE.margin(p.0, p.1) >= -1e-12);
    }
}

#[test]
fn start_inside_is_rejected() {
    assert!(matches!(simulate_billiard(TABLE, (0.1, 0.1), (1.0, 1.0), 5.0, 10), Err(BilliardError::StartInsideObstacle)));
    assert!(matches!(simulate_billiard(TABLE, (0.5, 0.5), (0.0, 0.0), 5.0, 10), Err(BilliardError::BadVelocity)));
}

#[test]
fn corner_hits_terminate() {
    // Aim at the corner (0.25, 0.25) along the diagonal.
    let r = simulate_billiard(TABLE, (0.45, 0.45), (-1.0, -1.0), 5.0, 100);
    assert!(matches!(r, Err(BilliardError::CornerHit(..))), "{r:?}");
}

#[test]
fn point_on_section_lifts_to_itself() {
    let sd = primary();
    let lift = SectionLift::new(&sd, 100_000).unwrap();
    // Just right of the bottom-right corner of the obstacle at the origin.
    let h = lift.trace_rational(3, 10, -1, 4, (1, 1)).unwrap();
    assert_eq!(h.a, [0, 0]);
    assert_eq!(h.flight, QuadNum::zero(2));
    assert_eq!(h.t, QuadNum::from_ratio(1, 20, 2));
    let f = lift.trace_fast((0.3, -0.25), (1, 1)).unwrap();
    assert!(f.t.contains(0.05) && f.flight == 0.0 && f.a == [0, 0]);
}

#[test]
fn fast_lift_agrees_with_exact_lift() {
    let sd = primary();
    let lift = SectionLift::new(&sd, 100_000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut compared = 0;
    for _ in 0..200 {
        let (xn, yn) = (rng.gen_range(-4000i64..4000), rng.gen_range(-4000i64..4000));
        let s = [(1i8, 1i8), (-1, 1), (1, -1), (-1, -1)][rng.gen_range(0..4)];
        let fast = lift.trace_fast((xn as f64 / 1000.0, yn as f64 / 1000.0), s);
        let ex = lift.trace_rational(xn, 1000, yn, 1000, s);
        match (fast, ex) {
            (Ok(f), Ok(e)) => {
                assert_eq!(f.a, e.a);
                assert!(f.x.contains(e.x.to_f64()));
                compared += 1;
            }
            (Err(BilliardError::StartInsideObstacle), Err(BilliardError::StartInsideObstacle)) => {}
            (f, e) => panic!("{f:?} vs {e:?}"),
        }
    }
    assert!(compared > 100);
}

#[test]
fn flowing_forward_keeps_the_lift() {
    let sd = primary();
    let lift = SectionLift::new(&sd, 100_000).unwrap();
    let s = 2f64.sqrt() - 1.0;
    let v = (s / s.hypot(1.0), 1.0 / s.hypot(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let p = free_point(&mut rng);
        let h0 = lift.trace_fast(p, (1, 1)).unwrap();
        let tr = simulate_billiard(TABLE, p, v, 1e-3, 10).unwrap();
        if tr.bounces > 0 || h0.flight < 1e-3 {
            continue;
        }
        let q = *tr.points.last().unwrap();
        let h1 = lift.trace_fast(q, (1, 1)).unwrap();
        assert_eq!(h0.a, h1.a);
        assert!(h0.x.overlaps(h1.x));
        assert!((h0.flight - h1.flight - 1e-3).abs() < 1e-9);
    }
}

#[test]
fn crossing_a_vertical_wall_moves_the_sheet() {
    let sd = primary();
    let lift = SectionLift::new(&sd, 100_000).unwrap();
    // Horizontal unit translation of a point commutes with the flow and shifts the lift by one.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..30 {
        let (xn, yn) = (rng.gen_range(-3000i64..3000), rng.gen_range(-3000i64..3000));
        let (Ok(a), Ok(b)) = (lift.trace_rational(xn, 1000, yn, 1000, (1, 1)), lift.trace_rational(xn + 1000, 1000, yn, 1000, (1, 1))) else { continue };
        assert_eq!(b.a[0] - a.a[0], 1);
        assert_eq!(a.x, b.x);
    }
}

#[test]
fn hat_h_is_constant_along_trajectories() {
    let sd = primary();
    let (f, _) = block_invariant(&sd, Block::MinusPlus).unwrap();
    let lift = SectionLift::new(&sd, 100_000).unwrap();
    let s = 2f64.sqrt() - 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let tr = simulate_billiard(TABLE, free_point(&mut rng), (s, 1.0), 40.0, 100_000).unwrap();
        let mut first = None;
        for i in 0..80 {
            let (q, v) = tr.at(i as f64 * 0.5);
            if TABLE.margin(q.0, q.1) <= 1e-9 {
                continue;
            }
            let h = lift.trace_fast(q, (v.0.signum() as i8, v.1.signum() as i8)).unwrap();
            let tp = f.hat_h(h.x, &h.a[..1], 30).unwrap();
            match &first {
                None => first = Some(tp),
                Some(t) => assert!(f.same_class(t, &tp)),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn reflections_keep_angles(x in -3.0f64..3.0, y in -3.0f64..3.0, th in 0.05f64..1.5) {
        prop_assume!(TABLE.margin(x, y) > 1e-3);
        let v = (th.cos(), th.sin());
        if let Ok(tr) = simulate_billiard(TABLE, (x, y), v, 50.0, 10_000) {
            for w in &tr.velocities {
                prop_assert_eq!((w.0.abs(), w.1.abs()), (v.0, v.1));
            }
            for p in &tr.points {
                prop_assert!(TABLE.margin(p.0, p.1) >= -1e-12);
            }
        }
    }
}

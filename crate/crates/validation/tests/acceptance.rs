use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windtree::commands::{hdim_chain, middle_thirds, render_parallel};
use windtree::formats::raster_bytes;
use windtree_core::adic::{stable_spectrum, TransferData};
use windtree_core::billiard::{simulate_billiard, SectionLift, Table};
use windtree_core::hausdorff::{beta0, box_dimension_estimate};
use windtree_core::homology::Block;
use windtree_core::iet::{Direction, PermutationPair};
use windtree_core::interval::Interval;
use windtree_core::invariant::{block_invariant, certify_invariance, gamma_instability, TorusPoint};
use windtree_core::rauzy::{parse_word, PeriodicIet, RauzyLoop};
use windtree_core::render::{PlaneWindow, RenderMode, RenderSettings, Renderer};
use windtree_core::section::{build_section, SectionBudget, SectionData, WindTreeParams};
use windtree_core::surface::Cover;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn golden() -> PeriodicIet {
    let swap = PermutationPair::new(vec![0, 1], vec![1, 0]).unwrap();
    PeriodicIet::from_loop(RauzyLoop::new(swap, parse_word("bt").unwrap()).unwrap()).unwrap()
}

fn golden_td() -> TransferData {
    let p = golden();
    let pair = stable_spectrum(p.matrix(), None).unwrap().pairs.remove(0);
    TransferData::new(&p, pair).unwrap()
}

fn primary() -> SectionData {
    let p = WindTreeParams { a: (1, 2), b: (1, 2), slope: (-1, 1, 1, 2) };
    build_section(&p, Cover::Fourfold, SectionBudget::default()).unwrap()
}

fn primary_td(sd: &SectionData) -> TransferData {
    block_invariant(sd, Block::MinusPlus).unwrap().0.transfers.remove(0)
}

/// Walks points of the level-k induced interval through the original map and
/// compares the direct Birkhoff sums with `(A^k)^T phi`.
fn birkhoff_mismatches(p: &PeriodicIet, phis: &[Vec<i64>]) -> usize {
    let iet = &p.iet;
    let n = p.len();
    let rho = p.rho.mid();
    let mut bad = 0;
    for k in 1..=4u32 {
        let ak = p.matrix().pow(k).unwrap();
        let heights = ak.column_sums();
        let scale = rho.powi(-(k as i32));
        for phi in phis {
            let want = ak.transpose_apply(phi).unwrap();
            for j in 0..n {
                for frac in [0.31, 0.5, 0.77] {
                    let x0 = scale * (iet.top_left(j) + frac * iet.lengths[j].mid());
                    let (mut x, mut sum, mut steps) = (x0, 0i64, 0i64);
                    loop {
                        sum += phi[iet.letter_at(x).unwrap()];
                        x = iet.evaluate(x, Direction::Forward).unwrap();
                        steps += 1;
                        if x < scale || steps > 10 * heights[j] {
                            break;
                        }
                    }
                    if steps != heights[j] || sum != want[j] {
                        bad += 1;
                    }
                }
            }
        }
    }
    bad
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let g = golden();
    let golden_bad = birkhoff_mismatches(&g, &[vec![1, 0], vec![0, 1], vec![3, -2]]);
    let sd = primary();
    let phis: Vec<Vec<i64>> = (0..sd.phi_matrix()[0].len()).map(|c| sd.phi_matrix().iter().map(|r| r[c]).collect()).collect();
    let wind_bad = birkhoff_mismatches(&sd.periodic, &phis);
    let el = t.elapsed();
    outcome(golden_bad == 0 && wind_bad == 0 && el < Duration::from_secs(10), format!("mismatches golden {golden_bad} wind-tree {wind_bad} in {el:.2?}"))
}

fn coboundary_width(td: &TransferData, seed: u64) -> (bool, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = Interval::point(rng.gen_range(0.0..1.0));
        let d = td.h_enclose(td.map_enclose(x), 30).unwrap() - td.h_enclose(x, 30).unwrap() - td.psi_enclose(x);
        ok &= d.contains(0.0) && d.width() < 1e-6;
        worst = worst.max(d.width());
    }
    (ok, worst)
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let (ga, gw) = coboundary_width(&golden_td(), 2);
    let (pa, pw) = coboundary_width(&primary_td(&primary()), 3);
    let el = t.elapsed();
    outcome(ga && pa && el < Duration::from_secs(30), format!("max width golden {gw:.2e} wind-tree {pw:.2e} in {el:.2?}"))
}

fn tau_check(td: &TransferData) -> (f64, usize, usize) {
    let at = td.periodic.matrix().apply_f64(&td.tau);
    let res = at.iter().zip(&td.tau).map(|(x, t)| (x - t / td.lambda()).abs()).fold(0.0, f64::max);
    let sums = td.tau_partial_sums();
    let disc = td.periodic.iet.discontinuities();
    let (mut checked, mut bad) = (0, 0);
    for (k, x) in disc.iter().enumerate() {
        if *x < 1.0 {
            let h = td.h_eval(*x, 40).unwrap();
            checked += 1;
            if !(h.contains(sums[k]) || (h.mid() - sums[k]).abs() < 1e-12) {
                bad += 1;
            }
        }
    }
    (res, checked, bad)
}

fn criterion_3() -> Outcome {
    let (gr, gc, gb) = tau_check(&golden_td());
    let (pr, pc, pb) = tau_check(&primary_td(&primary()));
    let pass = gr < 1e-10 && pr < 1e-10 && gb == 0 && pb == 0;
    outcome(pass, format!("residual golden {gr:.1e} wind-tree {pr:.1e}; disagreements {gb}/{gc} and {pb}/{pc}"))
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let sd = primary();
    let (f, skew) = block_invariant(&sd, Block::MinusPlus).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let states: Vec<(f64, Vec<i64>)> = (0..1000).map(|_| (rng.gen_range(0.0..1.0), vec![rng.gen_range(-50..50)])).collect();
    let cert = certify_invariance(&f, &skew, &states, 30).unwrap();
    let disjoint = cert.witness.as_ref().is_some_and(|(s, u)| {
        let p = f.hat_h(Interval::point(s.0), &s.1, 30).unwrap();
        let q = f.hat_h(Interval::point(u.0), &u.1, 30).unwrap();
        !f.same_class(&p, &q)
    });
    let el = t.elapsed();
    outcome(
        cert.checked == 1000 && cert.failures.is_empty() && disjoint && el < Duration::from_secs(60),
        format!("{} states, {} failures, witness {disjoint}, in {el:.2?}", cert.checked, cert.failures.len()),
    )
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let sd = primary();
    let unstable = gamma_instability(&sd).unwrap();
    let td = primary_td(&sd);
    let (gs, db) = hdim_chain(&td, 16, 5).unwrap();
    let n = td.len();
    let complete = gs.map.pairs.len() == n && gs.map.pairs.iter().all(|r| r.len() == n && r.iter().all(|p| p.e1.f.hi < p.e2.f.lo));
    let l = gs.map.lambda.abs();
    let lhs = (gs.big_f * l.powi(gs.b as u32) / (Interval::ONE - l)).hi;
    let gap_ok = lhs < gs.delta.lo;
    let stats_ok = db.stats.len() == 6
        && db.stats.iter().all(|s| {
            let q = (1.0 - db.mu.lo / db.m).powi(s.k as i32);
            s.length.hi <= q * (1.0 + 1e-12) && s.components_bound <= n as f64 * db.m.powi(s.k as i32)
        });
    let margin = 1.0 - db.beta0;
    let el = t.elapsed();
    let pass = unstable[0] && complete && gap_ok && stats_ok && db.beta0 < 1.0 && margin >= 1e-3 && el < Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "unstable gamma_h {}, pairs complete {complete}, b {} with {lhs:.2e} < {:.2e} {gap_ok}, cover stats {stats_ok}, m {} mu {:.4}, beta0 {:.12} (1 - beta0 = {margin:.2e}, need >= 1e-3), in {el:.2?}",
            unstable[0], gs.b, gs.delta.lo, db.m, db.mu.lo, db.beta0
        ),
    )
}

fn criterion_6() -> Outcome {
    let b = beta0(4.0, 1.0).unwrap();
    let grid: Vec<f64> = (1..=10).map(|i| beta0(4.0, i as f64 / 10.0).unwrap()).collect();
    let monotone = grid.windows(2).all(|w| w[1] < w[0]);
    outcome((b - 0.8282).abs() < 1e-3 && monotone, format!("beta0(4, 1) = {b:.6}, decreasing on grid {monotone}"))
}

/// Number of grid boxes of side `s` meeting a union of closed intervals.
fn boxes(ivs: &[(f64, f64)], s: f64) -> f64 {
    let mut hit: Vec<i64> = ivs
        .iter()
        .flat_map(|&(a, b)| {
            let lo = (a / s + 1e-9).floor() as i64;
            let hi = ((b / s - 1e-9).ceil() as i64 - 1).max(lo);
            lo..=hi
        })
        .collect();
    hit.sort_unstable();
    hit.dedup();
    hit.len() as f64
}

fn criterion_7() -> Outcome {
    let cantor = middle_thirds(12);
    let cs: Vec<(f64, f64)> = (2..=9).map(|k| (3f64.powi(-k), boxes(&cantor, 3f64.powi(-k)))).collect();
    let full: Vec<(f64, f64)> = (2..=9).map(|k| (2f64.powi(-k), boxes(&[(0.0, 1.0)], 2f64.powi(-k)))).collect();
    let c = box_dimension_estimate(&cs).unwrap().slope;
    let u = box_dimension_estimate(&full).unwrap().slope;
    outcome((c - 0.6309).abs() < 0.05 && (u - 1.0).abs() < 0.02, format!("cantor {c:.4}, interval {u:.4}"))
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let sd = primary();
    let (f, _) = block_invariant(&sd, Block::MinusPlus).unwrap();
    let lift = SectionLift::new(&sd, 100_000).unwrap();
    let table = Table { a: 0.5, b: 0.5 };
    let z: Vec<f64> = f.hat_h(Interval::point(0.3), &[0], 30).unwrap().coords.iter().map(|c| c.mid()).collect();
    let tol = 0.02;
    let settings = RenderSettings {
        window: PlaneWindow { x0: 0.0, y0: 0.0, x1: 10.0, y1: 10.0 },
        resolution: 40.0,
        depth: 30,
        signs: (1, 1),
        mode: RenderMode::LevelSet { z: z.clone(), tol },
        supersample: false,
    };
    let r = Renderer { lift: &lift, f: &f, table, settings };
    let a = render_parallel(&r, 1).unwrap();
    let b = render_parallel(&r, 2).unwrap();
    let same = raster_bytes(&a) == raster_bytes(&b) && (a.width, a.height) == (400, 400);
    let frac = a.marked_fraction();
    // Points on one billiard path share their torus value and level class.
    let band = TorusPoint { coords: z.iter().map(|v| Interval::around(*v, tol)).collect() };
    let s = 2f64.sqrt() - 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut paths, mut samples, mut inconsistent) = (0, 0, 0);
    while paths < 10 {
        let p = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        if table.margin(p.0, p.1) < 0.05 {
            continue;
        }
        let (sx, sy) = (if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
        let norm = s.hypot(1.0);
        let traj = simulate_billiard(table, p, (sx * s / norm, sy / norm), 30.0, 100_000).unwrap();
        paths += 1;
        let mut first: Option<(TorusPoint, bool)> = None;
        for (k, v) in traj.velocities.iter().enumerate() {
            let (p0, p1) = (traj.points[k], traj.points[k + 1]);
            for u in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let m = (p0.0 + u * (p1.0 - p0.0), p0.1 + u * (p1.1 - p0.1));
                if !(0.0..10.0).contains(&m.0) || !(0.0..10.0).contains(&m.1) || table.margin(m.0, m.1) < 1e-3 {
                    continue;
                }
                let signs = (v.0.signum() as i8, v.1.signum() as i8);
                let Ok(hit) = lift.trace_fast(m, signs) else { continue };
                let tp = f.hat_h(hit.x, &hit.a[..1], 30).unwrap();
                let level = f.same_class(&tp, &band);
                samples += 1;
                match &first {
                    None => first = Some((tp, level)),
                    Some((q, l)) => {
                        if !f.same_class(q, &tp) || *l != level {
                            inconsistent += 1;
                        }
                    }
                }
            }
        }
    }
    let el = t.elapsed();
    outcome(
        same && frac < 0.5 && inconsistent == 0 && samples > 100 && el < Duration::from_secs(600),
        format!("deterministic {same}, marked {:.2}%, {samples} path samples with {inconsistent} inconsistent, in {el:.2?}", 100.0 * frac),
    )
}

fn criterion_9() -> Outcome {
    let table = Table { a: 0.5, b: 0.5 };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut speed_err, mut margin, mut min_bounces) = (0.0f64, f64::INFINITY, usize::MAX);
    for _ in 0..4 {
        let p = loop {
            let p = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            if table.margin(p.0, p.1) > 0.01 {
                break p;
            }
        };
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let traj = simulate_billiard(table, p, (th.cos(), th.sin()), 30_000.0, 1_000_000).unwrap();
        min_bounces = min_bounces.min(traj.bounces);
        let v0 = traj.velocities[0].0.hypot(traj.velocities[0].1);
        for (k, v) in traj.velocities.iter().enumerate() {
            speed_err = speed_err.max((v.0.hypot(v.1) - v0).abs());
            let (p0, p1) = (traj.points[k], traj.points[k + 1]);
            for q in [p0, ((p0.0 + p1.0) / 2.0, (p0.1 + p1.1) / 2.0)] {
                margin = margin.min(table.margin(q.0, q.1));
            }
        }
    }
    outcome(
        min_bounces >= 10_000 && speed_err <= 4.0 * f64::EPSILON && margin >= -1e-12,
        format!("min bounces {min_bounces}, speed drift {speed_err:.1e}, min margin {margin:.1e}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("cocycle oracle", criterion_1),
        ("coboundary", criterion_2),
        ("tau series", criterion_3),
        ("invariance", criterion_4),
        ("hdim pipeline", criterion_5),
        ("beta0 solver", criterion_6),
        ("box count", criterion_7),
        ("level-set raster", criterion_8),
        ("billiard", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {} {name}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

//! Billiards in the periodic wind-tree table and the lift of plane points to the section.
//!
//! Obstacles are the rectangles `[m - a/2, m + a/2] x [n - b/2, n + b/2]` for all
//! integers `m, n`.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::interval::Interval;
use crate::homology::{H00, H01, H10, H11, V00, V01, V10, V11};
use crate::quad::QuadNum;
use crate::section::SectionData;
use crate::surface::{Crossings, FlatPoint, Sheet, SurfaceError, Tracer, Transversal, WindTreeSurface};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BilliardError {
    #[error("trajectory hit an obstacle corner near ({0}, {1})")]
    CornerHit(f64, f64),
    #[error("start point is inside an obstacle")]
    StartInsideObstacle,
    #[error("more than {0} events")]
    BudgetExceeded(usize),
    #[error("velocity must be finite and nonzero")]
    BadVelocity,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Table {
    pub a: f64,
    pub b: f64,
}

impl Table {
    /// Signed distance-like margin: positive outside every obstacle, negative inside.
    pub fn margin(&self, x: f64, y: f64) -> f64 {
        let dx = (x - libm::round(x)).abs() - self.a / 2.0;
        let dy = (y - libm::round(y)).abs() - self.b / 2.0;
        dx.max(dy)
    }
}

/// A billiard path: polyline through the start, every bounce, and the end point.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub points: Vec<(f64, f64)>,
    /// Velocity on each segment.
    pub velocities: Vec<(f64, f64)>,
    /// Arc length at each polyline point.
    pub times: Vec<f64>,
    pub bounces: usize,
}

impl Trajectory {
    pub fn length(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Position and velocity at arc length `s`.
    pub fn at(&self, s: f64) -> ((f64, f64), (f64, f64)) {
        let k = self.times.partition_point(|&t| t <= s).saturating_sub(1).min(self.velocities.len() - 1);
        let (x, y) = self.points[k];
        let (vx, vy) = self.velocities[k];
        let speed = libm::hypot(vx, vy);
        let ds = (s - self.times[k]) / speed;
        ((x + vx * ds, y + vy * ds), (vx, vy))
    }
}

/// Event-driven elastic billiard for arc length `t_max`.
pub fn simulate_billiard(
    table: Table,
    start: (f64, f64),
    velocity: (f64, f64),
    t_max: f64,
    max_events: usize,
) -> Result<Trajectory, BilliardError> {
    let (mut vx, mut vy) = velocity;
    if !(vx.is_finite() && vy.is_finite()) || (vx == 0.0 && vy == 0.0) {
        return Err(BilliardError::BadVelocity);
    }
    if table.margin(start.0, start.1) <= 0.0 {
        return Err(BilliardError::StartInsideObstacle);
    }
    let speed = libm::hypot(vx, vy);
    let (ha, hb) = (table.a / 2.0, table.b / 2.0);
    let (mut x, mut y) = start;
    let (mut m, mut n) = (libm::round(x), libm::round(y));
    let mut traj = Trajectory { points: alloc::vec![start], velocities: Vec::new(), times: alloc::vec![0.0], bounces: 0 };
    let mut time = 0.0;
    let mut skip_obstacle = false;
    for _ in 0..max_events {
        // Parameter along the velocity (not arc length) to leave the cell.
        let tx = if vx > 0.0 { (m + 0.5 - x) / vx } else if vx < 0.0 { (m - 0.5 - x) / vx } else { f64::INFINITY };
        let ty = if vy > 0.0 { (n + 0.5 - y) / vy } else if vy < 0.0 { (n - 0.5 - y) / vy } else { f64::INFINITY };
        let t_cell = tx.min(ty).max(0.0);
        let hit = if skip_obstacle { None } else { obstacle_entry(x - m, y - n, vx, vy, ha, hb) };
        let remaining = (t_max - time) / speed;
        match hit {
            Some((t, face)) if t <= t_cell && t <= remaining => {
                x += vx * t;
                y += vy * t;
                match face {
                    Face::Vertical => {
                        x = m + if vx > 0.0 { -ha } else { ha };
                        vx = -vx;
                    }
                    Face::Horizontal => {
                        y = n + if vy > 0.0 { -hb } else { hb };
                        vy = -vy;
                    }
                    Face::Corner => return Err(BilliardError::CornerHit(x, y)),
                }
                time += t * speed;
                traj.velocities.push(if face == Face::Vertical { (-vx, vy) } else { (vx, -vy) });
                traj.points.push((x, y));
                traj.times.push(time);
                traj.bounces += 1;
                skip_obstacle = true;
            }
            _ => {
                if t_cell >= remaining {
                    x += vx * remaining;
                    y += vy * remaining;
                    traj.velocities.push((vx, vy));
                    traj.points.push((x, y));
                    traj.times.push(t_max);
                    return Ok(traj);
                }
                x += vx * t_cell;
                y += vy * t_cell;
                time += t_cell * speed;
                if tx <= ty {
                    m += vx.signum();
                }
                if ty <= tx {
                    n += vy.signum();
                }
                skip_obstacle = false;
            }
        }
    }
    Err(BilliardError::BudgetExceeded(max_events))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Face {
    Vertical,
    Horizontal,
    Corner,
}

/// First contact of the ray `p + t v` with the centred rectangle, by the slab method.
fn obstacle_entry(px: f64, py: f64, vx: f64, vy: f64, ha: f64, hb: f64) -> Option<(f64, Face)> {
    let slab = |p: f64, v: f64, h: f64| -> Option<(f64, f64)> {
        if v == 0.0 {
            return (p.abs() < h).then_some((f64::NEG_INFINITY, f64::INFINITY));
        }
        let (t0, t1) = ((-h - p) / v, (h - p) / v);
        Some((t0.min(t1), t0.max(t1)))
    };
    let (x0, x1) = slab(px, vx, ha)?;
    let (y0, y1) = slab(py, vy, hb)?;
    let enter = x0.max(y0);
    let exit = x1.min(y1);
    if enter > exit || enter < 0.0 {
        return None;
    }
    let face = if (x0 - y0).abs() <= 1e-13 * enter.abs().max(1.0) {
        Face::Corner
    } else if x0 > y0 {
        Face::Vertical
    } else {
        Face::Horizontal
    };
    Some((enter, face))
}

/// Where a plane point lands on the section.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftHit {
    /// Transversal parameter.
    pub t: QuadNum,
    /// Coordinate in the periodic section, normalized to `[0, 1)`.
    pub x: QuadNum,
    /// Lift indices for `gamma_h` and `gamma_v`.
    pub a: [i64; 2],
    /// Vertical flight distance to the hit.
    pub flight: QuadNum,
}

/// Exact flow from plane points to the lifted section, for one periodic direction.
pub struct SectionLift<'a> {
    pub sd: &'a SectionData,
    surf: WindTreeSurface,
    tr: Transversal,
    budget: usize,
}

fn exact(x: f64, d: u32) -> QuadNum {
    let r = BigRational::from_float(x).expect("finite coordinate");
    QuadNum::new(r, BigRational::from_integer(BigInt::from(0)), d)
}

impl<'a> SectionLift<'a> {
    pub fn new(sd: &'a SectionData, budget: usize) -> Result<Self, BilliardError> {
        let surf = sd.params.surface(sd.cover)?;
        let tr = Transversal { length: sd.exact.length.clone() };
        Ok(SectionLift { sd, surf, tr, budget })
    }

    /// Lift of the billiard state at `p` moving with velocity signs `(sx, sy)`
    /// along the direction family of the section.
    pub fn trace(&self, p: (f64, f64), signs: (i8, i8)) -> Result<LiftHit, BilliardError> {
        let d = self.surf.field();
        self.trace_exact((exact(p.0, d), exact(p.1, d)), signs)
    }

    /// Lift of a point with rational coordinates `(xn/xd, yn/yd)`.
    pub fn trace_rational(&self, xn: i64, xd: i64, yn: i64, yd: i64, signs: (i8, i8)) -> Result<LiftHit, BilliardError> {
        let d = self.surf.field();
        self.trace_exact((QuadNum::from_ratio(xn, xd, d), QuadNum::from_ratio(yn, yd, d)), signs)
    }

    pub fn trace_exact(&self, p: (QuadNum, QuadNum), signs: (i8, i8)) -> Result<LiftHit, BilliardError> {
        let d = self.surf.field();
        let half = QuadNum::from_ratio(1, 2, d);
        let m = (&p.0 + &half).floor();
        let n = (&p.1 + &half).floor();
        let lu = &p.0 - &QuadNum::new(BigRational::from_integer(m.clone()), BigRational::from_integer(BigInt::from(0)), d);
        let lv = &p.1 - &QuadNum::new(BigRational::from_integer(n.clone()), BigRational::from_integer(BigInt::from(0)), d);
        if lu.abs() <= *self.surf.half_a() && lv.abs() <= *self.surf.half_b() {
            return Err(BilliardError::StartInsideObstacle);
        }
        let slope = self.sd.params.slope_value();
        let flip_x = (signs.0 < 0) != slope.is_negative();
        let flip_y = signs.1 < 0;
        let sheet = Sheet { x: flip_x as u8, y: flip_y as u8 };
        let u = if flip_x { -lu } else { lu };
        let v = if flip_y { -lv } else { lv };
        let (m, n) = (to_i64(&m), to_i64(&n));
        let on_section = sheet == Sheet::ORIGIN && v == -self.surf.half_b().clone();
        let (t, cr, flight) = match on_section.then(|| self.tr.param_of(&self.surf, &u)).flatten() {
            Some(t) => (t, [0i64; 12], QuadNum::zero(d)),
            None => {
                let tracer = Tracer::new(&self.surf, slope, self.budget)?;
                let hit = tracer.trace(&FlatPoint { sheet, u, v }, 1, &self.tr).map_err(|e| match e {
                    SurfaceError::BudgetExceeded(k) => BilliardError::BudgetExceeded(k),
                    other => BilliardError::Surface(other),
                })?;
                (hit.t, hit.crossings, hit.height)
            }
        };
        let wrapped = t >= self.tr.wrap_param(&self.surf);
        let mut a = [m + cell_shift_h(&cr) - wrapped as i64, n + cell_shift_v(&cr)];
        let (x, extra) = self.sd.to_loop_coords(&t);
        a[0] += cell_shift_h(&extra);
        a[1] += cell_shift_v(&extra);
        Ok(LiftHit { t, x, a, flight })
    }
}

fn to_i64(x: &BigInt) -> i64 {
    i64::try_from(x).expect("cell index fits in i64")
}

/// Horizontal cell displacement recorded by crossings (the `gamma_h` pairing).
pub fn cell_shift_h(cr: &Crossings) -> i64 {
    -cr[V00] + cr[V10] - cr[V01] + cr[V11]
}

/// Vertical cell displacement (the `gamma_v` pairing).
pub fn cell_shift_v(cr: &Crossings) -> i64 {
    cr[H00] + cr[H10] - cr[H01] - cr[H11]
}

/// A lift computed in floating point, with enclosures.
#[derive(Clone, Debug, PartialEq)]
pub struct FastHit {
    pub t: Interval,
    pub x: Interval,
    pub a: [i64; 2],
    /// Arc length travelled to the hit.
    pub flight: f64,
    pub events: usize,
}

/// Per-event error allowance of the floating-point flow.
const EVENT_ERR: f64 = 1e-13;

impl<'a> SectionLift<'a> {
    /// Floating-point lift: walks the billiard in the plane until it crosses a
    /// lifted section segment. Near-singular events are reported as errors.
    pub fn trace_fast(&self, p: (f64, f64), signs: (i8, i8)) -> Result<FastHit, BilliardError> {
        let params = &self.sd.params;
        let (ha, hb) = (params.a_f64() / 2.0, params.b_f64() / 2.0);
        let len = self.sd.exact.length.to_f64();
        let s = params.slope_value().to_f64();
        let table = Table { a: 2.0 * ha, b: 2.0 * hb };
        if table.margin(p.0, p.1) <= 0.0 {
            return Err(BilliardError::StartInsideObstacle);
        }
        let (mut vx, mut vy) = (signs.0 as f64 * s.abs(), signs.1 as f64);
        let sec_vx = s;
        let (mut x, mut y) = p;
        let (mut m, mut n) = (libm::round(x), libm::round(y));
        let mut flight = 0.0;
        let speed = libm::hypot(vx, vy);
        let mut skip_obstacle = false;
        let tol = 1e-9;
        for events in 0..self.budget {
            let on_sheet = vy > 0.0 && (vx > 0.0) == (sec_vx > 0.0);
            let line = n - hb;
            let tx = if vx > 0.0 { (m + 0.5 - x) / vx } else { (m - 0.5 - x) / vx };
            let ty = if vy > 0.0 { (n + 0.5 - y) / vy } else { (n - 0.5 - y) / vy };
            let t_cell = tx.min(ty).max(0.0);
            let hit = if skip_obstacle { None } else { obstacle_entry(x - m, y - n, vx, vy, ha, hb) };
            let t_obs = hit.map_or(f64::INFINITY, |h| h.0);
            if on_sheet && y <= line {
                let t_sec = (line - y) / vy;
                if t_sec <= t_cell && t_sec <= t_obs + tol {
                    let xc = x + vx * t_sec;
                    let off = xc - m;
                    // Right part of the segment starting in this cell, or the wrapped part of the previous one.
                    let cand = if off >= ha { Some((off - ha, m)) } else if off < -ha { Some((off + 1.0 - ha, m - 1.0)) } else { None };
                    if let Some((t, idx)) = cand {
                        let err = EVENT_ERR * (events + 1) as f64;
                        if (off - ha).abs() < tol || (off + ha).abs() < tol || (t - len).abs() < tol {
                            return Err(BilliardError::CornerHit(xc, line));
                        }
                        if t < len {
                            let tt = Interval::around(t, err);
                            let (xi, extra) = self.sd.to_loop_coords_f64(tt).ok_or(BilliardError::CornerHit(xc, line))?;
                            let a = [idx as i64 + cell_shift_h(&extra), n as i64 + cell_shift_v(&extra)];
                            return Ok(FastHit { t: tt, x: xi, a, flight: flight + t_sec * speed, events });
                        }
                    }
                }
            }
            match hit {
                Some((t, face)) if t <= t_cell => {
                    x += vx * t;
                    y += vy * t;
                    let (cx, cy) = (x - m, y - n);
                    if (cx.abs() - ha).abs() < tol && (cy.abs() - hb).abs() < tol {
                        return Err(BilliardError::CornerHit(x, y));
                    }
                    match face {
                        Face::Vertical => {
                            x = m + if vx > 0.0 { -ha } else { ha };
                            vx = -vx;
                        }
                        Face::Horizontal => {
                            y = n + if vy > 0.0 { -hb } else { hb };
                            vy = -vy;
                        }
                        Face::Corner => return Err(BilliardError::CornerHit(x, y)),
                    }
                    flight += t * speed;
                    skip_obstacle = true;
                }
                _ => {
                    x += vx * t_cell;
                    y += vy * t_cell;
                    flight += t_cell * speed;
                    if tx <= ty {
                        m += vx.signum();
                    }
                    if ty <= tx {
                        n += vy.signum();
                    }
                    skip_obstacle = false;
                }
            }
        }
        Err(BilliardError::BudgetExceeded(self.budget))
    }
}

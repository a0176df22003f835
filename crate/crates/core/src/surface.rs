//! Flat geometry of the wind-tree surfaces `Y(a,b)` and `X(a,b)`.
//!
//! Both are built from the unit square `[-1/2,1/2]^2` with the rectangular hole
//! `[-a/2,a/2] x [-b/2,b/2]` removed. Outer edges are glued by translation
//! inside a sheet. `Y` has one sheet whose opposite hole sides are glued to
//! each other; `X` has four sheets `(x, y)` where crossing a vertical hole side
//! flips `x` and crossing a horizontal hole side flips `y` (the unfolding of
//! elastic reflections).
//!
//! Straight-line trajectories with slope `du/dv = s` are traced exactly in
//! `Q(sqrt(d))`. Every trace records signed crossings with the twelve marked
//! curves `h_xy, v_xy, c_{h,y}, c_{v,x}`, using the orientation
//! `<horizontal rightward, vertical upward> = +1`.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::quad::QuadNum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cover {
    /// The genus-two surface `Y(a,b)`.
    Base,
    /// The genus-five fourfold cover `X(a,b)`.
    Fourfold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Sheet {
    pub x: u8,
    pub y: u8,
}

impl Sheet {
    pub const ORIGIN: Sheet = Sheet { x: 0, y: 0 };

    pub fn all(cover: Cover) -> Vec<Sheet> {
        match cover {
            Cover::Base => alloc::vec![Sheet::ORIGIN],
            Cover::Fourfold => alloc::vec![
                Sheet { x: 0, y: 0 },
                Sheet { x: 1, y: 0 },
                Sheet { x: 0, y: 1 },
                Sheet { x: 1, y: 1 },
            ],
        }
    }
}

/// Hole corners, in the order bottom-left, bottom-right, top-left, top-right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Corner {
    BottomLeft,
    BottomRight,
    TopLeft,
    TopRight,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::BottomLeft, Corner::BottomRight, Corner::TopLeft, Corner::TopRight];
}

/// Signed crossing counts with `h00,h10,h01,h11, v00,v10,v01,v11, c_h0,c_h1, c_v0,c_v1`.
pub type Crossings = [i64; 12];

pub const fn h_index(x: u8, y: u8) -> usize {
    (x + 2 * y) as usize
}
pub const fn v_index(x: u8, y: u8) -> usize {
    4 + (x + 2 * y) as usize
}
pub const fn ch_index(y: u8) -> usize {
    8 + y as usize
}
pub const fn cv_index(x: u8) -> usize {
    10 + x as usize
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SurfaceError {
    #[error("trajectory hit a singularity ({sheet:?}, {corner:?})")]
    SingularHit { sheet: Sheet, corner: Corner },
    #[error("trajectory did not reach the transversal within {0} segments")]
    BudgetExceeded(usize),
    #[error("invalid surface parameters: {0}")]
    InvalidParams(&'static str),
    #[error("slope must be finite and nonzero")]
    DegenerateSlope,
}

/// A wind-tree surface with rational obstacle sides in a fixed quadratic field.
#[derive(Clone, Debug)]
pub struct WindTreeSurface {
    pub a: QuadNum,
    pub b: QuadNum,
    pub cover: Cover,
    half: QuadNum,
    ha: QuadNum,
    hb: QuadNum,
}

impl WindTreeSurface {
    pub fn new(a: QuadNum, b: QuadNum, cover: Cover) -> Result<Self, SurfaceError> {
        let d = a.d;
        let one = QuadNum::one(d);
        if !a.is_positive() || !b.is_positive() || a >= one || b >= one {
            return Err(SurfaceError::InvalidParams("need 0 < a, b < 1"));
        }
        let half = QuadNum::from_ratio(1, 2, d);
        let ha = &a * &half;
        let hb = &b * &half;
        Ok(WindTreeSurface { a, b, cover, half, ha, hb })
    }

    pub fn from_rationals(a: (i64, i64), b: (i64, i64), d: u32, cover: Cover) -> Result<Self, SurfaceError> {
        WindTreeSurface::new(QuadNum::from_ratio(a.0, a.1, d), QuadNum::from_ratio(b.0, b.1, d), cover)
    }

    pub fn field(&self) -> u32 {
        self.a.d
    }

    pub fn half_a(&self) -> &QuadNum {
        &self.ha
    }

    pub fn half_b(&self) -> &QuadNum {
        &self.hb
    }

    pub fn corner_point(&self, corner: Corner) -> (QuadNum, QuadNum) {
        let (ha, hb) = (&self.ha, &self.hb);
        match corner {
            Corner::BottomLeft => (-ha.clone(), -hb.clone()),
            Corner::BottomRight => (ha.clone(), -hb.clone()),
            Corner::TopLeft => (-ha.clone(), hb.clone()),
            Corner::TopRight => (ha.clone(), hb.clone()),
        }
    }

    fn flip_x(&self, s: Sheet) -> Sheet {
        match self.cover {
            Cover::Base => s,
            Cover::Fourfold => Sheet { x: s.x ^ 1, y: s.y },
        }
    }

    fn flip_y(&self, s: Sheet) -> Sheet {
        match self.cover {
            Cover::Base => s,
            Cover::Fourfold => Sheet { x: s.x, y: s.y ^ 1 },
        }
    }

    /// Corners whose ray in direction `sigma * (s, 1)` leaves into the surface.
    pub fn separatrix_corners(&self, slope: &QuadNum, sigma: i8) -> Vec<(Sheet, Corner)> {
        let du_pos = if sigma > 0 { slope.is_positive() } else { slope.is_negative() };
        let mut out = Vec::new();
        for sheet in Sheet::all(self.cover) {
            for c in Corner::ALL {
                let valid = match (c, sigma > 0) {
                    // Moving up: top corners always leave; a bottom corner only
                    // when the ray moves away from the hole.
                    (Corner::TopLeft | Corner::TopRight, true) => true,
                    (Corner::BottomLeft, true) => !du_pos,
                    (Corner::BottomRight, true) => du_pos,
                    (Corner::BottomLeft | Corner::BottomRight, false) => true,
                    (Corner::TopLeft, false) => !du_pos,
                    (Corner::TopRight, false) => du_pos,
                };
                if valid {
                    out.push((sheet, c));
                }
            }
        }
        out
    }
}

/// A point on a sheet, in centred square coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatPoint {
    pub sheet: Sheet,
    pub u: QuadNum,
    pub v: QuadNum,
}

/// Horizontal transversal on sheet (0,0) at height `-b/2`, starting at the
/// bottom-right hole corner and running rightwards (wrapping once through
/// the outer vertical edge) for `length`.
#[derive(Clone, Debug)]
pub struct Transversal {
    pub length: QuadNum,
}

impl Transversal {
    /// Parameter `t` of the transversal at horizontal coordinate `u`, if any.
    pub fn param_of(&self, surf: &WindTreeSurface, u: &QuadNum) -> Option<QuadNum> {
        let ha = surf.half_a();
        let t = if u >= ha {
            u - ha
        } else if u < &-ha.clone() {
            u + &QuadNum::one(surf.field()) - ha
        } else {
            return None;
        };
        (!t.is_negative() && t < self.length).then_some(t)
    }

    pub fn point_at(&self, surf: &WindTreeSurface, t: &QuadNum) -> FlatPoint {
        let mut u = surf.half_a() + t;
        if u >= surf.half {
            u = u - QuadNum::one(surf.field());
        }
        FlatPoint { sheet: Sheet::ORIGIN, u, v: -surf.half_b().clone() }
    }

    /// Parameter where the transversal passes the outer vertical edge.
    pub fn wrap_param(&self, surf: &WindTreeSurface) -> QuadNum {
        &surf.half - surf.half_a()
    }

    /// Crossings of the straight path along the transversal from `from` to `to`.
    pub fn return_crossings(&self, surf: &WindTreeSurface, from: &QuadNum, to: &QuadNum) -> Crossings {
        let mut c = [0i64; 12];
        let te = self.wrap_param(surf);
        if from < &te && &te <= to {
            c[v_index(0, 0)] -= 1;
        } else if to < &te && &te <= from {
            c[v_index(0, 0)] += 1;
        }
        c
    }
}

/// Where a trace ended.
#[derive(Clone, Debug)]
pub struct TraceHit {
    /// Transversal parameter of the hit.
    pub t: QuadNum,
    /// Total vertical distance travelled.
    pub height: QuadNum,
    pub crossings: Crossings,
    pub segments: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    OuterV,
    OuterU,
    LineV,
    HoleSide,
}

/// Exact straight-line tracer for one surface and slope.
pub struct Tracer<'a> {
    pub surface: &'a WindTreeSurface,
    pub slope: QuadNum,
    pub budget: usize,
}

impl<'a> Tracer<'a> {
    pub fn new(surface: &'a WindTreeSurface, slope: QuadNum, budget: usize) -> Result<Self, SurfaceError> {
        if slope.is_zero() {
            return Err(SurfaceError::DegenerateSlope);
        }
        Ok(Tracer { surface, slope, budget })
    }

    /// Follow the flow in direction `sigma * (s, 1)` from `start` until the
    /// transversal is reached (never at time zero).
    pub fn trace(&self, start: &FlatPoint, sigma: i8, tr: &Transversal) -> Result<TraceHit, SurfaceError> {
        let surf = self.surface;
        let d = surf.field();
        let zero = QuadNum::zero(d);
        let one = QuadNum::one(d);
        let half = surf.half.clone();
        let (ha, hb) = (surf.half_a().clone(), surf.half_b().clone());
        let neg = |q: &QuadNum| -q.clone();
        let du = if sigma > 0 { self.slope.clone() } else { neg(&self.slope) };
        let du_pos = du.is_positive();
        let mut sheet = start.sheet;
        let mut u = start.u.clone();
        let mut v = start.v.clone();
        let mut height = zero.clone();
        let mut cr = [0i64; 12];

        for seg in 0..self.budget {
            // Candidate events with their time (vertical distance).
            let mut cands: Vec<(QuadNum, Event)> = Vec::with_capacity(4);
            let t_outer_v = if sigma > 0 { &half - &v } else { &v + &half };
            cands.push((t_outer_v, Event::OuterV));
            let t_outer_u = if du_pos { (&half - &u).div(&du) } else { (neg(&half) - &u).div(&du) }
                .expect("nonzero slope");
            cands.push((t_outer_u, Event::OuterU));
            let lines = if sigma > 0 { [neg(&hb), hb.clone()] } else { [hb.clone(), neg(&hb)] };
            for line in lines {
                let ahead = if sigma > 0 { v < line } else { v > line };
                if ahead {
                    let t = if sigma > 0 { &line - &v } else { &v - &line };
                    cands.push((t, Event::LineV));
                    break;
                }
            }
            if du_pos && u < neg(&ha) {
                cands.push(((neg(&ha) - &u).div(&du).expect("nonzero slope"), Event::HoleSide));
            } else if !du_pos && u > ha {
                cands.push(((&ha - &u).div(&du).expect("nonzero slope"), Event::HoleSide));
            }
            let tmin = cands.iter().map(|(t, _)| t).min().cloned().expect("nonempty");
            let mut events: Vec<Event> = cands.iter().filter(|(t, _)| *t == tmin).map(|(_, e)| *e).collect();
            events.sort();

            let nu = &u + &(&du * &tmin);
            let nv = if sigma > 0 { &v + &tmin } else { &v - &tmin };
            // Record crossings of the middle curves along this straight piece.
            if sigma > 0 && v.is_negative() && !nv.is_negative() {
                cr[ch_index(sheet.y)] += 1;
            } else if sigma < 0 && !v.is_negative() && nv.is_negative() {
                cr[ch_index(sheet.y)] -= 1;
            }
            if du_pos && u.is_negative() && !nu.is_negative() {
                cr[cv_index(sheet.x)] -= 1;
            } else if !du_pos && !u.is_negative() && nu.is_negative() {
                cr[cv_index(sheet.x)] += 1;
            }
            height = height + &tmin;
            u = nu;
            v = nv;

            let mut check_line = false;
            let mut check_side = false;
            for e in events {
                match e {
                    Event::OuterV => {
                        if sigma > 0 {
                            cr[h_index(sheet.x, sheet.y)] += 1;
                            v = neg(&half);
                        } else {
                            cr[h_index(sheet.x, sheet.y)] -= 1;
                            v = half.clone();
                        }
                    }
                    Event::OuterU => {
                        if du_pos {
                            cr[v_index(sheet.x, sheet.y)] -= 1;
                            u = neg(&half);
                        } else {
                            cr[v_index(sheet.x, sheet.y)] += 1;
                            u = half.clone();
                        }
                    }
                    Event::LineV => check_line = true,
                    Event::HoleSide => check_side = true,
                }
            }
            if check_line && check_side {
                return Err(self.corner_at(sheet, &u, &v));
            }
            if check_line {
                let au = u.abs();
                if au == ha {
                    return Err(self.corner_at(sheet, &u, &v));
                }
                if au < ha {
                    // Through a horizontal hole side into the neighbouring sheet.
                    sheet = surf.flip_y(sheet);
                    v = neg(&v);
                } else if sheet == Sheet::ORIGIN && v == neg(&hb) {
                    if let Some(t) = tr.param_of(surf, &u) {
                        return Ok(TraceHit { t, height, crossings: cr, segments: seg + 1 });
                    }
                }
            } else if check_side {
                let av = v.abs();
                if av == hb {
                    return Err(self.corner_at(sheet, &u, &v));
                }
                if av < hb {
                    sheet = surf.flip_x(sheet);
                    u = neg(&u);
                }
            }
            let _ = &one;
        }
        Err(SurfaceError::BudgetExceeded(self.budget))
    }

    fn corner_at(&self, sheet: Sheet, u: &QuadNum, v: &QuadNum) -> SurfaceError {
        let corner = match (u.is_negative(), v.is_negative()) {
            (true, true) => Corner::BottomLeft,
            (false, true) => Corner::BottomRight,
            (true, false) => Corner::TopLeft,
            (false, false) => Corner::TopRight,
        };
        SurfaceError::SingularHit { sheet, corner }
    }
}

/// Exact data of the first-return map to a transversal.
#[derive(Clone, Debug)]
pub struct ExactSection {
    pub length: QuadNum,
    /// Left endpoints of the continuity intervals in position order.
    pub starts: Vec<QuadNum>,
    pub lengths: Vec<QuadNum>,
    /// Translation applied on each interval.
    pub offsets: Vec<QuadNum>,
    /// Closed-loop crossing counts for each interval.
    pub crossings: Vec<Crossings>,
    /// Return heights (vertical flight distance) per interval.
    pub heights: Vec<QuadNum>,
}

impl ExactSection {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// Order of the intervals after the exchange (letters listed by image position).
    pub fn bottom_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let images: Vec<QuadNum> = (0..self.len()).map(|i| &self.starts[i] + &self.offsets[i]).collect();
        idx.sort_by(|&i, &j| images[i].cmp(&images[j]));
        idx
    }
}

/// First hits on the transversal of the separatrices leaving corners in
/// direction `sigma`. Returns `(t, sheet, corner)` sorted by `t`.
pub fn separatrix_hits(
    tracer: &Tracer<'_>,
    tr: &Transversal,
    sigma: i8,
) -> Result<Vec<(QuadNum, Sheet, Corner)>, SurfaceError> {
    let surf = tracer.surface;
    let mut out = Vec::new();
    for (sheet, corner) in surf.separatrix_corners(&tracer.slope, sigma) {
        let (u, v) = surf.corner_point(corner);
        let hit = tracer.trace(&FlatPoint { sheet, u, v }, sigma, tr)?;
        out.push((hit.t, sheet, corner));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Build the exact first-return map to the standard transversal.
///
/// The transversal starts at a singularity; its right end is moved onto the
/// last hit of an upward separatrix, which leaves only genuine discontinuities.
pub fn exact_section(tracer: &Tracer<'_>, max_length: Option<QuadNum>) -> Result<ExactSection, SurfaceError> {
    let surf = tracer.surface;
    let d = surf.field();
    let full = QuadNum::one(d) - surf.a.clone();
    let l0 = max_length.map(|m| if m < full { m } else { full.clone() }).unwrap_or(full);
    let probe = Transversal { length: l0 };
    let up_hits = separatrix_hits(tracer, &probe, 1)?;
    let length = up_hits.last().map(|h| h.0.clone()).expect("separatrices exist");
    let tr = Transversal { length: length.clone() };
    section_for(tracer, &tr)
}

/// First-return map for a given transversal.
pub fn section_for(tracer: &Tracer<'_>, tr: &Transversal) -> Result<ExactSection, SurfaceError> {
    let surf = tracer.surface;
    let d = surf.field();
    let down_hits = separatrix_hits(tracer, tr, -1)?;
    let mut cuts: Vec<QuadNum> = alloc::vec![QuadNum::zero(d)];
    for (t, _, _) in down_hits {
        if t.is_positive() && cuts.last() != Some(&t) {
            cuts.push(t);
        }
    }
    cuts.push(tr.length.clone());
    let two = BigRational::from_integer(BigInt::from(2));
    let mut sec = ExactSection {
        length: tr.length.clone(),
        starts: Vec::new(),
        lengths: Vec::new(),
        offsets: Vec::new(),
        crossings: Vec::new(),
        heights: Vec::new(),
    };
    for w in cuts.windows(2) {
        let mid = (&w[0] + &w[1]).scale(&(BigRational::one() / &two));
        let p = tr.point_at(surf, &mid);
        let hit = tracer.trace(&p, 1, tr)?;
        let mut cr = hit.crossings;
        let back = tr.return_crossings(surf, &hit.t, &mid);
        for k in 0..12 {
            cr[k] += back[k];
        }
        sec.starts.push(w[0].clone());
        sec.lengths.push(&w[1] - &w[0]);
        sec.offsets.push(&hit.t - &mid);
        sec.crossings.push(cr);
        sec.heights.push(hit.height);
    }
    merge_fake_cuts(&mut sec);
    Ok(sec)
}

/// Merge neighbours that are translated by the same amount with identical
/// loops; the cut between them is not a real discontinuity.
fn merge_fake_cuts(sec: &mut ExactSection) {
    let mut i = 0;
    while i + 1 < sec.starts.len() {
        if sec.offsets[i] == sec.offsets[i + 1] && sec.crossings[i] == sec.crossings[i + 1] {
            let l = &sec.lengths[i] + &sec.lengths[i + 1];
            sec.lengths[i] = l;
            sec.starts.remove(i + 1);
            sec.lengths.remove(i + 1);
            sec.offsets.remove(i + 1);
            sec.crossings.remove(i + 1);
            sec.heights.remove(i + 1);
        } else {
            i += 1;
        }
    }
}

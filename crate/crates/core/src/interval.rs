//! Closed intervals of `f64` with outward rounding.
//!
//! Every arithmetic result is widened by one ulp on each side, which is enough
//! for the correctly-rounded IEEE operations (`+ - * /`, `sqrt`). Results of
//! `libm` transcendental calls are widened by a few ulps.

use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[inline]
fn down(x: f64) -> f64 {
    if x == 0.0 {
        -f64::MIN_POSITIVE * f64::EPSILON
    } else {
        x.next_down()
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x == 0.0 {
        f64::MIN_POSITIVE * f64::EPSILON
    } else {
        x.next_up()
    }
}

fn widen_ulps(x: f64, n: u32) -> Interval {
    let (mut lo, mut hi) = (x, x);
    for _ in 0..n {
        lo = lo.next_down();
        hi = hi.next_up();
    }
    Interval { lo, hi }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    /// Degenerate interval for an exactly representable value.
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Enclosure of a decimal midpoint that may itself be rounded: one ulp each side.
    pub fn from_f64(x: f64) -> Self {
        Interval::point(x)
    }

    pub fn around(mid: f64, rad: f64) -> Self {
        Interval { lo: down(mid - rad), hi: up(mid + rad) }
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn intersect(self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn overlaps(self, other: Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(self, other: Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn rad(self) -> f64 {
        up(0.5 * (self.hi - self.lo))
    }

    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Certainly positive.
    pub fn is_pos(self) -> bool {
        self.lo > 0.0
    }

    /// Certainly negative.
    pub fn is_neg(self) -> bool {
        self.hi < 0.0
    }

    /// Certainly less than `other` (disjoint and to the left).
    pub fn certainly_lt(self, other: Interval) -> bool {
        self.hi < other.lo
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval { lo: 0.0, hi: self.mag() }
        }
    }

    pub fn sqrt(self) -> Interval {
        let lo = if self.lo <= 0.0 { 0.0 } else { down(libm::sqrt(self.lo)).max(0.0) };
        Interval { lo, hi: up(libm::sqrt(self.hi.max(0.0))) }
    }

    pub fn ln(self) -> Interval {
        let lo = widen_ulps(libm::log(self.lo), 2).lo;
        let hi = widen_ulps(libm::log(self.hi), 2).hi;
        Interval { lo, hi }
    }

    pub fn exp(self) -> Interval {
        let lo = widen_ulps(libm::exp(self.lo), 2).lo.max(0.0);
        let hi = widen_ulps(libm::exp(self.hi), 2).hi;
        Interval { lo, hi }
    }

    /// Integer power by repeated multiplication (handles sign changes).
    pub fn powi(self, n: u32) -> Interval {
        let mut acc = Interval::ONE;
        let mut base = self;
        let mut e = n;
        if n % 2 == 0 && self.lo < 0.0 && self.hi > 0.0 {
            base = self.abs();
        }
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        if n % 2 == 0 {
            Interval { lo: acc.lo.max(0.0), hi: acc.hi }
        } else {
            acc
        }
    }

    pub fn max(self, other: Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn min(self, other: Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.min(other.hi) }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        let lo = self.lo + rhs.lo;
        let hi = self.hi + rhs.hi;
        Interval { lo: down(lo), hi: up(hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        let lo = self.lo - rhs.hi;
        let hi = self.hi - rhs.lo;
        Interval { lo: down(lo), hi: up(hi) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [self.lo * rhs.lo, self.lo * rhs.hi, self.hi * rhs.lo, self.hi * rhs.hi];
        let mut lo = p[0];
        let mut hi = p[0];
        for &v in &p[1..] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo == hi && self.lo == self.hi && rhs.lo == rhs.hi && lo == 0.0 {
            return Interval::ZERO;
        }
        Interval { lo: down(lo), hi: up(hi) }
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        if rhs.lo <= 0.0 && rhs.hi >= 0.0 {
            return Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
        }
        let p = [self.lo / rhs.lo, self.lo / rhs.hi, self.hi / rhs.lo, self.hi / rhs.hi];
        let mut lo = p[0];
        let mut hi = p[0];
        for &v in &p[1..] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Interval { lo: down(lo), hi: up(hi) }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        self + Interval::point(rhs)
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, rhs: f64) -> Interval {
        self - Interval::point(rhs)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self * Interval::point(rhs)
    }
}

impl core::iter::Sum for Interval {
    fn sum<I: Iterator<Item = Interval>>(iter: I) -> Interval {
        iter.fold(Interval::ZERO, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tenth_times_ten_contains_one() {
        let t = Interval::point(1.0) / Interval::point(10.0);
        let s = t * Interval::point(10.0);
        assert!(s.contains(1.0));
        assert!(s.width() < 1e-15);
    }

    #[test]
    fn division_by_straddling_zero_is_unbounded() {
        let r = Interval::ONE / Interval::new(-1.0, 1.0);
        assert!(r.lo.is_infinite() && r.hi.is_infinite());
    }

    #[test]
    fn even_power_of_straddling_interval() {
        let r = Interval::new(-2.0, 1.0).powi(2);
        assert!(r.lo <= 0.0 && r.hi >= 4.0 && r.hi < 4.0 + 1e-12);
    }

    proptest! {
        #[test]
        fn ops_enclose_midpoint_results(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let (x, y) = (Interval::point(a), Interval::point(b));
            prop_assert!((x + y).contains(a + b));
            prop_assert!((x - y).contains(a - b));
            prop_assert!((x * y).contains(a * b));
            if b != 0.0 {
                prop_assert!((x / y).contains(a / b));
            }
        }

        #[test]
        fn ln_exp_round_trip_encloses(a in 1e-3f64..1e3) {
            let r = Interval::point(a).ln().exp();
            prop_assert!(r.contains(a));
        }
    }
}

//! Exact arithmetic in a real quadratic field `Q(sqrt(d))`.
//!
//! Wind-tree sections with rational obstacle sizes and a quadratic-irrational
//! slope have every length, endpoint and renormalization factor inside one such
//! field, so comparisons there are decidable and Rauzy-Veech induction never
//! has to guess.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::interval::Interval;

/// `re + im * sqrt(d)` with rational coefficients. `d` is a positive non-square.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadNum {
    pub re: BigRational,
    pub im: BigRational,
    pub d: u32,
}

fn ratio(n: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(den))
}

impl QuadNum {
    pub fn new(re: BigRational, im: BigRational, d: u32) -> Self {
        QuadNum { re, im, d }
    }

    pub fn from_ratio(n: i64, den: i64, d: u32) -> Self {
        QuadNum::new(ratio(n, den), BigRational::zero(), d)
    }

    /// `(p + q sqrt(d)) / r`.
    pub fn from_parts(p: i64, q: i64, r: i64, d: u32) -> Self {
        QuadNum::new(ratio(p, r), ratio(q, r), d)
    }

    pub fn zero(d: u32) -> Self {
        QuadNum::new(BigRational::zero(), BigRational::zero(), d)
    }

    pub fn one(d: u32) -> Self {
        QuadNum::new(BigRational::one(), BigRational::zero(), d)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.im.is_zero()
    }

    /// Galois conjugate `re - im sqrt(d)`.
    pub fn conj(&self) -> Self {
        QuadNum::new(self.re.clone(), -self.im.clone(), self.d)
    }

    /// Field norm `re^2 - d im^2`.
    pub fn norm(&self) -> BigRational {
        &self.re * &self.re - &self.im * &self.im * BigRational::from_integer(BigInt::from(self.d))
    }

    pub fn signum(&self) -> Ordering {
        let a = self.re.signum();
        let b = self.im.signum();
        let (sa, sb) = (sign_of(&a), sign_of(&b));
        if sb == Ordering::Equal {
            return sa;
        }
        if sa == Ordering::Equal || sa == sb {
            return sb;
        }
        // re and im sqrt(d) have opposite signs: compare squares.
        let re2 = &self.re * &self.re;
        let im2 = &self.im * &self.im * BigRational::from_integer(BigInt::from(self.d));
        match re2.cmp(&im2) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Ordering::Equal,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Option<Self> {
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        let c = self.conj();
        Some(QuadNum::new(c.re / &n, c.im / &n, self.d))
    }

    pub fn div(&self, other: &QuadNum) -> Option<Self> {
        other.recip().map(|r| self * &r)
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        QuadNum::new(&self.re * r, &self.im * r, self.d)
    }

    /// Floor of the value as an integer.
    pub fn floor(&self) -> BigInt {
        let approx = libm::floor(self.to_f64());
        let mut k = BigInt::from(approx as i64);
        loop {
            let kq = QuadNum::new(BigRational::from_integer(k.clone()), BigRational::zero(), self.d);
            if (self - &kq).is_negative() {
                k -= 1;
                continue;
            }
            let k1 = QuadNum::new(BigRational::from_integer(&k + 1), BigRational::zero(), self.d);
            if !(self - &k1).is_negative() {
                k += 1;
                continue;
            }
            return k;
        }
    }

    pub fn to_f64(&self) -> f64 {
        let re = self.re.to_f64().unwrap_or(f64::NAN);
        let im = self.im.to_f64().unwrap_or(f64::NAN);
        re + im * libm::sqrt(self.d as f64)
    }

    /// Outward-rounded enclosure of the exact value.
    pub fn enclose(&self) -> Interval {
        let re = rational_enclosure(&self.re);
        let im = rational_enclosure(&self.im);
        re + im * Interval::from_f64(self.d as f64).sqrt()
    }

    /// Bit-size of the largest numerator/denominator, a cheap growth gauge.
    pub fn height_bits(&self) -> u64 {
        [self.re.numer(), self.re.denom(), self.im.numer(), self.im.denom()]
            .iter()
            .map(|x| x.bits())
            .max()
            .unwrap_or(0)
    }

    /// Textual form `re_num/re_den + im_num/im_den*sqrt(d)`.
    pub fn to_text(&self) -> String {
        alloc::format!("{}|{}|{}", self.re, self.im, self.d)
    }

    pub fn parse_text(s: &str) -> Option<Self> {
        let mut parts = s.trim().split('|');
        let re: BigRational = parts.next()?.parse().ok()?;
        let im: BigRational = parts.next()?.parse().ok()?;
        let d: u32 = parts.next()?.parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        Some(QuadNum::new(re, im, d))
    }
}

fn sign_of(x: &BigRational) -> Ordering {
    if x.is_positive() {
        Ordering::Greater
    } else if x.is_negative() {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

/// Enclosure of a rational by dividing outward-rounded numerator/denominator.
pub fn rational_enclosure(x: &BigRational) -> Interval {
    let n = bigint_enclosure(x.numer());
    let d = bigint_enclosure(x.denom());
    n / d
}

fn bigint_enclosure(x: &BigInt) -> Interval {
    // Shift large values so the f64 conversion stays finite.
    let bits = x.bits();
    if bits <= 53 {
        return Interval::point(x.to_f64().unwrap_or(f64::NAN));
    }
    let shift = bits - 53;
    let q = x >> shift; // floor division by 2^shift
    let lo = q.to_f64().unwrap_or(f64::NAN);
    let hi = (&q + BigInt::one()).to_f64().unwrap_or(f64::NAN);
    let scale = libm::ldexp(1.0, shift as i32);
    Interval::new(lo.next_down(), hi.next_up()) * Interval::point(scale)
}

impl PartialOrd for QuadNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadNum {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl fmt::Display for QuadNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*sqrt({})", self.re, self.im, self.d)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl<'a> $tr<&'a QuadNum> for &'a QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: &'a QuadNum) -> QuadNum {
                debug_assert_eq!(self.d, rhs.d);
                let f: fn(&QuadNum, &QuadNum) -> QuadNum = $body;
                f(self, rhs)
            }
        }
        impl $tr<QuadNum> for QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: QuadNum) -> QuadNum {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a QuadNum> for QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: &'a QuadNum) -> QuadNum {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| QuadNum::new(&a.re + &b.re, &a.im + &b.im, a.d));
forward_binop!(Sub, sub, |a, b| QuadNum::new(&a.re - &b.re, &a.im - &b.im, a.d));
forward_binop!(Mul, mul, |a, b| {
    let d = BigRational::from_integer(BigInt::from(a.d));
    QuadNum::new(
        &a.re * &b.re + &a.im * &b.im * d,
        &a.re * &b.im + &a.im * &b.re,
        a.d,
    )
});

impl Neg for QuadNum {
    type Output = QuadNum;
    fn neg(self) -> QuadNum {
        QuadNum::new(-self.re, -self.im, self.d)
    }
}

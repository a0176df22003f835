//! First homology of the fourfold wind-tree cover.
//!
//! Coordinates are over the twelve marked curves, indexed as in
//! [`crate::surface`]: `h_xy = x + 2y`, `v_xy = 4 + x + 2y`, `c_{h,y} = 8 + y`,
//! `c_{v,x} = 10 + x`. The canonical form eliminates `c_{h,1}` and `c_{v,1}`
//! with the two relations, leaving a rank-10 lattice. Coefficients are `f64`
//! so block projections (quarters of integers) stay exact.

use core::ops::{Add, Mul, Neg, Sub};

pub const GENERATORS: usize = 12;
pub const RANK: usize = 10;

pub const H00: usize = 0;
pub const H10: usize = 1;
pub const H01: usize = 2;
pub const H11: usize = 3;
pub const V00: usize = 4;
pub const V10: usize = 5;
pub const V01: usize = 6;
pub const V11: usize = 7;
pub const CH0: usize = 8;
pub const CH1: usize = 9;
pub const CV0: usize = 10;
pub const CV1: usize = 11;

/// Generators kept by the canonical form, in order.
pub const CANONICAL: [usize; RANK] = [H00, H10, H01, H11, V00, V10, V01, V11, CH0, CV0];

pub const NAMES: [&str; GENERATORS] =
    ["h00", "h10", "h01", "h11", "v00", "v10", "v01", "v11", "ch0", "ch1", "cv0", "cv1"];

/// `c_{h,0} - c_{h,1} - (h00 + h10 - h01 - h11)` and
/// `c_{v,0} - c_{v,1} - (v00 - v10 + v01 - v11)`, both zero in homology.
pub const RELATIONS: [[i64; GENERATORS]; 2] = [
    [-1, -1, 1, 1, 0, 0, 0, 0, 1, -1, 0, 0],
    [0, 0, 0, 0, -1, 1, -1, 1, 0, 0, 1, -1],
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomologyClass {
    pub coeffs: [f64; GENERATORS],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Klein {
    TauH,
    TauV,
}

/// Sign pattern `(s, t)` of a block `E^{st}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::PlusPlus, Block::PlusMinus, Block::MinusPlus, Block::MinusMinus];

    pub fn signs(self) -> (f64, f64) {
        match self {
            Block::PlusPlus => (1.0, 1.0),
            Block::PlusMinus => (1.0, -1.0),
            Block::MinusPlus => (-1.0, 1.0),
            Block::MinusMinus => (-1.0, -1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Block::PlusPlus => "++",
            Block::PlusMinus => "+-",
            Block::MinusPlus => "-+",
            Block::MinusMinus => "--",
        }
    }

    /// Generators of the block.
    pub fn basis(self) -> alloc::vec::Vec<HomologyClass> {
        let c = |v: &[(usize, f64)]| HomologyClass::from_terms(v);
        match self {
            Block::PlusPlus => alloc::vec![
                c(&[(H00, 1.0), (H10, 1.0), (H01, 1.0), (H11, 1.0)]),
                c(&[(V00, 1.0), (V10, 1.0), (V01, 1.0), (V11, 1.0)]),
                c(&[(CH0, 1.0), (CH1, 1.0)]),
                c(&[(CV0, 1.0), (CV1, 1.0)]),
            ],
            Block::PlusMinus => alloc::vec![gamma_v(), c(&[(V00, 1.0), (V10, 1.0), (V01, -1.0), (V11, -1.0)])],
            Block::MinusPlus => alloc::vec![c(&[(H00, 1.0), (H10, -1.0), (H01, 1.0), (H11, -1.0)]), gamma_h()],
            Block::MinusMinus => alloc::vec![
                c(&[(H00, 1.0), (H10, -1.0), (H01, -1.0), (H11, 1.0)]),
                c(&[(V00, 1.0), (V10, -1.0), (V01, -1.0), (V11, 1.0)]),
            ],
        }
    }
}

impl HomologyClass {
    pub const ZERO: HomologyClass = HomologyClass { coeffs: [0.0; GENERATORS] };

    /// Canonical class of a raw coefficient list.
    pub fn new(raw: [f64; GENERATORS]) -> Self {
        HomologyClass { coeffs: raw }.canonical()
    }

    pub fn from_ints(raw: [i64; GENERATORS]) -> Self {
        let mut c = [0.0; GENERATORS];
        for (x, &r) in c.iter_mut().zip(&raw) {
            *x = r as f64;
        }
        Self::new(c)
    }

    pub fn generator(i: usize) -> Self {
        let mut c = [0.0; GENERATORS];
        c[i] = 1.0;
        Self::new(c)
    }

    pub fn from_terms(terms: &[(usize, f64)]) -> Self {
        let mut c = [0.0; GENERATORS];
        for &(i, x) in terms {
            c[i] += x;
        }
        Self::new(c)
    }

    /// From the ten canonical coordinates.
    pub fn from_canonical(v: &[f64]) -> Self {
        let mut c = [0.0; GENERATORS];
        for (k, &i) in CANONICAL.iter().enumerate() {
            c[i] = v[k];
        }
        HomologyClass { coeffs: c }
    }

    pub fn canonical_coords(&self) -> [f64; RANK] {
        let mut v = [0.0; RANK];
        for (k, &i) in CANONICAL.iter().enumerate() {
            v[k] = self.coeffs[i];
        }
        v
    }

    fn canonical(mut self) -> Self {
        let c = &mut self.coeffs;
        let k = core::mem::take(&mut c[CH1]);
        c[CH0] += k;
        c[H00] -= k;
        c[H10] -= k;
        c[H01] += k;
        c[H11] += k;
        let k = core::mem::take(&mut c[CV1]);
        c[CV0] += k;
        c[V00] -= k;
        c[V10] += k;
        c[V01] -= k;
        c[V11] += k;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&x| x == 0.0)
    }

    /// Integer coordinates, when the class is integral.
    pub fn to_ints(&self) -> Option<[i64; GENERATORS]> {
        let mut out = [0i64; GENERATORS];
        for (o, &x) in out.iter_mut().zip(&self.coeffs) {
            if x != libm::round(x) {
                return None;
            }
            *o = x as i64;
        }
        Some(out)
    }

    pub fn act(&self, s: Klein) -> Self {
        let mut out = [0.0; GENERATORS];
        for (i, &x) in self.coeffs.iter().enumerate() {
            out[klein_image(s, i)] += x;
        }
        Self::new(out)
    }

    /// The four projections `(1/4)(1 ± tau_h)(1 ± tau_v)`, in [`Block::ALL`] order.
    pub fn blocks(&self) -> [HomologyClass; 4] {
        let th = self.act(Klein::TauH);
        let tv = self.act(Klein::TauV);
        let thv = th.act(Klein::TauV);
        Block::ALL.map(|b| {
            let (s, t) = b.signs();
            (*self + th * s + tv * t + thv * (s * t)) * 0.25
        })
    }

    pub fn block(&self, b: Block) -> Self {
        let i = Block::ALL.iter().position(|&x| x == b).unwrap();
        self.blocks()[i]
    }

    /// Pairing with a loop given by its signed crossing counts of the marked curves.
    pub fn pair(&self, crossings: &[i64; GENERATORS]) -> f64 {
        self.coeffs.iter().zip(crossings).map(|(&c, &k)| c * k as f64).sum()
    }
}

fn klein_image(s: Klein, i: usize) -> usize {
    match (s, i) {
        (Klein::TauH, 0..=7) => (i & !1) | ((i & 1) ^ 1),
        (Klein::TauH, CH0 | CH1) => i,
        (Klein::TauH, _) => CV0 + CV1 - i,
        (Klein::TauV, 0..=7) => (i & !2) | ((i & 2) ^ 2),
        (Klein::TauV, CH0 | CH1) => CH0 + CH1 - i,
        (Klein::TauV, _) => i,
    }
}

pub fn canonical_class(raw: [i64; GENERATORS]) -> HomologyClass {
    HomologyClass::from_ints(raw)
}

pub fn gamma_h() -> HomologyClass {
    HomologyClass::from_terms(&[(V00, -1.0), (V10, 1.0), (V01, -1.0), (V11, 1.0)])
}

pub fn gamma_v() -> HomologyClass {
    HomologyClass::from_terms(&[(H00, 1.0), (H10, 1.0), (H01, -1.0), (H11, -1.0)])
}

pub fn gamma_classes() -> (HomologyClass, HomologyClass) {
    (gamma_h(), gamma_v())
}

pub fn klein_act(s: Klein, c: &HomologyClass) -> HomologyClass {
    c.act(s)
}

pub fn block_decompose(c: &HomologyClass) -> [HomologyClass; 4] {
    c.blocks()
}

impl Add for HomologyClass {
    type Output = HomologyClass;
    fn add(mut self, rhs: HomologyClass) -> HomologyClass {
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        self
    }
}

impl Sub for HomologyClass {
    type Output = HomologyClass;
    fn sub(self, rhs: HomologyClass) -> HomologyClass {
        self + (-rhs)
    }
}

impl Neg for HomologyClass {
    type Output = HomologyClass;
    fn neg(mut self) -> HomologyClass {
        for a in self.coeffs.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Mul<f64> for HomologyClass {
    type Output = HomologyClass;
    fn mul(mut self, k: f64) -> HomologyClass {
        for a in self.coeffs.iter_mut() {
            *a *= k;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_class() -> impl Strategy<Value = HomologyClass> {
        proptest::array::uniform12(-5i64..6).prop_map(HomologyClass::from_ints)
    }

    #[test]
    fn relations_vanish() {
        for r in RELATIONS {
            assert!(canonical_class(r).is_zero());
        }
        let mut r = [0i64; GENERATORS];
        r[CH0] = 1;
        r[CH1] = -1;
        assert_eq!(canonical_class(r), gamma_v());
    }

    #[test]
    fn canonical_is_idempotent_on_generators() {
        assert_eq!(HomologyClass::generator(H00).coeffs[H00], 1.0);
        for i in 0..GENERATORS {
            let c = HomologyClass::generator(i);
            assert_eq!(HomologyClass::new(c.coeffs), c);
            assert_eq!(c.coeffs[CH1], 0.0);
            assert_eq!(c.coeffs[CV1], 0.0);
        }
    }

    #[test]
    fn gamma_coordinates() {
        let (gh, gv) = gamma_classes();
        assert_eq!(&gh.coeffs[V00..=V11], &[-1.0, 1.0, -1.0, 1.0]);
        assert!(gh.coeffs[..V00].iter().chain(&gh.coeffs[CH0..]).all(|&x| x == 0.0));
        assert_eq!(&gv.coeffs[..V00], &[1.0, 1.0, -1.0, -1.0]);
        assert!(!gh.is_zero() && !gv.is_zero());
    }

    #[test]
    fn klein_table() {
        assert_eq!(klein_act(Klein::TauH, &HomologyClass::generator(H00)), HomologyClass::generator(H10));
        assert_eq!(klein_act(Klein::TauH, &HomologyClass::generator(CH0)), HomologyClass::generator(CH0));
        assert_eq!(klein_act(Klein::TauV, &HomologyClass::generator(V10)), HomologyClass::generator(V11));
        assert_eq!(klein_act(Klein::TauV, &HomologyClass::generator(CV1)), HomologyClass::generator(CV1));
    }

    #[test]
    fn gamma_h_lies_in_minus_plus() {
        let parts = block_decompose(&gamma_h());
        assert!(parts[0].is_zero() && parts[1].is_zero() && parts[3].is_zero());
        assert_eq!(parts[2], gamma_h());
    }

    #[test]
    fn listed_generators_lie_in_their_blocks() {
        for (k, b) in Block::ALL.iter().enumerate() {
            for g in b.basis() {
                let parts = g.blocks();
                for (m, p) in parts.iter().enumerate() {
                    if m == k {
                        assert_eq!(*p, g, "block {}", b.name());
                    } else {
                        assert!(p.is_zero(), "block {} leaks into {}", b.name(), Block::ALL[m].name());
                    }
                }
            }
        }
    }

    #[test]
    fn block_bases_span_rank_ten() {
        let basis: alloc::vec::Vec<[f64; RANK]> =
            Block::ALL.iter().flat_map(|b| b.basis()).map(|c| c.canonical_coords()).collect();
        assert_eq!(basis.len(), RANK);
        // Gaussian elimination rank.
        let mut m = basis;
        let mut rank = 0;
        for col in 0..RANK {
            if let Some(p) = (rank..m.len()).find(|&r| m[r][col].abs() > 1e-12) {
                m.swap(rank, p);
                for r in 0..m.len() {
                    if r != rank {
                        let f = m[r][col] / m[rank][col];
                        let pivot = m[rank];
                        for (x, y) in m[r].iter_mut().zip(pivot.iter()) {
                            *x -= f * y;
                        }
                    }
                }
                rank += 1;
            }
        }
        assert_eq!(rank, RANK);
    }

    proptest! {
        #[test]
        fn klein_is_an_involution(c in random_class()) {
            prop_assert_eq!(c.act(Klein::TauH).act(Klein::TauH), c);
            prop_assert_eq!(c.act(Klein::TauV).act(Klein::TauV), c);
            prop_assert_eq!(c.act(Klein::TauH).act(Klein::TauV), c.act(Klein::TauV).act(Klein::TauH));
        }

        #[test]
        fn blocks_resolve_the_identity(c in random_class()) {
            let parts = c.blocks();
            let sum = parts.iter().fold(HomologyClass::ZERO, |a, &b| a + b);
            prop_assert_eq!(sum, c);
            for (b, p) in Block::ALL.iter().zip(&parts) {
                let (s, t) = b.signs();
                prop_assert_eq!(p.act(Klein::TauH), *p * s);
                prop_assert_eq!(p.act(Klein::TauV), *p * t);
            }
        }

        #[test]
        fn canonical_is_linear(a in random_class(), b in random_class()) {
            prop_assert_eq!(HomologyClass::new((a + b).coeffs), a + b);
        }
    }
}

//! Interval exchange transformations on `[0, 1)`.
//!
//! Lengths are stored as enclosures. For point evaluation the partition is
//! additionally snapped to the dyadic grid `2^-52 Z`; sums and differences of
//! grid points in `[0, 2)` are exact in `f64`, so `T` and `T^-1` are exact
//! inverses on grid points.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::interval::Interval;

pub const GRID: f64 = 1.0 / 4_503_599_627_370_496.0; // 2^-52

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IetError {
    #[error("interval {0} has non-positive length")]
    NonPositiveLength(usize),
    #[error("permutation pair is reducible")]
    ReduciblePermutation,
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("rows are not bijections of the alphabet")]
    NotBijective,
    #[error("point {0} outside the domain")]
    OutOfDomain(f64),
    #[error("orbit did not return within {0} steps")]
    BudgetExceeded(usize),
    #[error("degenerate subinterval")]
    DegenerateSubinterval,
    #[error("malformed record: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    pub labels: Vec<String>,
}

impl Alphabet {
    /// Labels `A, B, ...` for up to 26 letters, `a0, a1, ...` beyond.
    pub fn standard(n: usize) -> Self {
        let labels = (0..n)
            .map(|i| {
                if n <= 26 {
                    String::from(char::from(b'A' + i as u8))
                } else {
                    alloc::format!("a{i}")
                }
            })
            .collect();
        Alphabet { labels }
    }

    pub fn new(labels: Vec<String>) -> Result<Self, IetError> {
        if labels.len() < 2 {
            return Err(IetError::SizeMismatch { expected: 2, got: labels.len() });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) || l.is_empty() || l.contains(char::is_whitespace) {
                return Err(IetError::Parse(alloc::format!("bad label {l:?}")));
            }
        }
        Ok(Alphabet { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Letters listed left to right in the top (before) and bottom (after) rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PermutationPair {
    pub top: Vec<usize>,
    pub bot: Vec<usize>,
}

impl PermutationPair {
    pub fn new(top: Vec<usize>, bot: Vec<usize>) -> Result<Self, IetError> {
        let n = top.len();
        if bot.len() != n {
            return Err(IetError::SizeMismatch { expected: n, got: bot.len() });
        }
        if n < 2 {
            return Err(IetError::SizeMismatch { expected: 2, got: n });
        }
        for row in [&top, &bot] {
            let mut seen = vec![false; n];
            for &a in row.iter() {
                if a >= n || seen[a] {
                    return Err(IetError::NotBijective);
                }
                seen[a] = true;
            }
        }
        let p = PermutationPair { top, bot };
        if !p.is_irreducible() {
            return Err(IetError::ReduciblePermutation);
        }
        Ok(p)
    }

    /// The rotation-like pair `0 1 .. n-1 / n-1 .. 1 0`.
    pub fn symmetric(n: usize) -> Self {
        PermutationPair { top: (0..n).collect(), bot: (0..n).rev().collect() }
    }

    pub fn len(&self) -> usize {
        self.top.len()
    }

    pub fn is_empty(&self) -> bool {
        self.top.is_empty()
    }

    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        let mut in_top = vec![false; n];
        let mut in_bot = vec![false; n];
        let mut diff = 0i64;
        for k in 0..n - 1 {
            let a = self.top[k];
            in_top[a] = true;
            diff += if in_bot[a] { -1 } else { 1 };
            let b = self.bot[k];
            in_bot[b] = true;
            diff += if in_top[b] { -1 } else { 1 };
            if diff == 0 {
                return false;
            }
        }
        true
    }

    /// Position of each letter in the top row.
    pub fn top_pos(&self) -> Vec<usize> {
        inverse(&self.top)
    }

    pub fn bot_pos(&self) -> Vec<usize> {
        inverse(&self.bot)
    }
}

fn inverse(row: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; row.len()];
    for (i, &a) in row.iter().enumerate() {
        pos[a] = i;
    }
    pos
}

fn snap(x: f64) -> f64 {
    libm::round(x / GRID) * GRID
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iet {
    pub perm: PermutationPair,
    pub lengths: Vec<Interval>,
    /// Grid left endpoints of each letter in the top and bottom rows, plus 1.
    top_left: Vec<f64>,
    bot_left: Vec<f64>,
}

impl Iet {
    /// Validates and rescales to total length 1.
    pub fn new(perm: PermutationPair, lengths: &[Interval]) -> Result<Self, IetError> {
        let n = perm.len();
        if lengths.len() != n {
            return Err(IetError::SizeMismatch { expected: n, got: lengths.len() });
        }
        if let Some(i) = lengths.iter().position(|l| !l.is_pos()) {
            return Err(IetError::NonPositiveLength(i));
        }
        let total: Interval = lengths.iter().copied().sum();
        let lengths: Vec<Interval> = if total.lo == 1.0 && total.hi == 1.0 {
            lengths.to_vec()
        } else {
            lengths.iter().map(|&l| l / total).collect()
        };
        Ok(Self::from_normalized(perm, lengths))
    }

    pub fn from_f64(perm: PermutationPair, lengths: &[f64]) -> Result<Self, IetError> {
        let iv: Vec<Interval> = lengths.iter().map(|&x| Interval::point(x)).collect();
        if let Some(i) = lengths.iter().position(|&l| l.partial_cmp(&0.0) != Some(core::cmp::Ordering::Greater)) {
            return Err(IetError::NonPositiveLength(i));
        }
        Iet::new(perm, &iv)
    }

    fn from_normalized(perm: PermutationPair, lengths: Vec<Interval>) -> Self {
        let n = perm.len();
        // Grid lengths summing to exactly 1; the rounding slack goes to the longest letter.
        let mut mids: Vec<f64> = lengths.iter().map(|l| snap(l.mid()).max(GRID)).collect();
        let slack = 1.0 - mids.iter().sum::<f64>();
        let longest = (0..n).max_by(|&i, &j| mids[i].partial_cmp(&mids[j]).unwrap()).unwrap_or(0);
        mids[longest] += slack;
        let mut top_left = vec![0.0; n + 1];
        let mut bot_left = vec![0.0; n + 1];
        for (row, left) in [(&perm.top, &mut top_left), (&perm.bot, &mut bot_left)] {
            let mut acc = 0.0;
            for &a in row.iter() {
                left[a] = acc;
                acc += mids[a];
            }
            left[n] = 1.0;
        }
        Iet { perm, lengths, top_left, bot_left }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Enclosure of the left endpoint of `a` in the top row.
    pub fn top_left_enclosure(&self, a: usize) -> Interval {
        let k = self.perm.top_pos()[a];
        self.perm.top[..k].iter().map(|&b| self.lengths[b]).sum()
    }

    pub fn bot_left_enclosure(&self, a: usize) -> Interval {
        let k = self.perm.bot_pos()[a];
        self.perm.bot[..k].iter().map(|&b| self.lengths[b]).sum()
    }

    /// Grid left endpoint of `a` in the top row.
    pub fn top_left(&self, a: usize) -> f64 {
        self.top_left[a]
    }

    pub fn bot_left(&self, a: usize) -> f64 {
        self.bot_left[a]
    }

    /// Discontinuities `x_0 = 0 < x_1 < ... < x_n = 1` on the grid.
    pub fn discontinuities(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.perm.top.iter().map(|&a| self.top_left[a]).collect();
        v.push(1.0);
        v
    }

    fn locate(&self, row: &[usize], left: &[f64], x: f64) -> Result<usize, IetError> {
        if !(0.0..1.0).contains(&x) {
            return Err(IetError::OutOfDomain(x));
        }
        let k = row.partition_point(|&a| left[a] <= x);
        Ok(row[k - 1])
    }

    /// Letter whose top interval contains `x`.
    pub fn letter_at(&self, x: f64) -> Result<usize, IetError> {
        self.locate(&self.perm.top, &self.top_left, x)
    }

    pub fn evaluate(&self, x: f64, dir: Direction) -> Result<f64, IetError> {
        match dir {
            Direction::Forward => {
                let a = self.letter_at(x)?;
                Ok(x - self.top_left[a] + self.bot_left[a])
            }
            Direction::Inverse => {
                let a = self.locate(&self.perm.bot, &self.bot_left, x)?;
                Ok(x - self.bot_left[a] + self.top_left[a])
            }
        }
    }

    pub fn apply(&self, x: f64) -> Result<f64, IetError> {
        self.evaluate(x, Direction::Forward)
    }

    pub fn birkhoff_sum(&self, phi: &PiecewiseConstantFn, x: f64, n: usize) -> Result<f64, IetError> {
        let mut s = 0.0;
        let mut y = x;
        for _ in 0..n {
            let a = self.letter_at(y)?;
            s += phi.values[a];
            y = self.apply(y)?;
        }
        Ok(s)
    }

    /// Integer Birkhoff sum, exact.
    pub fn birkhoff_sum_int(&self, phi: &[i64], x: f64, n: usize) -> Result<i64, IetError> {
        let mut s = 0i64;
        let mut y = x;
        for _ in 0..n {
            let a = self.letter_at(y)?;
            s += phi[a];
            y = self.apply(y)?;
        }
        Ok(s)
    }

    /// Brute-force induced map on `[0, len)`, computed by following the orbits
    /// of the subinterval's own discontinuities.
    pub fn first_return(&self, len: f64, budget: usize) -> Result<InducedMap, IetError> {
        if !(len > 0.0 && len <= 1.0) {
            return Err(IetError::DegenerateSubinterval);
        }
        // Cut points: the first point in [0, len) of the backward orbit of every
        // discontinuity of T, and of the two endpoints of the subinterval.
        let mut cuts: Vec<f64> = vec![0.0];
        let mut sources: Vec<(f64, bool)> = self.perm.top[1..].iter().map(|&a| (self.top_left[a], true)).collect();
        if len < 1.0 {
            sources.push((len, false));
        }
        sources.push((0.0, false));
        for &(s, include_self) in &sources {
            let mut y = s;
            if include_self && y < len {
                cuts.push(y);
                continue;
            }
            for _ in 0..budget {
                y = self.evaluate(y, Direction::Inverse)?;
                if y < len {
                    if y > 0.0 {
                        cuts.push(y);
                    }
                    break;
                }
            }
        }
        cuts.retain(|&c| c < len);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        cuts.push(len);
        let m = cuts.len() - 1;
        let mut images = Vec::with_capacity(m);
        let mut times = Vec::with_capacity(m);
        for k in 0..m {
            let mut y = self.apply(cuts[k])?;
            let mut t = 1;
            while y >= len {
                if t >= budget {
                    return Err(IetError::BudgetExceeded(budget));
                }
                y = self.apply(y)?;
                t += 1;
            }
            images.push(y);
            times.push(t);
        }
        let mut bot: Vec<usize> = (0..m).collect();
        bot.sort_by(|&i, &j| images[i].partial_cmp(&images[j]).unwrap());
        let lengths = (0..m).map(|k| cuts[k + 1] - cuts[k]).collect();
        Ok(InducedMap { top: (0..m).collect(), bot, lengths, times })
    }

    /// Record: top row, bottom row (labels), and `lo:hi` per letter in top-row order.
    pub fn to_text(&self, alphabet: &Alphabet) -> String {
        let mut s = String::new();
        let row = |r: &[usize]| r.iter().map(|&a| alphabet.labels[a].as_str()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{}", row(&self.perm.top));
        let _ = writeln!(s, "{}", row(&self.perm.bot));
        let ls: Vec<String> =
            self.perm.top.iter().map(|&a| alloc::format!("{:e}:{:e}", self.lengths[a].lo, self.lengths[a].hi)).collect();
        let _ = writeln!(s, "{}", ls.join(" "));
        s
    }

    /// Inverse of [`Iet::to_text`]. Without an alphabet, letters are numbered
    /// in top-row order.
    pub fn parse_text(text: &str, alphabet: Option<&Alphabet>) -> Result<(Alphabet, Iet), IetError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = || lines.next().ok_or_else(|| IetError::Parse("missing line".into()));
        let top_labels: Vec<String> = next()?.split_whitespace().map(String::from).collect();
        let bot_line = next()?;
        let len_line = next()?;
        let alphabet = match alphabet {
            Some(a) => a.clone(),
            None => Alphabet::new(top_labels.clone())?,
        };
        let lookup = |l: &str| alphabet.index(l).ok_or_else(|| IetError::Parse(alloc::format!("unknown label {l}")));
        let top = top_labels.iter().map(|l| lookup(l)).collect::<Result<Vec<_>, _>>()?;
        let bot = bot_line.split_whitespace().map(lookup).collect::<Result<Vec<_>, _>>()?;
        let perm = PermutationPair::new(top, bot)?;
        let in_top_order = len_line
            .split_whitespace()
            .map(|tok| {
                let (lo, hi) = tok.split_once(':').ok_or_else(|| IetError::Parse(tok.into()))?;
                let lo: f64 = lo.parse().map_err(|_| IetError::Parse(tok.into()))?;
                let hi: f64 = hi.parse().map_err(|_| IetError::Parse(tok.into()))?;
                Ok(Interval::new(lo, hi))
            })
            .collect::<Result<Vec<_>, IetError>>()?;
        if in_top_order.len() != perm.len() {
            return Err(IetError::SizeMismatch { expected: perm.len(), got: in_top_order.len() });
        }
        let mut lengths = vec![Interval::ZERO; perm.len()];
        for (k, &a) in perm.top.iter().enumerate() {
            lengths[a] = in_top_order[k];
        }
        if let Some(i) = lengths.iter().position(|l| !l.is_pos()) {
            return Err(IetError::NonPositiveLength(i));
        }
        Ok((alphabet, Iet::from_normalized(perm, lengths)))
    }
}

/// Raw first-return data: rows, unnormalized lengths and return times.
/// It may be reducible (for instance the identity), so it is not an [`Iet`] yet.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedMap {
    pub top: Vec<usize>,
    pub bot: Vec<usize>,
    pub lengths: Vec<f64>,
    pub times: Vec<usize>,
}

impl InducedMap {
    pub fn is_identity(&self) -> bool {
        self.top == self.bot
    }

    /// Total measure of the towers over the induced intervals.
    pub fn tower_measure(&self) -> f64 {
        self.lengths.iter().zip(&self.times).map(|(l, &q)| l * q as f64).sum()
    }

    pub fn iet(&self) -> Result<Iet, IetError> {
        Iet::from_f64(PermutationPair::new(self.top.clone(), self.bot.clone())?, &self.lengths)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstantFn {
    pub values: Vec<f64>,
}

impl PiecewiseConstantFn {
    pub fn new(values: Vec<f64>) -> Self {
        PiecewiseConstantFn { values }
    }

    pub fn from_ints(values: &[i64]) -> Self {
        PiecewiseConstantFn { values: values.iter().map(|&v| v as f64).collect() }
    }

    pub fn zero(n: usize) -> Self {
        PiecewiseConstantFn { values: vec![0.0; n] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn swap() -> PermutationPair {
        PermutationPair::new(vec![0, 1], vec![1, 0]).unwrap()
    }

    fn golden() -> Iet {
        let phi = (1.0 + libm::sqrt(5.0)) / 2.0;
        Iet::from_f64(swap(), &[phi - 1.0, 2.0 - phi]).unwrap()
    }

    fn on_grid(u: f64) -> f64 {
        snap(u * (1.0 - GRID))
    }

    #[test]
    fn half_rotation() {
        let t = Iet::from_f64(swap(), &[0.5, 0.5]).unwrap();
        assert_eq!(t.apply(0.25).unwrap(), 0.75);
        assert_eq!(t.apply(0.75).unwrap(), 0.25);
        assert_eq!(t.apply(0.5).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let id = PermutationPair::new(vec![0, 1], vec![0, 1]);
        assert_eq!(id, Err(IetError::ReduciblePermutation));
        assert_eq!(Iet::from_f64(swap(), &[0.5, 0.0]), Err(IetError::NonPositiveLength(1)));
        assert!(matches!(Iet::from_f64(swap(), &[0.5]), Err(IetError::SizeMismatch { .. })));
        let reducible = PermutationPair::new(vec![0, 1, 2, 3], vec![1, 0, 3, 2]);
        assert_eq!(reducible, Err(IetError::ReduciblePermutation));
        assert!(PermutationPair::new(vec![0, 1, 2, 3], vec![3, 2, 1, 0]).is_ok());
    }

    #[test]
    fn golden_iet_is_a_rotation() {
        let t = golden();
        let alpha = 2.0 - (1.0 + libm::sqrt(5.0)) / 2.0;
        for k in 0..1000 {
            let x = on_grid((k as f64 + 0.5) / 1000.0);
            let mut r = x + alpha;
            if r >= 1.0 {
                r -= 1.0;
            }
            assert!((t.apply(x).unwrap() - r).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn out_of_domain() {
        assert_eq!(golden().apply(1.0), Err(IetError::OutOfDomain(1.0)));
        assert_eq!(golden().apply(-0.1), Err(IetError::OutOfDomain(-0.1)));
    }

    #[test]
    fn trivial_birkhoff_sums() {
        let t = golden();
        let phi = PiecewiseConstantFn::new(vec![1.0, -1.0]);
        assert_eq!(t.birkhoff_sum(&phi, 0.3, 0).unwrap(), 0.0);
        assert_eq!(t.birkhoff_sum(&phi, 0.3, 1).unwrap(), 1.0);
        assert_eq!(t.birkhoff_sum(&phi, 0.9, 1).unwrap(), -1.0);
    }

    #[test]
    fn first_return_trivial_cases() {
        let t = golden();
        let full = t.first_return(1.0, 10).unwrap();
        assert_eq!(full.iet().unwrap(), t);
        assert_eq!(full.times, vec![1, 1]);

        let half = Iet::from_f64(swap(), &[0.5, 0.5]).unwrap();
        let ind = half.first_return(0.5, 10).unwrap();
        assert!(ind.is_identity());
        assert_eq!(ind.times, vec![2]);
        assert_eq!(half.first_return(0.0, 10).err(), Some(IetError::DegenerateSubinterval));
    }

    #[test]
    fn first_return_tiles_by_towers() {
        let t = golden();
        let len = 0.3;
        let ind = t.first_return(len, 1000).unwrap();
        assert!((ind.tower_measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let t = Iet::from_f64(PermutationPair::new(vec![2, 0, 1], vec![1, 2, 0]).unwrap(), &[0.2, 0.3, 0.5]).unwrap();
        let ab = Alphabet::standard(3);
        let text = t.to_text(&ab);
        let (_, back) = Iet::parse_text(&text, Some(&ab)).unwrap();
        assert_eq!(back, t);
        let (ab2, relabeled) = Iet::parse_text(&text, None).unwrap();
        assert_eq!(ab2.labels, vec!["C", "A", "B"]);
        assert_eq!(relabeled.to_text(&ab2), text);
    }

    proptest! {
        #[test]
        fn inverse_is_exact(u in 0.0f64..1.0, l in proptest::collection::vec(0.01f64..1.0, 4)) {
            let t = Iet::from_f64(PermutationPair::symmetric(4), &l).unwrap();
            let x = on_grid(u);
            let y = t.evaluate(x, Direction::Forward).unwrap();
            prop_assert_eq!(t.evaluate(y, Direction::Inverse).unwrap(), x);
        }

        #[test]
        fn birkhoff_additivity(u in 0.0f64..1.0, m in 0usize..50, n in 0usize..50) {
            let t = golden();
            let phi = [3i64, -2];
            let x = on_grid(u);
            let mut y = x;
            for _ in 0..m {
                y = t.apply(y).unwrap();
            }
            let whole = t.birkhoff_sum_int(&phi, x, m + n).unwrap();
            let split = t.birkhoff_sum_int(&phi, x, m).unwrap() + t.birkhoff_sum_int(&phi, y, n).unwrap();
            prop_assert_eq!(whole, split);
        }

        #[test]
        fn images_tile_the_domain(l in proptest::collection::vec(0.01f64..1.0, 5)) {
            let t = Iet::from_f64(PermutationPair::symmetric(5), &l).unwrap();
            let mut starts: Vec<(f64, f64)> = (0..5).map(|a| (t.bot_left(a), t.top_left(a))).collect();
            starts.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
            prop_assert_eq!(starts[0].0, 0.0);
            let total: Interval = t.lengths.iter().copied().sum();
            prop_assert!(total.contains(1.0));
        }
    }
}

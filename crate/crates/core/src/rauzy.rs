//! Rauzy-Veech induction, cocycle matrices, loops and Rokhlin towers.
//!
//! Convention: each step compares the last letters of the two rows and cuts
//! the longer one. Old lengths are `E` times new lengths, so a loop's matrix
//! is `A = E_1 E_2 ... E_N`, and `A[i][j]` counts floors of tower `j` inside
//! interval `i`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::iet::{Iet, IetError, PermutationPair};
use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RauzyError {
    #[error("compared lengths overlap: {0} vs {1}")]
    TieAmbiguous(Interval, Interval),
    #[error("matrix has no positive power")]
    NotPrimitive,
    #[error("integer overflow in matrix product")]
    Overflow,
    #[error("move word does not return to its start")]
    NotALoop,
    #[error("bad move word: {0}")]
    BadWord(String),
    #[error(transparent)]
    Iet(#[from] IetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RauzyMove {
    /// The last bottom interval is longer.
    Bottom,
    /// The last top interval is longer.
    Top,
}

impl RauzyMove {
    pub fn as_char(self) -> char {
        match self {
            RauzyMove::Top => 't',
            RauzyMove::Bottom => 'b',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            't' => Some(RauzyMove::Top),
            'b' => Some(RauzyMove::Bottom),
            _ => None,
        }
    }
}

pub fn word_to_string(moves: &[RauzyMove]) -> String {
    moves.iter().map(|m| m.as_char()).collect()
}

pub fn parse_word(s: &str) -> Result<Vec<RauzyMove>, RauzyError> {
    s.trim().chars().map(|c| RauzyMove::from_char(c).ok_or_else(|| RauzyError::BadWord(s.into()))).collect()
}

/// Square nonnegative integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CocycleMatrix {
    pub n: usize,
    pub entries: Vec<i64>,
}

impl CocycleMatrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        CocycleMatrix { n, entries }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        CocycleMatrix { n, entries: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// `I + e_{winner, loser}`.
    pub fn elementary(n: usize, winner: usize, loser: usize) -> Self {
        let mut m = Self::identity(n);
        m.entries[winner * n + loser] += 1;
        m
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn mul(&self, other: &CocycleMatrix) -> Result<CocycleMatrix, RauzyError> {
        let n = self.n;
        let mut out = vec![0i64; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let p = a.checked_mul(other.get(k, j)).ok_or(RauzyError::Overflow)?;
                    out[i * n + j] = out[i * n + j].checked_add(p).ok_or(RauzyError::Overflow)?;
                }
            }
        }
        Ok(CocycleMatrix { n, entries: out })
    }

    pub fn pow(&self, k: u32) -> Result<CocycleMatrix, RauzyError> {
        let mut acc = Self::identity(self.n);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// In-place right multiplication by `I + e_{w,l}`: column `l` += column `w`.
    pub fn push_elementary(&mut self, winner: usize, loser: usize) -> Result<(), RauzyError> {
        let n = self.n;
        for i in 0..n {
            let v = self.entries[i * n + winner];
            let e = &mut self.entries[i * n + loser];
            *e = e.checked_add(v).ok_or(RauzyError::Overflow)?;
        }
        Ok(())
    }

    pub fn transpose(&self) -> CocycleMatrix {
        let n = self.n;
        let mut out = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.get(i, j);
            }
        }
        CocycleMatrix { n, entries: out }
    }

    /// `A^T v` for integer test vectors.
    pub fn transpose_apply(&self, v: &[i64]) -> Result<Vec<i64>, RauzyError> {
        (0..self.n)
            .map(|j| {
                (0..self.n).try_fold(0i64, |acc, i| {
                    self.get(i, j).checked_mul(v[i]).and_then(|p| acc.checked_add(p)).ok_or(RauzyError::Overflow)
                })
            })
            .collect()
    }

    pub fn apply_f64(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) as f64 * v[j]).sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<i64> {
        (0..self.n).map(|j| (0..self.n).map(|i| self.get(i, j)).sum()).collect()
    }

    pub fn max_entry(&self) -> i64 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    pub fn entry_sum(&self) -> i64 {
        self.entries.iter().sum()
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|&e| e > 0)
    }

    /// Some power `A^m`, `m <= (n-1)^2 + 1`, is entrywise positive (Wielandt).
    pub fn is_primitive(&self) -> bool {
        let n = self.n;
        let pattern: Vec<bool> = self.entries.iter().map(|&e| e > 0).collect();
        let mut p = pattern.clone();
        let bound = (n - 1) * (n - 1) + 1;
        for _ in 0..bound {
            if p.iter().all(|&b| b) {
                return true;
            }
            let mut q = vec![false; n * n];
            for i in 0..n {
                for k in 0..n {
                    if p[i * n + k] {
                        for j in 0..n {
                            q[i * n + j] |= pattern[k * n + j];
                        }
                    }
                }
            }
            p = q;
        }
        p.iter().all(|&b| b)
    }

    /// Exact determinant (Bareiss elimination over big integers).
    pub fn det(&self) -> BigInt {
        let n = self.n;
        let mut m: Vec<Vec<BigInt>> = self.rows().into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if m[k][k].is_zero() {
                let Some(p) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                    return BigInt::zero();
                };
                m.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                    m[i][j] = v;
                }
            }
            prev = m[k][k].clone();
        }
        sign * &m[n - 1][n - 1]
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs().is_one()
    }
}

/// Winner and loser letters of a move on `perm`.
pub fn move_letters(perm: &PermutationPair, mv: RauzyMove) -> (usize, usize) {
    let n = perm.len();
    let (t, b) = (perm.top[n - 1], perm.bot[n - 1]);
    match mv {
        RauzyMove::Top => (t, b),
        RauzyMove::Bottom => (b, t),
    }
}

/// Combinatorial part of one step.
pub fn step_perm(perm: &PermutationPair, mv: RauzyMove) -> PermutationPair {
    let (w, l) = move_letters(perm, mv);
    let mut p = perm.clone();
    let row = match mv {
        RauzyMove::Top => &mut p.bot,
        RauzyMove::Bottom => &mut p.top,
    };
    row.pop();
    let pos = row.iter().position(|&x| x == w).expect("winner present in row");
    row.insert(pos + 1, l);
    p
}

/// Permutation and matrix after replaying a move word.
pub fn replay(perm: &PermutationPair, moves: &[RauzyMove]) -> Result<(PermutationPair, CocycleMatrix), RauzyError> {
    let mut p = perm.clone();
    let mut a = CocycleMatrix::identity(perm.len());
    for &mv in moves {
        let (w, l) = move_letters(&p, mv);
        a.push_elementary(w, l)?;
        p = step_perm(&p, mv);
    }
    Ok((p, a))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RvStep {
    /// Induced IET rescaled to unit length.
    pub iet: Iet,
    /// Lengths before rescaling, in the old length units.
    pub raw_lengths: Vec<Interval>,
    pub mv: RauzyMove,
    pub matrix: CocycleMatrix,
}

/// One certified step on enclosures; refuses when the compared lengths overlap.
pub fn rv_step(t: &Iet) -> Result<RvStep, RauzyError> {
    let n = t.len();
    let (a, b) = (t.perm.top[n - 1], t.perm.bot[n - 1]);
    let (la, lb) = (t.lengths[a], t.lengths[b]);
    let mv = if lb.certainly_lt(la) {
        RauzyMove::Top
    } else if la.certainly_lt(lb) {
        RauzyMove::Bottom
    } else {
        return Err(RauzyError::TieAmbiguous(la, lb));
    };
    let (w, l) = move_letters(&t.perm, mv);
    let mut raw = t.lengths.clone();
    raw[w] = Interval::new(0.0f64.max((raw[w] - raw[l]).lo), (raw[w] - raw[l]).hi);
    let perm = step_perm(&t.perm, mv);
    let iet = Iet::new(perm, &raw)?;
    Ok(RvStep { iet, raw_lengths: raw, mv, matrix: CocycleMatrix::elementary(n, w, l) })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RauzyLoop {
    pub start: PermutationPair,
    pub moves: Vec<RauzyMove>,
    pub matrix: CocycleMatrix,
}

impl RauzyLoop {
    pub fn new(start: PermutationPair, moves: Vec<RauzyMove>) -> Result<Self, RauzyError> {
        let (end, matrix) = replay(&start, &moves)?;
        if end != start || moves.is_empty() {
            return Err(RauzyError::NotALoop);
        }
        Ok(RauzyLoop { start, moves, matrix })
    }

    pub fn word(&self) -> String {
        word_to_string(&self.moves)
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

/// Rotations of `moves` that are themselves loops at `start`, lexicographically least.
fn canonical_rotation(start: &PermutationPair, moves: &[RauzyMove]) -> Vec<RauzyMove> {
    let mut best = moves.to_vec();
    let mut p = start.clone();
    for r in 1..moves.len() {
        p = step_perm(&p, moves[r - 1]);
        if p == *start {
            let mut rot = moves[r..].to_vec();
            rot.extend_from_slice(&moves[..r]);
            if rot < best {
                best = rot;
            }
        }
    }
    best
}

/// All primitive loops at `start` of length at most `max_len`, one per class of
/// rotations, ordered by length then word.
pub fn rauzy_loop_search(start: &PermutationPair, max_len: usize) -> Vec<RauzyLoop> {
    let mut found: Vec<Vec<RauzyMove>> = Vec::new();
    let mut stack: Vec<(PermutationPair, Vec<RauzyMove>)> = vec![(start.clone(), Vec::new())];
    while let Some((p, word)) = stack.pop() {
        if !word.is_empty() && p == *start {
            found.push(canonical_rotation(start, &word));
        }
        if word.len() == max_len {
            continue;
        }
        for mv in [RauzyMove::Bottom, RauzyMove::Top] {
            let mut w = word.clone();
            w.push(mv);
            stack.push((step_perm(&p, mv), w));
        }
    }
    found.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    found.dedup();
    found
        .into_iter()
        .filter_map(|w| RauzyLoop::new(start.clone(), w).ok())
        .filter(|l| l.matrix.is_primitive())
        .collect()
}

/// Perron eigenvalue and eigenvector (sum 1) of a primitive matrix.
///
/// The eigenvalue enclosure is the Collatz-Wielandt bracket of the computed
/// vector; the vector enclosure is the midpoint inflated by a multiple of the
/// residual.
pub fn fixed_point_lengths(a: &CocycleMatrix) -> Result<(Interval, Vec<Interval>), RauzyError> {
    if !a.is_primitive() {
        return Err(RauzyError::NotPrimitive);
    }
    let n = a.n;
    let mut v = vec![1.0 / n as f64; n];
    let mut rho = 0.0;
    for _ in 0..100_000 {
        let w = a.apply_f64(&v);
        let s: f64 = w.iter().sum();
        let next: Vec<f64> = w.iter().map(|x| x / s).collect();
        let change = next.iter().zip(&v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        v = next;
        rho = s;
        if change < 1e-17 {
            break;
        }
    }
    let av = a.apply_f64(&v);
    let resid = av.iter().zip(&v).map(|(p, q)| (p - rho * q).abs()).fold(0.0, f64::max);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let num: Interval = (0..n).map(|j| Interval::point(a.get(i, j) as f64) * Interval::point(v[j])).sum();
        let q = num / Interval::point(v[i]);
        lo = lo.min(q.lo);
        hi = hi.max(q.hi);
    }
    let rad = 1e3 * resid / rho + 4.0 * f64::EPSILON;
    let lengths = v.iter().map(|&x| Interval::around(x, rad)).collect();
    Ok((Interval::new(lo, hi), lengths))
}

/// An IET fixed by replaying a loop, together with its loop data.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicIet {
    pub iet: Iet,
    pub lp: RauzyLoop,
    /// Perron eigenvalue of the loop matrix: lengths shrink by this factor per period.
    pub rho: Interval,
}

impl PeriodicIet {
    pub fn from_loop(lp: RauzyLoop) -> Result<Self, RauzyError> {
        let (rho, lengths) = fixed_point_lengths(&lp.matrix)?;
        Self::with_lengths(lp, &lengths, rho)
    }

    /// Loop data with independently known length enclosures (for instance exact ones).
    pub fn with_lengths(lp: RauzyLoop, lengths: &[Interval], rho: Interval) -> Result<Self, RauzyError> {
        if !lp.matrix.is_primitive() {
            return Err(RauzyError::NotPrimitive);
        }
        let iet = Iet::new(lp.start.clone(), lengths)?;
        Ok(PeriodicIet { iet, lp, rho })
    }

    pub fn period(&self) -> usize {
        self.lp.len()
    }

    pub fn matrix(&self) -> &CocycleMatrix {
        &self.lp.matrix
    }

    pub fn len(&self) -> usize {
        self.iet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iet.is_empty()
    }

    /// Replays the loop on the length enclosures without comparing them, checking
    /// each move is not contradicted. Returns the final lengths rescaled by `rho`.
    pub fn replay_lengths(&self) -> Result<Vec<Interval>, RauzyError> {
        let mut p = self.lp.start.clone();
        let mut l = self.iet.lengths.clone();
        for &mv in &self.lp.moves {
            let (w, lo) = move_letters(&p, mv);
            if l[w].certainly_lt(l[lo]) {
                return Err(RauzyError::TieAmbiguous(l[w], l[lo]));
            }
            l[w] = l[w] - l[lo];
            p = step_perm(&p, mv);
        }
        Ok(l.into_iter().map(|x| x * self.rho).collect())
    }

    pub fn towers(&self, k: u32) -> Result<TowerSystem, RauzyError> {
        TowerSystem::build(self, k)
    }
}

/// Rokhlin towers over the depth-`k` induced intervals `J_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerSystem {
    pub depth: u32,
    pub matrix: CocycleMatrix,
    pub heights: Vec<usize>,
    /// `words[j][l]`: the letter whose interval contains floor `l` of tower `j`.
    pub words: Vec<Vec<usize>>,
    /// Enclosures of floor left endpoints.
    pub floor_left: Vec<Vec<Interval>>,
    /// Enclosures of `|J_j|`.
    pub base_lengths: Vec<Interval>,
    /// All floors `(left midpoint, j, l)` sorted by position.
    sorted: Vec<(f64, usize, usize)>,
}

impl TowerSystem {
    fn build(p: &PeriodicIet, k: u32) -> Result<Self, RauzyError> {
        let n = p.len();
        let matrix = p.matrix().pow(k)?;
        // Substitution of each step: the loser's new tower passes through loser and winner.
        let mut subs: Vec<(usize, usize, RauzyMove)> = Vec::with_capacity(p.period());
        let mut perm = p.lp.start.clone();
        for &mv in &p.lp.moves {
            let (w, l) = move_letters(&perm, mv);
            subs.push((w, l, mv));
            perm = step_perm(&perm, mv);
        }
        let mut words: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for _ in 0..k {
            for &(w, l, mv) in subs.iter().rev() {
                for word in words.iter_mut() {
                    let mut out = Vec::with_capacity(word.len() + 1);
                    for &x in word.iter() {
                        if x == l {
                            match mv {
                                RauzyMove::Top => out.extend_from_slice(&[l, w]),
                                RauzyMove::Bottom => out.extend_from_slice(&[w, l]),
                            }
                        } else {
                            out.push(x);
                        }
                    }
                    *word = out;
                }
            }
        }
        let heights: Vec<usize> = words.iter().map(|w| w.len()).collect();
        let scale = Interval::ONE / p.rho.powi(k);
        let base_lengths: Vec<Interval> = p.iet.lengths.iter().map(|&l| l * scale).collect();
        let tl: Vec<Interval> = (0..n).map(|a| p.iet.top_left_enclosure(a)).collect();
        let bl: Vec<Interval> = (0..n).map(|a| p.iet.bot_left_enclosure(a)).collect();
        let mut floor_left = Vec::with_capacity(n);
        let mut sorted = Vec::new();
        for j in 0..n {
            let mut x = tl[j] * scale;
            let mut lefts = Vec::with_capacity(heights[j]);
            for (ell, &s) in words[j].iter().enumerate() {
                lefts.push(x);
                sorted.push((x.mid(), j, ell));
                x = x - tl[s] + bl[s];
            }
            floor_left.push(lefts);
        }
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(TowerSystem { depth: k, matrix, heights, words, floor_left, base_lengths, sorted })
    }

    pub fn floor_count(&self) -> usize {
        self.sorted.len()
    }

    /// Enclosure of the floor `(j, l)` as a set.
    pub fn floor(&self, j: usize, ell: usize) -> Interval {
        let left = self.floor_left[j][ell];
        Interval::new(left.lo, (left + self.base_lengths[j]).hi)
    }

    /// Every floor whose enclosure meets `x`.
    pub fn locate(&self, x: Interval) -> Vec<(usize, usize)> {
        let mut k = self.sorted.partition_point(|f| f.0 <= x.hi);
        let mut out = Vec::new();
        let longest = self.base_lengths.iter().map(|l| l.hi).fold(0.0, f64::max);
        while k > 0 {
            k -= 1;
            let (mid, j, ell) = self.sorted[k];
            if mid + 2.0 * longest < x.lo {
                break;
            }
            if self.floor(j, ell).overlaps(x) {
                out.push((j, ell));
            }
        }
        out.reverse();
        out
    }
}

//! Stable eigenvectors of the period matrix, the adic coding of points and the
//! transfer function `h` solving `h(Tx) - h(x) = psi(x)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::homology::Block;
use crate::iet::{IetError, PiecewiseConstantFn};
use crate::interval::Interval;
use crate::linalg::{eigenvalues, lstsq, null_space, polish, Eigenvalue};
use crate::rauzy::{CocycleMatrix, PeriodicIet, RauzyError, TowerSystem};

/// Eigenvalues with `1 - |lambda|` at most this are treated as neutral.
pub const NEUTRAL_BAND: f64 = 1e-6;
/// Eigenvalues with `1 - |lambda|` between the neutral band and this are refused.
pub const NEAR_UNIT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdicError {
    #[error("stable subspace only has complex eigenvalues: {0:?}")]
    ComplexStableSpace(Vec<Eigenvalue>),
    #[error("eigenvalue of modulus {0} too close to 1 to classify")]
    NearUnitEigenvalue(f64),
    #[error("jump vector not determined: {free} free directions after {relations} relations")]
    UnderdeterminedTau { free: usize, relations: usize },
    #[error("eigen-residual {0} above tolerance")]
    Residual(f64),
    #[error("subspace is not invariant (residual {0})")]
    NotInvariant(f64),
    #[error(transparent)]
    Rauzy(#[from] RauzyError),
    #[error(transparent)]
    Iet(#[from] IetError),
}

/// A real stable eigenpair `A^T psi = lambda psi`, `|lambda| < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StablePair {
    pub lambda: f64,
    /// Normalized so that the entry of largest modulus is `+1`.
    pub psi: PiecewiseConstantFn,
    pub block: Option<Block>,
}

impl StablePair {
    pub fn residual(&self, a: &CocycleMatrix) -> f64 {
        let n = a.n;
        (0..n)
            .map(|j| {
                let s: f64 = (0..n).map(|i| a.get(i, j) as f64 * self.psi.values[i]).sum();
                (s - self.lambda * self.psi.values[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Stable eigen-data of `A^T`, optionally restricted to an invariant subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct StableSpectrum {
    pub pairs: Vec<StablePair>,
    /// Stable eigenvalues that are complex or defective, reported but not used.
    pub skipped: Vec<Eigenvalue>,
    /// Whole spectrum of the (restricted) matrix.
    pub spectrum: Vec<Eigenvalue>,
}

fn transpose_f64(a: &CocycleMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.n, a.n, |i, j| a.get(j, i) as f64)
}

fn normalize(v: &DVector<f64>) -> Vec<f64> {
    let k = v.iamax();
    let s = v[k];
    v.iter().map(|x| x / s).collect()
}

/// Real eigenpairs of `A^T` with `|lambda| < 1`, sorted by `|lambda|` descending.
///
/// With `subspace = Some((W, tag))`, the columns of `W` must span an
/// `A^T`-invariant subspace and eigenvectors are taken inside it.
pub fn stable_spectrum(a: &CocycleMatrix, subspace: Option<(&DMatrix<f64>, Block)>) -> Result<StableSpectrum, AdicError> {
    let at = transpose_f64(a);
    let (c, w, tag) = match subspace {
        None => (at.clone(), DMatrix::identity(a.n, a.n), None),
        Some((w, tag)) => {
            let aw = &at * w;
            let mut c = DMatrix::zeros(w.ncols(), w.ncols());
            for k in 0..w.ncols() {
                let (x, r) = lstsq(w, &aw.column(k).into_owned());
                if r > 1e-9 * aw.amax().max(1.0) {
                    return Err(AdicError::NotInvariant(r));
                }
                c.set_column(k, &x);
            }
            if c.iter().all(|x| (x - libm::round(*x)).abs() < 1e-9) {
                c.apply(|x| *x = libm::round(*x));
            }
            (c, w.clone(), Some(tag))
        }
    };
    let spectrum = eigenvalues(&c);
    let mut stable: Vec<Eigenvalue> = Vec::new();
    for e in &spectrum {
        let gap = 1.0 - e.abs();
        if gap > NEUTRAL_BAND && gap <= NEAR_UNIT {
            return Err(AdicError::NearUnitEigenvalue(e.abs()));
        }
        if gap > NEAR_UNIT {
            stable.push(*e);
        }
    }
    stable.sort_by(|x, y| y.abs().partial_cmp(&x.abs()).unwrap().then(x.re.partial_cmp(&y.re).unwrap()));
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    let mut k = 0;
    while k < stable.len() {
        let e = stable[k];
        let mut mult = 1;
        while k + mult < stable.len() && (stable[k + mult].re - e.re).abs() < 1e-7 && (stable[k + mult].im - e.im).abs() < 1e-7 {
            mult += 1;
        }
        k += mult;
        if !e.is_real(1e-9) {
            skipped.extend(core::iter::repeat(e).take(mult));
            continue;
        }
        let shifted = &c - DMatrix::identity(c.nrows(), c.nrows()) * e.re;
        let vs = null_space(&shifted, 1e-9);
        if vs.len() < mult {
            skipped.extend(core::iter::repeat(e).take(mult));
            continue;
        }
        for v in vs.iter().take(mult) {
            // Inverse iteration is only stable inside a simple eigenspace.
            let v = if mult == 1 { polish(&c, e.re, v) } else { v.clone() };
            let psi = normalize(&(&w * v));
            let pair = StablePair { lambda: e.re, psi: PiecewiseConstantFn::new(psi), block: tag };
            pairs.push(pair);
        }
    }
    if pairs.is_empty() && !skipped.is_empty() {
        return Err(AdicError::ComplexStableSpace(skipped));
    }
    Ok(StableSpectrum { pairs, skipped, spectrum })
}

/// A floor `(j, ell)` of a depth-1 tower, seen as an edge of the Bratteli diagram.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BratteliEdge {
    pub j: usize,
    pub ell: usize,
    /// Letter whose interval contains the floor.
    pub s: usize,
    /// Birkhoff sum of `psi` up to this floor.
    pub f: Interval,
}

/// One edge per depth-1 floor; `psi_rad` bounds the error in each entry of `psi`.
pub fn bratteli_edges(towers: &TowerSystem, psi: &PiecewiseConstantFn, psi_rad: f64) -> Vec<Vec<BratteliEdge>> {
    towers
        .words
        .iter()
        .enumerate()
        .map(|(j, word)| {
            let mut acc = Interval::ZERO;
            word.iter()
                .enumerate()
                .map(|(ell, &s)| {
                    let e = BratteliEdge { j, ell, s, f: acc };
                    acc = acc + Interval::around(psi.values[s], psi_rad);
                    e
                })
                .collect()
        })
        .collect()
}

/// Jumps `tau_a = h(right end of I_a) - h(left end of I_a)` in the
/// `1/lambda`-eigenspace of `A`, pinned by `h(0) = 0` and the values of `h`
/// at `T^-1(0)` and `T^-1(1)`.
pub fn tau_vector(a: &CocycleMatrix, lambda: f64, psi: &[f64], perm: &crate::iet::PermutationPair) -> Result<Vec<f64>, AdicError> {
    let n = a.n;
    if psi.iter().all(|&x| x == 0.0) {
        return Ok(vec![0.0; n]);
    }
    let am = DMatrix::from_fn(n, n, |i, j| a.get(i, j) as f64);
    let shifted = &am - DMatrix::identity(n, n) / lambda;
    let basis = null_space(&shifted, 1e-9);
    let d = basis.len();
    if d == 0 {
        return Err(AdicError::Residual(shifted.svd(false, false).singular_values.min()));
    }
    let pos = perm.top_pos();
    let first = perm.bot[0];
    let last = perm.bot[n - 1];
    // Sum of tau over letters left of `first` is h(T^-1 0) = -psi_first.
    let left: Vec<f64> = (0..n).map(|x| if pos[x] < pos[first] { 1.0 } else { 0.0 }).collect();
    // Sum over letters right of `last` is h(1) - h(T^-1 1) = psi_last.
    let right: Vec<f64> = (0..n).map(|x| if pos[x] > pos[last] { 1.0 } else { 0.0 }).collect();
    let rel = DMatrix::from_fn(2, d, |r, k| {
        let row = if r == 0 { &left } else { &right };
        row.iter().zip(basis[k].iter()).map(|(p, q)| p * q).sum::<f64>()
    });
    let rhs = DVector::from_vec(vec![-psi[first], psi[last]]);
    let rank = rel.clone().svd(false, false).rank(1e-9 * rel.amax().max(1.0));
    if rank < d {
        return Err(AdicError::UnderdeterminedTau { free: d - rank, relations: 2 });
    }
    let (c, r) = lstsq(&rel, &rhs);
    if r > 1e-9 {
        return Err(AdicError::Residual(r));
    }
    let mut tau = vec![0.0; n];
    for (k, v) in basis.iter().enumerate() {
        for i in 0..n {
            tau[i] += c[k] * v[i];
        }
    }
    Ok(tau)
}

/// Everything needed to evaluate `h` for one stable pair of a periodic IET.
#[derive(Clone, Debug)]
pub struct TransferData {
    pub pair: StablePair,
    pub periodic: PeriodicIet,
    pub towers: TowerSystem,
    /// `edges[j][ell]`.
    pub edges: Vec<Vec<BratteliEdge>>,
    /// Edges grouped by source letter.
    pub by_source: Vec<Vec<(usize, usize)>>,
    pub lambda: Interval,
    pub psi_rad: f64,
    pub tau: Vec<f64>,
    /// Maximal difference of two weights.
    pub f_spread: f64,
    /// Enclosure of `h(I_a)` for each letter.
    pub letter_range: Vec<Interval>,
    pub range: Interval,
    tl: Vec<Interval>,
    tr: Vec<Interval>,
}

/// Branch budget of a single coding.
const MAX_BRANCHES: usize = 64;
/// Coding stops refining once the renormalized point is this wide.
const MAX_WIDTH: f64 = 1e-2;

impl TransferData {
    pub fn new(periodic: &PeriodicIet, pair: StablePair) -> Result<Self, AdicError> {
        let a = periodic.matrix();
        let res = pair.residual(a);
        if res > 1e-10 {
            return Err(AdicError::Residual(res));
        }
        let psi_rad = 1e3 * res + 8.0 * f64::EPSILON;
        let lambda = Interval::around(pair.lambda, psi_rad);
        let towers = periodic.towers(1)?;
        let edges = bratteli_edges(&towers, &pair.psi, psi_rad);
        let n = periodic.len();
        let mut by_source = vec![Vec::new(); n];
        for col in &edges {
            for e in col {
                by_source[e.s].push((e.j, e.ell));
            }
        }
        let tau = tau_vector(a, pair.lambda, &pair.psi.values, &periodic.iet.perm)?;
        let fs = edges.iter().flatten().map(|e| e.f);
        let (flo, fhi) = fs.fold((0.0f64, 0.0f64), |(l, h), f| (l.min(f.lo), h.max(f.hi)));
        let global = if pair.lambda >= 0.0 {
            Interval::new(flo, fhi) / (Interval::ONE - lambda)
        } else {
            let m = flo.abs().max(fhi.abs());
            Interval::new(-m, m) / (Interval::ONE - lambda.abs())
        };
        let tl: Vec<Interval> = (0..n).map(|x| periodic.iet.top_left_enclosure(x)).collect();
        let tr: Vec<Interval> = (0..n).map(|x| tl[x] + periodic.iet.lengths[x]).collect();
        let mut td = TransferData {
            pair,
            periodic: periodic.clone(),
            towers,
            edges,
            by_source,
            lambda,
            psi_rad,
            tau,
            f_spread: fhi - flo,
            letter_range: vec![global; n],
            range: global,
            tl,
            tr,
        };
        td.refine_ranges(80);
        Ok(td)
    }

    /// Contracts the per-letter ranges with `h = f(e) + lambda h(y)`.
    fn refine_ranges(&mut self, rounds: usize) {
        let n = self.letter_range.len();
        for _ in 0..rounds {
            let mut next = self.letter_range.clone();
            for (s, slot) in next.iter_mut().enumerate() {
                let mut r: Option<Interval> = None;
                for &(j, ell) in &self.by_source[s] {
                    let v = self.edges[j][ell].f + self.lambda * self.letter_range[j];
                    r = Some(r.map_or(v, |x| x.hull(v)));
                }
                if let Some(r) = r.and_then(|r| r.intersect(*slot)) {
                    *slot = r;
                }
            }
            self.letter_range = next;
        }
        self.range = (1..n).fold(self.letter_range[0], |acc, j| acc.hull(self.letter_range[j]));
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.pair.lambda
    }

    /// Enclosure of `h(x)` for a point, using the first `depth` coding edges.
    pub fn h_eval(&self, x: f64, depth: usize) -> Result<Interval, AdicError> {
        self.h_enclose(Interval::point(x), depth)
    }

    /// Enclosure of `h` over every point of `x`.
    pub fn h_enclose(&self, x: Interval, depth: usize) -> Result<Interval, AdicError> {
        if !(x.lo >= 0.0 && x.hi < 1.0) {
            return Err(IetError::OutOfDomain(if x.lo < 0.0 { x.lo } else { x.hi }).into());
        }
        let mut out: Option<Interval> = None;
        let mut stack = vec![(x, 0usize, Interval::ZERO, Interval::ONE, None::<usize>)];
        let mut branches = 1usize;
        while let Some((y, level, acc, scale, letter)) = stack.pop() {
            let floors = if level < depth && y.width() <= MAX_WIDTH { self.towers.locate(y) } else { Vec::new() };
            let can_branch = branches + floors.len().saturating_sub(1) <= MAX_BRANCHES;
            if floors.is_empty() || !can_branch {
                let tail = letter.map_or(self.range, |j| self.letter_range[j]);
                let v = acc + scale * tail;
                out = Some(out.map_or(v, |o| o.hull(v)));
                continue;
            }
            branches += floors.len() - 1;
            for (j, ell) in floors {
                let Some(sub) = y.intersect(self.towers.floor(j, ell)) else { continue };
                let y2 = self.tl[j] + (sub - self.towers.floor_left[j][ell]) * self.periodic.rho;
                let dom = Interval::new(self.tl[j].lo, self.tr[j].hi);
                let Some(y2) = y2.intersect(dom) else { continue };
                stack.push((y2, level + 1, acc + scale * self.edges[j][ell].f, scale * self.lambda, Some(j)));
            }
        }
        Ok(out.unwrap_or(self.range))
    }

    /// `psi` at a point as an enclosure, taking the hull over letters the point may lie in.
    pub fn psi_enclose(&self, x: Interval) -> Interval {
        let mut out: Option<Interval> = None;
        for a in 0..self.len() {
            if x.overlaps(Interval::new(self.tl[a].lo, self.tr[a].hi)) {
                let v = Interval::around(self.pair.psi.values[a], self.psi_rad);
                out = Some(out.map_or(v, |o| o.hull(v)));
            }
        }
        out.unwrap_or(Interval::ZERO)
    }

    /// Enclosure of `T(x)` from the length enclosures.
    pub fn map_enclose(&self, x: Interval) -> Interval {
        let bl: Vec<Interval> = (0..self.len()).map(|a| self.periodic.iet.bot_left_enclosure(a)).collect();
        let mut out: Option<Interval> = None;
        for a in 0..self.len() {
            if let Some(sub) = x.intersect(Interval::new(self.tl[a].lo, self.tr[a].hi)) {
                let v = sub - self.tl[a] + bl[a];
                out = Some(out.map_or(v, |o| o.hull(v)));
            }
        }
        out.unwrap_or(x)
    }

    /// Values `h(x_i)` at the top discontinuities (including 0 and 1) from partial sums of `tau`.
    pub fn tau_partial_sums(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for &a in &self.periodic.iet.perm.top {
            acc += self.tau[a];
            out.push(acc);
        }
        out
    }
}

/// A depth-`k` cell `J(p)` of the adic coding together with a bound on `h` over it.
#[derive(Clone, Debug, PartialEq)]
pub struct AdicCell {
    /// Edges `(j, ell)` from the coarsest level down.
    pub path: Vec<(usize, usize)>,
    pub left: Interval,
    pub length: Interval,
    /// Encloses `h` over the whole cell.
    pub bound: Interval,
}

impl AdicCell {
    pub fn terminal(&self) -> usize {
        self.path.last().map_or(0, |e| e.0)
    }

    pub fn span(&self) -> Interval {
        Interval::new(self.left.lo, (self.left + self.length).hi)
    }
}

impl TransferData {
    /// Every depth-`k` cell with its bound, ordered by position.
    pub fn cell_bounds(&self, depth: usize) -> Vec<AdicCell> {
        let n = self.len();
        let inv_rho = Interval::ONE / self.periodic.rho;
        let mut out = Vec::new();
        // (path, left, value, scale, position scale, terminal)
        let mut stack: Vec<(Vec<(usize, usize)>, Interval, Interval, Interval, Interval, Option<usize>)> =
            vec![(Vec::new(), Interval::ZERO, Interval::ZERO, Interval::ONE, Interval::ONE, None)];
        while let Some((path, left, value, scale, pscale, term)) = stack.pop() {
            if path.len() == depth {
                let (length, tail, left) = match term {
                    Some(j) => (self.periodic.iet.lengths[j] * pscale, self.letter_range[j], left),
                    None => (Interval::ONE, self.range, Interval::ZERO),
                };
                out.push(AdicCell { path, left, length, bound: value + scale * tail });
                continue;
            }
            let next: Vec<(usize, usize)> = match term {
                None => (0..n).flat_map(|j| (0..self.edges[j].len()).map(move |l| (j, l))).collect(),
                Some(t) => self.by_source[t].clone(),
            };
            for (j, ell) in next {
                let a = self.towers.floor_left[j][ell];
                let offset = match term {
                    None => a,
                    Some(t) => (a - self.tl[t]) * pscale,
                };
                let mut p = path.clone();
                p.push((j, ell));
                let v = value + scale * self.edges[j][ell].f;
                let ps = if term.is_none() { inv_rho } else { pscale * inv_rho };
                stack.push((p, left + offset, v, scale * self.lambda, ps, Some(j)));
            }
        }
        out.sort_by(|x, y| x.left.mid().partial_cmp(&y.left.mid()).unwrap());
        out
    }
}

impl TransferData {
    /// Cell of a nonempty admissible path from the root.
    pub fn path_cell(&self, path: &[(usize, usize)]) -> AdicCell {
        let inv_rho = Interval::ONE / self.periodic.rho;
        let (mut left, mut value, mut scale, mut pscale) = (Interval::ZERO, Interval::ZERO, Interval::ONE, Interval::ONE);
        let mut term: Option<usize> = None;
        for &(j, ell) in path {
            let a = self.towers.floor_left[j][ell];
            left = left + match term {
                None => a,
                Some(t) => (a - self.tl[t]) * pscale,
            };
            value = value + scale * self.edges[j][ell].f;
            scale = scale * self.lambda;
            pscale = pscale * inv_rho;
            term = Some(j);
        }
        let j = term.expect("nonempty path");
        AdicCell { path: path.to_vec(), left, length: self.periodic.iet.lengths[j] * pscale, bound: value + scale * self.letter_range[j] }
    }

    /// Admissible continuations of length `len` below letter `from`, in lexicographic order.
    pub fn extensions(&self, from: usize, len: usize) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|p: Vec<(usize, usize)>| {
                    let t = p.last().map_or(from, |e| e.0);
                    let mut next = self.by_source[t].clone();
                    next.sort_unstable();
                    next.into_iter().map(move |e| {
                        let mut q = p.clone();
                        q.push(e);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// Whether `bound` meets `z + lattice * Z` (or just `z`).
pub fn meets_level(bound: Interval, z: f64, lattice: Option<f64>) -> bool {
    match lattice {
        None => bound.contains(z),
        Some(c) => {
            let c = c.abs();
            let m = libm::ceil((bound.lo - z) / c);
            // Neighbours absorb rounding in the division.
            [m - 1.0, m, m + 1.0].iter().any(|k| bound.contains(z + k * c))
        }
    }
}

/// Cells of `cells` whose bound meets the level `z` (mod `lattice` when given).
pub fn level_cells(cells: &[AdicCell], z: f64, lattice: Option<f64>) -> Vec<AdicCell> {
    cells.iter().filter(|c| meets_level(c.bound, z, lattice)).cloned().collect()
}

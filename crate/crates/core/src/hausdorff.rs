//! Gaps in level sets of transfer functions and the resulting dimension bound.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::adic::TransferData;
use crate::interval::Interval;
use crate::rauzy::{CocycleMatrix, RauzyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HausdorffError {
    #[error("no alternate pair for ({i}, {j}) up to period multiple {multiple}")]
    BudgetExceeded { i: usize, j: usize, multiple: usize },
    #[error("both candidate gaps meet the level at depth {depth}")]
    GapUndetermined { depth: usize },
    #[error("cover needs more than {0} cells")]
    TooManyCells(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("need at least 4 depths, got {0}")]
    InsufficientDepths(usize),
    #[error("gap inequality never holds")]
    NoGapDepth,
    #[error(transparent)]
    Rauzy(#[from] RauzyError),
}

/// A path of `multiple` consecutive periods, as base edges `(j, ell)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelEdge {
    pub s: usize,
    pub t: usize,
    pub f: Interval,
    pub path: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
struct Extremes {
    lo: LevelEdge,
    hi: LevelEdge,
}

fn join(a: &LevelEdge, b: &LevelEdge, scale: Interval) -> LevelEdge {
    let mut path = a.path.clone();
    path.extend_from_slice(&b.path);
    LevelEdge { s: a.s, t: b.t, f: a.f + scale * b.f, path }
}

type Table = Vec<Vec<Option<Extremes>>>;

fn base_table(td: &TransferData) -> Table {
    let n = td.len();
    let mut out: Table = vec![vec![None; n]; n];
    for col in &td.edges {
        for e in col {
            let le = LevelEdge { s: e.s, t: e.j, f: e.f, path: vec![(e.j, e.ell)] };
            match &mut out[e.s][e.j] {
                None => out[e.s][e.j] = Some(Extremes { lo: le.clone(), hi: le }),
                Some(x) => {
                    if le.f.mid() < x.lo.f.mid() {
                        x.lo = le;
                    } else if le.f.mid() > x.hi.f.mid() {
                        x.hi = le;
                    }
                }
            }
        }
    }
    out
}

/// Extremal weights over paths of `x` followed by paths of `y`, where `x` spans `scale`-weighted levels.
fn compose(x: &Table, y: &Table, scale: Interval) -> Table {
    let n = x.len();
    let flip = scale.hi < 0.0;
    let mut out: Table = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut best: Option<Extremes> = None;
            for k in 0..n {
                let (Some(a), Some(b)) = (&x[i][k], &y[k][j]) else { continue };
                let (blo, bhi) = if flip { (&b.hi, &b.lo) } else { (&b.lo, &b.hi) };
                let lo = join(&a.lo, blo, scale);
                let hi = join(&a.hi, bhi, scale);
                best = Some(match best {
                    None => Extremes { lo, hi },
                    Some(c) => Extremes {
                        lo: if lo.f.mid() < c.lo.f.mid() { lo } else { c.lo },
                        hi: if hi.f.mid() > c.hi.f.mid() { hi } else { c.hi },
                    },
                });
            }
            out[i][j] = best;
        }
    }
    out
}

/// Two parallel level edges with certifiably different weights.
#[derive(Clone, Debug, PartialEq)]
pub struct AlternatePair {
    pub i: usize,
    pub j: usize,
    pub e1: LevelEdge,
    pub e2: LevelEdge,
    /// Encloses `f(e2) - f(e1) > 0`.
    pub delta: Interval,
}

/// A complete map of alternate pairs at some period multiple.
#[derive(Clone, Debug, PartialEq)]
pub struct AlternateMap {
    pub multiple: usize,
    /// `lambda^multiple`.
    pub lambda: Interval,
    /// Cocycle matrix of the multiple period.
    pub matrix: CocycleMatrix,
    /// `pairs[i][j]`.
    pub pairs: Vec<Vec<AlternatePair>>,
    pub f_min: Interval,
    pub f_max: Interval,
    table: Table,
}

impl AlternateMap {
    /// `F`, the largest difference of two level-edge weights.
    pub fn spread(&self) -> Interval {
        self.f_max - self.f_min
    }

    pub fn delta(&self) -> Interval {
        self.pairs.iter().flatten().map(|p| p.delta).fold(Interval::point(f64::INFINITY), |a, b| a.min(b))
    }

    /// Lexicographically first level edge from `i`, by target letter.
    pub fn first_edge(&self, i: usize) -> &LevelEdge {
        self.table[i].iter().flatten().map(|x| &x.lo).next().expect("every letter has an outgoing edge")
    }
}

/// The first pair `(i, j)` lacking an alternate pair, or the full map.
fn pair_table(table: &Table) -> Result<Vec<Vec<AlternatePair>>, (usize, usize)> {
    let n = table.len();
    let mut out = Vec::with_capacity(n);
    for (i, row) in table.iter().enumerate() {
        let mut r = Vec::with_capacity(n);
        for (j, x) in row.iter().enumerate() {
            let x = x.as_ref().ok_or((i, j))?;
            if !x.lo.f.certainly_lt(x.hi.f) {
                return Err((i, j));
            }
            r.push(AlternatePair { i, j, e1: x.lo.clone(), e2: x.hi.clone(), delta: x.hi.f - x.lo.f });
        }
        out.push(r);
    }
    Ok(out)
}

/// Doubles the period until every `(i, j)` has an alternate pair, up to `max_multiple`.
pub fn alternate_pairs(td: &TransferData, max_multiple: usize) -> Result<AlternateMap, HausdorffError> {
    let mut table = base_table(td);
    let mut multiple = 1;
    let mut lambda = td.lambda;
    let mut matrix = td.periodic.matrix().clone();
    loop {
        match pair_table(&table) {
            Ok(pairs) => {
                let all = || table.iter().flatten().flatten();
                let f_min = all().map(|x| x.lo.f).fold(Interval::point(f64::INFINITY), |a, b| a.min(b));
                let f_max = all().map(|x| x.hi.f).fold(Interval::point(f64::NEG_INFINITY), |a, b| a.max(b));
                return Ok(AlternateMap { multiple, lambda, matrix, pairs, f_min, f_max, table });
            }
            Err((i, j)) if 2 * multiple > max_multiple => return Err(HausdorffError::BudgetExceeded { i, j, multiple }),
            Err(_) => {
                table = compose(&table, &table, lambda);
                matrix = matrix.mul(&matrix)?;
                lambda = lambda * lambda;
                multiple *= 2;
            }
        }
    }
}

/// Smallest `b >= 1` with `F |lambda|^b / (1 - |lambda|) < delta`, certified.
pub fn min_gap_depth(big_f: Interval, lambda: Interval, delta: Interval) -> Option<usize> {
    let l = lambda.abs();
    if l.hi >= 1.0 {
        return None;
    }
    let denom = Interval::ONE - l;
    let mut p = l;
    for b in 1..=4096 {
        if (big_f * p / denom).hi < delta.lo {
            return Some(b);
        }
        p = p * l;
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapSystem {
    pub map: AlternateMap,
    pub big_f: Interval,
    pub delta: Interval,
    pub b: usize,
    /// Per source letter: the continuation after the alternate pair and its end letter.
    pub continuations: Vec<(Vec<LevelEdge>, usize)>,
}

impl GapSystem {
    /// Base periods spanned by one gap step.
    pub fn periods(&self) -> usize {
        self.map.multiple * self.b
    }
}

pub fn gap_params(map: AlternateMap) -> Result<GapSystem, HausdorffError> {
    let big_f = map.spread();
    let delta = map.delta();
    let b = min_gap_depth(big_f, map.lambda, delta).ok_or(HausdorffError::NoGapDepth)?;
    let n = map.pairs.len();
    let continuations = (0..n)
        .map(|i| {
            let mut t = map.pairs[i][0].j;
            let mut cont = Vec::new();
            for _ in 1..b {
                let e = map.first_edge(t).clone();
                t = e.t;
                cont.push(e);
            }
            (cont, t)
        })
        .collect();
    Ok(GapSystem { map, big_f, delta, b, continuations })
}

/// Root of `(1 - mu/m)^beta m^(1 - beta) = 1` by bisection.
pub fn beta0(m: f64, mu: f64) -> Result<f64, HausdorffError> {
    if !(m >= 2.0) || !(mu > 0.0 && mu <= 1.0) {
        return Err(HausdorffError::InvalidParams("need m >= 2 and 0 < mu <= 1"));
    }
    let (lm, lq) = (libm::log(m), libm::log1p(-mu / m));
    let g = |b: f64| b * lq + (1.0 - b) * lm;
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxEstimate {
    pub slope: f64,
    /// Root mean square residual of the fit.
    pub residual: f64,
}

/// Least-squares slope of `log count` against `-log size`.
pub fn box_dimension_estimate(samples: &[(f64, f64)]) -> Result<BoxEstimate, HausdorffError> {
    if samples.len() < 4 {
        return Err(HausdorffError::InsufficientDepths(samples.len()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(s, c)| (-libm::log(s), libm::log(c))).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(HausdorffError::InvalidParams("sizes must differ"));
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let rss: f64 = pts.iter().map(|p| p.1 - my - slope * (p.0 - mx)).map(|r| r * r).sum();
    Ok(BoxEstimate { slope, residual: libm::sqrt(rss / k) })
}

/// Statistics of `C_k`, the union of the surviving depth-`k` cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverStats {
    pub k: usize,
    /// Number of surviving cells.
    pub cells: Interval,
    /// Total length `|C_k|`.
    pub length: Interval,
    /// Connected components, when the cover was built explicitly.
    pub components: Option<usize>,
    /// Upper bound on the components: one more per gap removed.
    pub components_bound: f64,
}

fn letter_lengths(td: &TransferData) -> Vec<Interval> {
    td.periodic.iet.lengths.clone()
}

/// Cover statistics by counting surviving cells per end letter; exact for every level `z`.
pub fn cover_counts(td: &TransferData, gs: &GapSystem, k_max: usize) -> Result<Vec<CoverStats>, HausdorffError> {
    let n = td.len();
    let mb = td.periodic.matrix().pow(gs.periods() as u32)?;
    let lengths = letter_lengths(td);
    let shrink = (Interval::ONE / td.periodic.rho).powi(gs.periods() as u32);
    let mut counts = vec![Interval::ONE; n];
    let mut scale = Interval::ONE;
    let mut bound = 1.0;
    let total = |c: &[Interval], s: Interval| c.iter().zip(&lengths).map(|(a, l)| *a * *l * s).sum::<Interval>();
    let mut out = vec![CoverStats { k: 0, cells: Interval::point(n as f64), length: total(&counts, scale), components: Some(1), components_bound: 1.0 }];
    for k in 1..=k_max {
        let gaps: Interval = counts.iter().copied().sum();
        let next: Vec<Interval> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| counts[i] * Interval::point((mb.get(i, j) - (gs.continuations[i].1 == j) as i64) as f64))
                    .sum()
            })
            .collect();
        counts = next;
        scale = scale * shrink;
        bound += gaps.hi;
        out.push(CoverStats { k, cells: counts.iter().copied().sum(), length: total(&counts, scale), components: None, components_bound: bound });
    }
    Ok(out)
}

/// An explicitly constructed cover of `h^{-1}(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CantorCover {
    pub stats: Vec<CoverStats>,
    /// Surviving cells at the final depth, sorted by position.
    pub cells: Vec<crate::adic::AdicCell>,
    /// Connected components `[lo, hi]` of the final `C_k`.
    pub components: Vec<(f64, f64)>,
}

/// Extra depths tried before a gap is declared undetermined.
const REFINE: [usize; 4] = [0, 1, 2, 3];

fn cell_range(td: &TransferData, path: &[(usize, usize)], extra: usize) -> Interval {
    let end = path.last().expect("nonempty").0;
    let mut out: Option<Interval> = None;
    for ext in td.extensions(end, extra) {
        let mut p = path.to_vec();
        p.extend(ext);
        let b = td.path_cell(&p).bound;
        out = Some(out.map_or(b, |o| o.hull(b)));
    }
    out.expect("at least one extension")
}

fn choose_gap(td: &TransferData, c1: Vec<(usize, usize)>, c2: Vec<(usize, usize)>, z: f64) -> Result<Vec<(usize, usize)>, HausdorffError> {
    for extra in REFINE {
        if !cell_range(td, &c1, extra).contains(z) {
            return Ok(c1);
        }
        if !cell_range(td, &c2, extra).contains(z) {
            return Ok(c2);
        }
    }
    Err(HausdorffError::GapUndetermined { depth: c1.len() + REFINE[REFINE.len() - 1] })
}

fn components(cells: &[crate::adic::AdicCell]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for c in cells {
        let (lo, hi) = (c.left.mid(), c.left.mid() + c.length.mid());
        match out.last_mut() {
            Some(last) if (lo - last.1).abs() < 1e-12 => last.1 = hi,
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Builds `C_1, ..., C_k` for the level `z`, removing one gap from every surviving cell.
pub fn cantor_cover(td: &TransferData, gs: &GapSystem, z: f64, k: usize, max_cells: usize) -> Result<CantorCover, HausdorffError> {
    let n = td.len();
    let step = gs.periods();
    let ext: Vec<Vec<Vec<(usize, usize)>>> = (0..n).map(|i| td.extensions(i, step)).collect();
    let mut survivors: Vec<(Vec<(usize, usize)>, usize)> = (0..n).map(|i| (Vec::new(), i)).collect();
    let mut stats = vec![CoverStats { k: 0, cells: Interval::point(n as f64), length: td.periodic.iet.lengths.iter().copied().sum(), components: Some(1), components_bound: 1.0 }];
    let mut cells = Vec::new();
    let mut bound = 1.0;
    for level in 1..=k {
        let mut next = Vec::new();
        for (path, i) in &survivors {
            let pair = &gs.map.pairs[*i][0];
            let tail: Vec<(usize, usize)> = gs.continuations[*i].0.iter().flat_map(|e| e.path.iter().copied()).collect();
            let cand = |e: &LevelEdge| {
                let mut p = path.clone();
                p.extend_from_slice(&e.path);
                p.extend_from_slice(&tail);
                p
            };
            let gap = choose_gap(td, cand(&pair.e1), cand(&pair.e2), z)?;
            for e in &ext[*i] {
                let mut child = path.clone();
                child.extend_from_slice(e);
                if child != gap {
                    let t = e.last().expect("positive step").0;
                    next.push((child, t));
                }
            }
            if next.len() > max_cells {
                return Err(HausdorffError::TooManyCells(max_cells));
            }
        }
        bound += survivors.len() as f64;
        survivors = next;
        cells = survivors.iter().map(|(p, _)| td.path_cell(p)).collect::<Vec<_>>();
        cells.sort_by(|a, b| a.left.mid().partial_cmp(&b.left.mid()).expect("finite"));
        let comps = components(&cells);
        stats.push(CoverStats {
            k: level,
            cells: Interval::point(cells.len() as f64),
            length: cells.iter().map(|c| c.length).sum(),
            components: Some(comps.len()),
            components_bound: bound,
        });
    }
    let comps = components(&cells);
    Ok(CantorCover { stats, cells, components: comps })
}

/// The certified inputs and output of the dimension bound.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionBound {
    /// Largest entry of the matrix of one gap step.
    pub m: f64,
    /// Ratio of the shortest to the longest interval.
    pub mu: Interval,
    /// Upper bound on the dimension of every level set.
    pub beta0: f64,
    pub stats: Vec<CoverStats>,
}

pub fn dimension_bound(td: &TransferData, gs: &GapSystem, k_max: usize) -> Result<DimensionBound, HausdorffError> {
    let mb = td.periodic.matrix().pow(gs.periods() as u32)?;
    let n = td.len();
    let m = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| mb.get(i, j)).max().unwrap_or(0) as f64;
    let ls = letter_lengths(td);
    let lo = ls.iter().copied().fold(Interval::point(f64::INFINITY), |a, b| a.min(b));
    let hi = ls.iter().copied().fold(Interval::point(0.0), |a, b| a.max(b));
    let mu = lo / hi;
    // beta0 decreases in mu, so the lower end of mu gives an upper bound.
    let beta0 = beta0(m, mu.lo)? + 1e-12;
    Ok(DimensionBound { m, mu, beta0, stats: cover_counts(td, gs, k_max)? })
}

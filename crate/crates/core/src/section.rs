//! Poincaré sections of wind-tree surfaces and their exact renormalization.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::homology::{Block, HomologyClass, Klein, CANONICAL, GENERATORS, RANK, RELATIONS};
use crate::iet::{Alphabet, PermutationPair, PiecewiseConstantFn};
use crate::interval::Interval;
use crate::linalg::lstsq;
use crate::quad::QuadNum;
use crate::rauzy::{move_letters, step_perm, CocycleMatrix, PeriodicIet, RauzyError, RauzyLoop, RauzyMove};
use crate::surface::{exact_section, Cover, Crossings, ExactSection, SurfaceError, Tracer, WindTreeSurface};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SectionError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Rauzy(#[from] RauzyError),
    #[error("no period found within {0} induction steps")]
    NoPeriod(usize),
    #[error("exact tie between compared lengths at step {0}")]
    Tie(usize),
    #[error("loop crossings violate the homology relations")]
    RelationViolated,
    #[error("period does not act integrally on homology (residual {0})")]
    NonIntegralAction(f64),
}

/// Obstacle sizes `a = an/ad`, `b = bn/bd` and slope `du/dv = (p + q sqrt d) / r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WindTreeParams {
    pub a: (i64, i64),
    pub b: (i64, i64),
    pub slope: (i64, i64, i64, u32),
}

impl WindTreeParams {
    pub fn slope_value(&self) -> QuadNum {
        let (p, q, r, d) = self.slope;
        QuadNum::from_parts(p, q, r, d)
    }

    pub fn field(&self) -> u32 {
        self.slope.3
    }

    pub fn a_f64(&self) -> f64 {
        self.a.0 as f64 / self.a.1 as f64
    }

    pub fn b_f64(&self) -> f64 {
        self.b.0 as f64 / self.b.1 as f64
    }

    pub fn surface(&self, cover: Cover) -> Result<WindTreeSurface, SurfaceError> {
        WindTreeSurface::from_rationals(self.a, self.b, self.field(), cover)
    }
}

/// Pre-period and loop of exact Rauzy-Veech induction.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactPeriod {
    pub pre: Vec<RauzyMove>,
    pub lp: RauzyLoop,
    /// Lengths at the start of the loop, normalized to total 1.
    pub lengths: Vec<QuadNum>,
    /// Exact expansion factor of one period.
    pub rho: QuadNum,
    /// Total length at the start of the loop, in units of the input lengths.
    pub scale: QuadNum,
    /// Matrix of the pre-period.
    pub pre_matrix: CocycleMatrix,
}

type Key = (Vec<usize>, Vec<usize>, Vec<QuadNum>);

/// Runs exact induction until the normalized IET repeats.
pub fn exact_period(perm: &PermutationPair, lengths: &[QuadNum], max_steps: usize) -> Result<ExactPeriod, SectionError> {
    let d = lengths[0].d;
    let mut seen: BTreeMap<Key, usize> = BTreeMap::new();
    let mut p = perm.clone();
    let mut l = lengths.to_vec();
    let mut moves = Vec::new();
    let mut totals: Vec<QuadNum> = Vec::new();
    for step in 0..=max_steps {
        let total = l.iter().fold(QuadNum::zero(d), |acc, x| &acc + x);
        let inv = total.recip().expect("positive total");
        let normalized: Vec<QuadNum> = l.iter().map(|x| x * &inv).collect();
        let key = (p.top.clone(), p.bot.clone(), normalized.clone());
        if let Some(&k0) = seen.get(&key) {
            let rho = totals[k0].div(&total).expect("positive total");
            let (start, pre_matrix) = replay_from(perm, &moves[..k0])?;
            let lp = RauzyLoop::new(start, moves[k0..].to_vec())?;
            let scale = totals[k0].clone();
            return Ok(ExactPeriod { pre: moves[..k0].to_vec(), lp, lengths: normalized, rho, scale, pre_matrix });
        }
        seen.insert(key, step);
        totals.push(total);
        let n = p.len();
        let (a, b) = (p.top[n - 1], p.bot[n - 1]);
        let mv = match l[a].cmp(&l[b]) {
            core::cmp::Ordering::Greater => RauzyMove::Top,
            core::cmp::Ordering::Less => RauzyMove::Bottom,
            core::cmp::Ordering::Equal => return Err(SectionError::Tie(step)),
        };
        let (w, lo) = move_letters(&p, mv);
        l[w] = &l[w] - &l[lo];
        p = step_perm(&p, mv);
        moves.push(mv);
    }
    Err(SectionError::NoPeriod(max_steps))
}

fn replay_from(perm: &PermutationPair, moves: &[RauzyMove]) -> Result<(PermutationPair, CocycleMatrix), RauzyError> {
    crate::rauzy::replay(perm, moves)
}

/// Section of one wind-tree surface in a periodic direction, with its loop data.
#[derive(Clone, Debug)]
pub struct SectionData {
    pub params: WindTreeParams,
    pub cover: Cover,
    pub alphabet: Alphabet,
    pub exact: ExactSection,
    pub period: ExactPeriod,
    /// The section IET at the start of the loop, with exact-derived enclosures.
    pub periodic: PeriodicIet,
    /// Crossing counts of the return loops at the start of the loop.
    pub crossings: Vec<Crossings>,
}

/// Budgets for section construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectionBudget {
    pub trace_segments: usize,
    pub induction_steps: usize,
}

impl Default for SectionBudget {
    fn default() -> Self {
        SectionBudget { trace_segments: 100_000, induction_steps: 20_000 }
    }
}

pub fn build_section(params: &WindTreeParams, cover: Cover, budget: SectionBudget) -> Result<SectionData, SectionError> {
    let surf = params.surface(cover)?;
    let tracer = Tracer::new(&surf, params.slope_value(), budget.trace_segments)?;
    let exact = exact_section(&tracer, None)?;
    let n = exact.len();
    let perm = PermutationPair::new((0..n).collect(), exact.bottom_order()).map_err(RauzyError::from)?;
    let period = exact_period(&perm, &exact.lengths, budget.induction_steps)?;
    let mut crossings = exact.crossings.clone();
    if !period.pre.is_empty() {
        let a = &period.pre_matrix;
        crossings = (0..n)
            .map(|j| {
                let mut c = [0i64; GENERATORS];
                for (g, cg) in c.iter_mut().enumerate() {
                    *cg = (0..n).map(|i| a.get(i, j) * exact.crossings[i][g]).sum();
                }
                c
            })
            .collect();
    }
    let lengths: Vec<Interval> = period.lengths.iter().map(|x| x.enclose()).collect();
    let periodic = PeriodicIet::with_lengths(period.lp.clone(), &lengths, period.rho.enclose())?;
    let sd = SectionData { params: *params, cover, alphabet: Alphabet::standard(n), exact, period, periodic, crossings };
    if cover == Cover::Fourfold {
        sd.check_relations()?;
    }
    Ok(sd)
}

impl SectionData {
    pub fn len(&self) -> usize {
        self.crossings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crossings.is_empty()
    }

    pub fn matrix(&self) -> &CocycleMatrix {
        self.periodic.matrix()
    }

    fn check_relations(&self) -> Result<(), SectionError> {
        for c in &self.crossings {
            for r in RELATIONS {
                if r.iter().zip(c).map(|(x, y)| x * y).sum::<i64>() != 0 {
                    return Err(SectionError::RelationViolated);
                }
            }
        }
        Ok(())
    }

    /// `Phi` as an integer matrix: row `alpha`, column = canonical coordinate.
    pub fn phi_matrix(&self) -> Vec<[i64; RANK]> {
        self.crossings.iter().map(|c| CANONICAL.map(|g| c[g])).collect()
    }

    pub fn phi_of(&self, c: &HomologyClass) -> PiecewiseConstantFn {
        PiecewiseConstantFn::new(self.crossings.iter().map(|cr| c.pair(cr)).collect())
    }

    /// `Phi(c)` for an integral class.
    pub fn phi_int(&self, c: &HomologyClass) -> Option<Vec<i64>> {
        let ints = c.to_ints()?;
        Some(self.crossings.iter().map(|cr| ints.iter().zip(cr).map(|(x, y)| x * y).sum()).collect())
    }

    /// Integer matrix `M` on canonical coordinates with `A^T Phi = Phi M`.
    pub fn homology_action(&self) -> Result<Vec<[i64; RANK]>, SectionError> {
        let phi = self.phi_dmatrix();
        let at = transpose_f64(self.matrix());
        let rhs = &at * &phi;
        let mut m = vec![[0i64; RANK]; RANK];
        for k in 0..RANK {
            let (x, r) = lstsq(&phi, &rhs.column(k).into_owned());
            if r > 1e-6 {
                return Err(SectionError::NonIntegralAction(r));
            }
            for i in 0..RANK {
                let v = libm::round(x[i]);
                if (x[i] - v).abs() > 1e-6 {
                    return Err(SectionError::NonIntegralAction((x[i] - v).abs()));
                }
                m[i][k] = v as i64;
            }
        }
        let mi = DMatrix::from_fn(RANK, RANK, |i, j| m[i][j] as f64);
        let err = (&phi * mi - rhs).amax();
        if err != 0.0 {
            return Err(SectionError::NonIntegralAction(err));
        }
        Ok(m)
    }

    pub fn phi_dmatrix(&self) -> DMatrix<f64> {
        let rows = self.phi_matrix();
        DMatrix::from_fn(self.len(), RANK, |i, k| rows[i][k] as f64)
    }

    /// Matrix of the period's action on a Klein block, in the block's listed basis:
    /// `M B = B M_b`.
    pub fn block_action(&self, block: Block) -> Result<DMatrix<f64>, SectionError> {
        let m = self.homology_action()?;
        let mi = DMatrix::from_fn(RANK, RANK, |i, j| m[i][j] as f64);
        let basis = block.basis();
        let b = DMatrix::from_fn(RANK, basis.len(), |i, k| basis[k].canonical_coords()[i]);
        let mb = &mi * &b;
        let mut out = DMatrix::zeros(basis.len(), basis.len());
        for k in 0..basis.len() {
            let (x, r) = lstsq(&b, &DVector::from_column_slice(mb.column(k).as_slice()));
            if r > 1e-9 {
                return Err(SectionError::NonIntegralAction(r));
            }
            out.set_column(k, &x);
        }
        Ok(out)
    }

    /// Moves a transversal parameter into the periodic IET's domain by iterating
    /// the original section map, returning the normalized coordinate and the
    /// crossings accumulated on the way.
    pub fn to_loop_coords(&self, t: &QuadNum) -> (QuadNum, Crossings) {
        let mut t = t.clone();
        let mut acc = [0i64; GENERATORS];
        let ex = &self.exact;
        while t >= self.period.scale {
            let i = ex.starts.partition_point(|s| s <= &t) - 1;
            t = &t + &ex.offsets[i];
            for (a, c) in acc.iter_mut().zip(&ex.crossings[i]) {
                *a += c;
            }
        }
        let x = t.div(&self.period.scale).expect("positive scale");
        (x, acc)
    }

    /// Floating-point version of [`Self::to_loop_coords`]; `None` when the
    /// enclosure straddles a discontinuity.
    pub fn to_loop_coords_f64(&self, t: Interval) -> Option<(Interval, Crossings)> {
        let mut t = t;
        let mut acc = [0i64; GENERATORS];
        let ex = &self.exact;
        let scale = self.period.scale.enclose();
        while !t.certainly_lt(scale) {
            if t.overlaps(scale) {
                return None;
            }
            let starts: Vec<Interval> = ex.starts.iter().map(|s| s.enclose()).collect();
            let i = starts.partition_point(|s| s.hi <= t.lo).checked_sub(1)?;
            if i + 1 < starts.len() && t.overlaps(starts[i + 1]) || !starts[i].certainly_lt(t) && starts[i].overlaps(t) && i > 0 {
                return None;
            }
            t = t + ex.offsets[i].enclose();
            for (a, c) in acc.iter_mut().zip(&ex.crossings[i]) {
                *a += c;
            }
        }
        Some((t / scale, acc))
    }

    /// Columns `Phi(b)` for the listed basis of a block: an `A^T`-invariant subspace.
    pub fn block_image(&self, block: Block) -> DMatrix<f64> {
        let basis = block.basis();
        let n = self.len();
        DMatrix::from_fn(n, basis.len(), |a, k| basis[k].pair(&self.crossings[a]))
    }
}

/// Action of a Klein generator on canonical coordinates (columns are images of basis vectors).
pub fn klein_matrix(s: Klein) -> [[i64; RANK]; RANK] {
    let mut m = [[0i64; RANK]; RANK];
    for k in 0..RANK {
        let mut e = [0.0; RANK];
        e[k] = 1.0;
        let img = HomologyClass::from_canonical(&e).act(s).canonical_coords();
        for i in 0..RANK {
            m[i][k] = img[i] as i64;
        }
    }
    m
}

fn transpose_f64(a: &CocycleMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.n, a.n, |i, j| a.get(j, i) as f64)
}

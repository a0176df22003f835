//! The skew product over a section and its invariant function `h_hat`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::adic::{stable_spectrum, AdicError, TransferData};
use crate::homology::{gamma_classes, Block, HomologyClass};
use crate::section::{SectionData, SectionError};
use crate::iet::{Direction, Iet, IetError};
use crate::interval::Interval;
use crate::linalg::lstsq;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error("stable vector {index} is not in the span (residual {residual})")]
    NotInSpan { index: usize, residual: f64 },
    #[error("lattice matrix is singular")]
    SingularC,
    #[error("dimension mismatch: {0}")]
    Shape(&'static str),
    #[error(transparent)]
    Adic(#[from] AdicError),
    #[error(transparent)]
    Iet(#[from] IetError),
    #[error(transparent)]
    Section(#[from] SectionError),
    #[error("block {0} has {1} stable directions but {2} classes besides gamma")]
    BlockShape(&'static str, usize, usize),
}

/// `T_phi(x, a) = (T x, a + phi(x))` with an integer cocycle per letter.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewSystem {
    pub iet: Iet,
    /// `phi[j][letter]` for each cocycle coordinate `j`.
    pub phi: Vec<Vec<i64>>,
}

impl SkewSystem {
    pub fn new(iet: Iet, phi: Vec<Vec<i64>>) -> Result<Self, InvariantError> {
        if phi.iter().any(|p| p.len() != iet.len()) {
            return Err(InvariantError::Shape("cocycle length differs from alphabet"));
        }
        Ok(SkewSystem { iet, phi })
    }

    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    pub fn apply(&self, x: f64, a: &[i64]) -> Result<(f64, Vec<i64>), InvariantError> {
        let l = self.iet.letter_at(x)?;
        let y = self.iet.evaluate(x, Direction::Forward)?;
        Ok((y, a.iter().zip(&self.phi).map(|(ai, p)| ai + p[l]).collect()))
    }

    pub fn apply_inverse(&self, y: f64, a: &[i64]) -> Result<(f64, Vec<i64>), InvariantError> {
        let x = self.iet.evaluate(y, Direction::Inverse)?;
        let l = self.iet.letter_at(x)?;
        Ok((x, a.iter().zip(&self.phi).map(|(ai, p)| ai - p[l]).collect()))
    }

    pub fn iterate(&self, x: f64, a: &[i64], n: usize) -> Result<(f64, Vec<i64>), InvariantError> {
        let (mut x, mut a) = (x, a.to_vec());
        for _ in 0..n {
            (x, a) = self.apply(x, &a)?;
        }
        Ok((x, a))
    }
}

/// Solves `psi_i = sum_j b_ij phi_gamma_j + sum_k c_ik phi_sigma_k` for every `i`.
pub fn decompose_stable(
    psis: &[Vec<f64>],
    phi_gamma: &[Vec<f64>],
    phi_sigma: &[Vec<f64>],
) -> Result<(DMatrix<f64>, DMatrix<f64>), InvariantError> {
    let n = psis.first().map_or(0, |p| p.len());
    let m = phi_gamma.len();
    let dp = phi_sigma.len();
    if phi_gamma.iter().chain(phi_sigma).any(|v| v.len() != n) {
        return Err(InvariantError::Shape("basis vectors must match psi length"));
    }
    if dp != psis.len() {
        return Err(InvariantError::Shape("need one sigma class per stable vector"));
    }
    let cols: Vec<&Vec<f64>> = phi_gamma.iter().chain(phi_sigma).collect();
    let basis = DMatrix::from_fn(n, m + dp, |r, k| cols[k][r]);
    let mut b = DMatrix::zeros(psis.len(), m);
    let mut c = DMatrix::zeros(psis.len(), dp);
    for (i, psi) in psis.iter().enumerate() {
        let (x, residual) = lstsq(&basis, &DVector::from_column_slice(psi));
        if residual > 1e-10 {
            return Err(InvariantError::NotInSpan { index: i, residual });
        }
        for j in 0..m {
            b[(i, j)] = x[j];
        }
        for k in 0..dp {
            c[(i, k)] = x[m + k];
        }
    }
    if c.clone().try_inverse().is_none() || c.determinant().abs() < 1e-12 {
        return Err(InvariantError::SingularC);
    }
    Ok((b, c))
}

/// Representative of `v` modulo `C Z^d` with `C^-1` coordinates in `[0, 1)`.
pub fn lattice_reduce(v: &[f64], c: &DMatrix<f64>) -> Result<Vec<f64>, InvariantError> {
    let g = lattice_shift(v, c)?;
    let cg = c * DVector::from_vec(g);
    Ok(v.iter().zip(cg.iter()).map(|(x, s)| x - s).collect())
}

/// The integer vector `floor(C^-1 v)`.
fn lattice_shift(v: &[f64], c: &DMatrix<f64>) -> Result<Vec<f64>, InvariantError> {
    if c.nrows() != v.len() {
        return Err(InvariantError::Shape("lattice dimension"));
    }
    let inv = c.clone().try_inverse().ok_or(InvariantError::SingularC)?;
    let coords = inv * DVector::from_column_slice(v);
    Ok(coords.iter().map(|x| libm::floor(*x + 1e-12)).collect())
}

/// A point of `R^d / Lambda` with a coordinatewise enclosure.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPoint {
    pub coords: Vec<Interval>,
}

impl TorusPoint {
    pub fn width(&self) -> f64 {
        self.coords.iter().map(|c| c.width()).fold(0.0, f64::max)
    }

    /// Whether the two enclosures can meet modulo the lattice.
    pub fn overlaps(&self, other: &TorusPoint, c: &DMatrix<f64>, c_rad: f64) -> bool {
        let d = self.coords.len();
        let diff: Vec<f64> = (0..d).map(|i| other.coords[i].mid() - self.coords[i].mid()).collect();
        let Some(inv) = c.clone().try_inverse() else { return false };
        let g = inv * DVector::from_vec(diff);
        let base: Vec<f64> = g.iter().map(|x| libm::round(*x)).collect();
        // Try the nearest lattice translates.
        let offsets: Vec<Vec<f64>> = neighbours(d);
        offsets.iter().any(|off| {
            let k = DVector::from_fn(d, |i, _| base[i] + off[i]);
            let shift = c * &k;
            let rad = c_rad * k.iter().map(|x| x.abs()).sum::<f64>();
            (0..d).all(|i| (other.coords[i] - Interval::around(shift[i], rad + 4.0 * shift[i].abs() * f64::EPSILON)).overlaps(self.coords[i]))
        })
    }
}

fn neighbours(d: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v| {
                [-1.0, 0.0, 1.0].into_iter().map(move |s| {
                    let mut w = v.clone();
                    w.push(s);
                    w
                })
            })
            .collect();
    }
    out
}

/// `h_hat(x, a) = h(x) - b a` modulo `Lambda = C Z^d`.
#[derive(Clone, Debug)]
pub struct InvariantFunction {
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Error allowance on the entries of `b` and `c`.
    pub coeff_rad: f64,
    pub transfers: Vec<TransferData>,
}

impl InvariantFunction {
    pub fn new(b: DMatrix<f64>, c: DMatrix<f64>, transfers: Vec<TransferData>) -> Result<Self, InvariantError> {
        if b.nrows() != transfers.len() || c.nrows() != transfers.len() || c.ncols() != transfers.len() {
            return Err(InvariantError::Shape("one transfer function per stable vector"));
        }
        if c.clone().try_inverse().is_none() {
            return Err(InvariantError::SingularC);
        }
        let scale = b.iter().chain(c.iter()).fold(1.0f64, |m, x| m.max(x.abs()));
        Ok(InvariantFunction { b, c, coeff_rad: 1e-12 * scale, transfers })
    }

    pub fn dim(&self) -> usize {
        self.transfers.len()
    }

    /// Unreduced value `h(x) - b a`.
    pub fn lift(&self, x: Interval, a: &[i64], depth: usize) -> Result<Vec<Interval>, InvariantError> {
        let mut out = Vec::with_capacity(self.dim());
        for (i, td) in self.transfers.iter().enumerate() {
            let h = td.h_enclose(x, depth)?;
            let shift: f64 = a.iter().enumerate().map(|(j, &aj)| self.b[(i, j)] * aj as f64).sum();
            let norm: f64 = a.iter().map(|&aj| (aj as f64).abs()).sum();
            out.push(h - Interval::around(shift, self.coeff_rad * norm + 4.0 * shift.abs() * f64::EPSILON));
        }
        Ok(out)
    }

    pub fn hat_h(&self, x: Interval, a: &[i64], depth: usize) -> Result<TorusPoint, InvariantError> {
        let v = self.lift(x, a, depth)?;
        let mids: Vec<f64> = v.iter().map(|c| c.mid()).collect();
        let g = lattice_shift(&mids, &self.c)?;
        let norm: f64 = g.iter().map(|x| x.abs()).sum();
        let rad = self.coeff_rad * norm;
        let cg = &self.c * DVector::from_vec(g);
        Ok(TorusPoint { coords: v.iter().zip(cg.iter()).map(|(x, s)| *x - Interval::around(*s, rad + 4.0 * s.abs() * f64::EPSILON)).collect() })
    }

    /// Whether two torus enclosures can coincide.
    pub fn same_class(&self, p: &TorusPoint, q: &TorusPoint) -> bool {
        p.overlaps(q, &self.c, self.coeff_rad)
    }
}

/// Invariant function and skew product for the stable part of one Klein block.
///
/// The cocycle coordinates are the classes `gamma_h`, `gamma_v` lying in the block;
/// the remaining basis classes of the block generate the lattice.
pub fn block_invariant(sd: &SectionData, block: Block) -> Result<(InvariantFunction, SkewSystem), InvariantError> {
    let w = sd.block_image(block);
    let spec = stable_spectrum(sd.matrix(), Some((&w, block)))?;
    let (gh, gv) = gamma_classes();
    let gammas: Vec<HomologyClass> = [gh, gv].into_iter().filter(|g| (g.block(block) - *g).is_zero()).collect();
    let sigmas: Vec<HomologyClass> = block
        .basis()
        .into_iter()
        .filter(|s| gammas.iter().all(|g| !(*s - *g).is_zero()))
        .collect();
    if sigmas.len() != spec.pairs.len() || spec.pairs.is_empty() {
        return Err(InvariantError::BlockShape(block.name(), spec.pairs.len(), sigmas.len()));
    }
    let psis: Vec<Vec<f64>> = spec.pairs.iter().map(|p| p.psi.values.clone()).collect();
    let pg: Vec<Vec<f64>> = gammas.iter().map(|g| sd.phi_of(g).values).collect();
    let ps: Vec<Vec<f64>> = sigmas.iter().map(|s| sd.phi_of(s).values).collect();
    let (b, c) = decompose_stable(&psis, &pg, &ps)?;
    let transfers = spec
        .pairs
        .into_iter()
        .map(|p| TransferData::new(&sd.periodic, p))
        .collect::<Result<Vec<_>, _>>()?;
    let phi: Vec<Vec<i64>> = gammas.iter().map(|g| sd.phi_int(g).expect("gamma is integral")).collect();
    let skew = SkewSystem::new(sd.periodic.iet.clone(), phi)?;
    Ok((InvariantFunction::new(b, c, transfers)?, skew))
}

/// Whether `gamma_h`, `gamma_v` have a nonzero unstable component: the Klein
/// block containing the class is hyperbolic under the period's action.
pub fn gamma_instability(sd: &SectionData) -> Result<[bool; 2], InvariantError> {
    let (gh, gv) = gamma_classes();
    let mut out = [false; 2];
    for (slot, g) in out.iter_mut().zip([gh, gv]) {
        let block = Block::ALL.into_iter().find(|b| (g.block(*b) - g).is_zero()).ok_or(InvariantError::Shape("gamma spans blocks"))?;
        let m = sd.block_action(block)?;
        let radius = crate::linalg::eigenvalues(&m).iter().map(|e| e.abs()).fold(0.0, f64::max);
        *slot = radius > 1.0 + 1e-6;
    }
    Ok(out)
}

/// Outcome of checking `h_hat(T_phi s) = h_hat(s)` on a list of skew states.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceCertificate {
    pub checked: usize,
    pub failures: Vec<(f64, Vec<i64>)>,
    /// States whose torus enclosures are disjoint.
    pub witness: Option<((f64, Vec<i64>), (f64, Vec<i64>))>,
    pub max_width: f64,
}

pub fn certify_invariance(
    f: &InvariantFunction,
    skew: &SkewSystem,
    states: &[(f64, Vec<i64>)],
    depth: usize,
) -> Result<InvarianceCertificate, InvariantError> {
    let mut cert = InvarianceCertificate { checked: 0, failures: Vec::new(), witness: None, max_width: 0.0 };
    let mut seen: Vec<(TorusPoint, usize)> = Vec::new();
    for (k, (x, a)) in states.iter().enumerate() {
        let (y, b) = skew.apply(*x, a)?;
        let p = f.hat_h(Interval::point(*x), a, depth)?;
        let q = f.hat_h(Interval::point(y), &b, depth)?;
        cert.checked += 1;
        cert.max_width = cert.max_width.max(p.width()).max(q.width());
        if !f.same_class(&p, &q) {
            cert.failures.push((*x, a.clone()));
        }
        if cert.witness.is_none() {
            if let Some((_, j)) = seen.iter().find(|(s, _)| !f.same_class(s, &p)) {
                cert.witness = Some((states[*j].clone(), (*x, a.clone())));
            }
            if seen.len() < 8 {
                seen.push((p, k));
            }
        }
    }
    Ok(cert)
}

//! Small dense linear algebra on top of `nalgebra`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

/// An eigenvalue of a real matrix, possibly complex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn abs(&self) -> f64 {
        libm::hypot(self.re, self.im)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.im.abs() <= tol * self.abs().max(1.0)
    }
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Eigenvalue> {
    m.clone().complex_eigenvalues().iter().map(|z| Eigenvalue { re: z.re, im: z.im }).collect()
}

/// Orthonormal basis of the numerical null space (singular values below `tol * max(s)`).
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let (r, c) = m.shape();
    // Pad to square so SVD returns a full set of right singular vectors.
    let n = r.max(c);
    let mut sq = DMatrix::zeros(n, c);
    sq.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.max().max(1.0);
    (0..c).filter(|&i| svd.singular_values[i] <= tol * smax).map(|i| vt.row(i).transpose()).collect()
}

/// Unit eigenvector for a real eigenvalue, refined by inverse iteration.
pub fn eigenvector(m: &DMatrix<f64>, lambda: f64) -> DVector<f64> {
    let n = m.nrows();
    let shifted = m - DMatrix::identity(n, n) * lambda;
    let mut v = null_space(&shifted, 1e-6).into_iter().next().unwrap_or_else(|| {
        let svd = shifted.clone().svd(false, true);
        let vt = svd.v_t.expect("requested v_t");
        let k = svd.singular_values.imin();
        vt.row(k).transpose()
    });
    let perturbed = &shifted + DMatrix::identity(n, n) * (1e-13 * lambda.abs().max(1.0));
    let lu = perturbed.lu();
    for _ in 0..3 {
        if let Some(w) = lu.solve(&v) {
            let nw = w.norm();
            if nw.is_finite() && nw > 0.0 {
                v = w / nw;
            }
        }
    }
    let nv = v.norm();
    v / nv
}

/// A few steps of inverse iteration from `v` at a slightly shifted `lambda`.
pub fn polish(m: &DMatrix<f64>, lambda: f64, v: &DVector<f64>) -> DVector<f64> {
    let n = m.nrows();
    let shift = lambda + 1e-12 * lambda.abs().max(1e-3);
    let lu = (m - DMatrix::identity(n, n) * shift).lu();
    let mut v = v / v.norm();
    for _ in 0..2 {
        if let Some(w) = lu.solve(&v) {
            let nw = w.norm();
            if nw.is_finite() && nw > 0.0 {
                v = w / nw;
            }
        }
    }
    v
}

/// Least-squares solution of `a x = b` and the max-norm residual.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let x = svd.solve(b, 1e-12).expect("svd computed with u and v");
    let r = (a * &x - b).amax();
    (x, r)
}

pub fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

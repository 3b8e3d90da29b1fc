//! Dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Decompositions here always return their spectra in descending order with
//! ties broken by the original index, so downstream designs are reproducible.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Thin singular value decomposition `a = u * diag(s) * v^H`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m x r` left singular vectors, `r = min(m, n)`.
    pub u: CMat,
    /// Descending singular values.
    pub singular_values: Vec<f64>,
    /// `n x r` right singular vectors.
    pub v: CMat,
}

impl Svd {
    /// Number of singular values above `rel_tol * s_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .take_while(|&&s| s > rel_tol * top)
            .count()
    }

    /// Ratio of largest to smallest singular value; infinite when singular.
    pub fn condition_number(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }
}

/// Indices that sort `values` descending, stable on ties.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

pub fn svd(a: &CMat) -> Svd {
    let (m, n) = a.shape();
    if m >= n {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.adjoint());
        Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        }
    }
}

fn svd_tall(a: &CMat) -> Svd {
    let (m, n) = a.shape();
    // Tall-skinny inputs go through a QR first; the Golub-Kahan sweep then
    // only touches an n x n block.
    let (u, s, v_t) = if m > 2 * n {
        let qr = a.clone().qr();
        let q = qr.q();
        let dec = SVD::new_unordered(qr.r(), true, true);
        (q * dec.u.unwrap(), dec.singular_values, dec.v_t.unwrap())
    } else {
        let dec = SVD::new_unordered(a.clone(), true, true);
        (dec.u.unwrap(), dec.singular_values, dec.v_t.unwrap())
    };
    let values: Vec<f64> = s.iter().copied().collect();
    let order = descending_order(&values);
    Svd {
        u: u.select_columns(&order),
        singular_values: order.iter().map(|&i| values[i]).collect(),
        v: v_t.adjoint().select_columns(&order),
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(a.clone());
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = descending_order(&values);
    (
        order.iter().map(|&i| values[i]).collect(),
        eig.eigenvectors.select_columns(&order),
    )
}

/// `log2 det(a)` for a Hermitian positive definite matrix.
pub fn log2_det_hpd(a: &CMat) -> Option<f64> {
    let chol = a.clone().cholesky()?;
    let l = chol.l();
    Some(2.0 * l.diagonal().iter().map(|d| d.re.log2()).sum::<f64>())
}

/// Completes the orthonormal columns of `basis` to `target` columns with
/// Gram-Schmidt over the standard basis vectors, taken in index order.
pub fn complete_orthonormal(basis: CMat, target: usize) -> CMat {
    let n = basis.nrows();
    let mut cols: Vec<CVec> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < target && e < n {
        let mut v = CVec::zeros(n);
        v[e] = C64::new(1.0, 0.0);
        e += 1;
        for c in &cols {
            let proj = c.dotc(&v);
            v.axpy(-proj, c, C64::new(1.0, 0.0));
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v.unscale(norm));
        }
    }
    CMat::from_columns(&cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Diagonal complex matrix with real entries `values`.
pub fn real_diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(
        values.len(),
        values.iter().map(|&v| C64::new(v, 0.0)),
    ))
}

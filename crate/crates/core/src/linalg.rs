//! Singular value decompositions, computed with faer.
//!
//! nalgebra's complex SVD loses accuracy on rank-deficient input (singular
//! values of an exact orthogonal projector come back off by up to a few
//! percent), which breaks numerical rank and spectral norms. Everything
//! singular-value related goes through here instead.

use faer::Mat;
use nalgebra::DMatrix;

use crate::C64;

fn to_faer(m: &DMatrix<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

/// Full decomposition `m = U·diag(s)·Vᴴ`, singular values in descending order.
pub(crate) struct Svd {
    /// `rows × rows`, unitary.
    pub u: DMatrix<C64>,
    /// `min(rows, cols)` values.
    pub s: Vec<f64>,
    /// `cols × cols`, unitary.
    pub v: DMatrix<C64>,
}

pub(crate) fn svd(m: &DMatrix<C64>) -> Svd {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Svd {
            u: DMatrix::identity(rows, rows),
            s: Vec::new(),
            v: DMatrix::identity(cols, cols),
        };
    }
    let d = to_faer(m).svd().expect("SVD of a finite matrix converges");
    Svd {
        u: from_faer(d.U()),
        s: d.S().column_vector().iter().map(|z| z.re).collect(),
        v: from_faer(d.V()),
    }
}

/// Descending; empty for empty input.
pub(crate) fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    to_faer(m)
        .singular_values()
        .expect("SVD of a finite matrix converges")
}

//! Bounded chain complexes of finite-dimensional spaces, their homology, and
//! degreewise functional calculus on chain endomorphisms.
//!
//! Grading is homological: `d_i : C_i → C_{i-1}`. Homology in degree `i` is
//! realized by an orthonormal basis of harmonic representatives
//! `ker d_i ∩ (im d_{i+1})^⊥`, so `H_i(T) = Rᴴ·T_i·R`.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::linalg;
use crate::operator::{func_calc_series, oracle_eigen, sigma_max, MatrixOp, OperatorError};
use crate::series::PowerSeries;
use crate::C64;

/// Default relative threshold below which singular values count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Relative tolerance for `d∘d = 0` and the chain-map law.
pub const STRUCTURE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("differential d_{degree} has shape {got:?}, expected {expected:?}")]
    DifferentialShape {
        degree: i64,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("expected {expected} differentials for {degrees} degrees, got {got}")]
    DifferentialCount {
        degrees: usize,
        expected: usize,
        got: usize,
    },
    #[error("complex needs at least one degree")]
    Empty,
    #[error("endomorphism has {got} maps, complex has {expected} degrees")]
    EndoLength { expected: usize, got: usize },
    #[error("endomorphism in degree {degree} is {got}x{got}, expected {expected}x{expected}")]
    EndoShape {
        degree: i64,
        expected: usize,
        got: usize,
    },
    #[error("non-finite entry in differential d_{0}")]
    NonFinite(i64),
    #[error("degree {degree}: {source}")]
    Operator {
        degree: i64,
        #[source]
        source: OperatorError,
    },
}

/// `0 → C_{d_max} → … → C_{d_min} → 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainComplex {
    d_min: i64,
    dims: Vec<usize>,
    // differentials[k] = d_{d_min + k + 1}
    differentials: Vec<DMatrix<C64>>,
}

impl ChainComplex {
    /// `differentials[k]` is `d_{d_min+k+1} : C_{d_min+k+1} → C_{d_min+k}`,
    /// a `dims[k] × dims[k+1]` matrix.
    pub fn new(d_min: i64, dims: Vec<usize>, differentials: Vec<DMatrix<C64>>) -> Result<Self, ComplexError> {
        if dims.is_empty() {
            return Err(ComplexError::Empty);
        }
        if differentials.len() != dims.len() - 1 {
            return Err(ComplexError::DifferentialCount {
                degrees: dims.len(),
                expected: dims.len() - 1,
                got: differentials.len(),
            });
        }
        for (k, d) in differentials.iter().enumerate() {
            let degree = d_min + k as i64 + 1;
            let expected = (dims[k], dims[k + 1]);
            if d.shape() != expected {
                return Err(ComplexError::DifferentialShape {
                    degree,
                    expected,
                    got: d.shape(),
                });
            }
            if d.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(ComplexError::NonFinite(degree));
            }
        }
        Ok(ChainComplex {
            d_min,
            dims,
            differentials,
        })
    }

    /// All differentials zero.
    pub fn zero_differentials(d_min: i64, dims: Vec<usize>) -> Self {
        let differentials = dims.windows(2).map(|w| DMatrix::zeros(w[0], w[1])).collect();
        ChainComplex {
            d_min,
            dims,
            differentials,
        }
    }

    pub fn d_min(&self) -> i64 {
        self.d_min
    }

    pub fn d_max(&self) -> i64 {
        self.d_min + self.dims.len() as i64 - 1
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn degrees(&self) -> impl Iterator<Item = i64> {
        self.d_min..=self.d_max()
    }

    fn slot(&self, degree: i64) -> Option<usize> {
        (degree >= self.d_min && degree <= self.d_max()).then(|| (degree - self.d_min) as usize)
    }

    /// `dim C_i`, zero outside the stored range.
    pub fn dim(&self, degree: i64) -> usize {
        self.slot(degree).map_or(0, |k| self.dims[k])
    }

    /// `d_i : C_i → C_{i-1}`; a correctly shaped zero map outside the stored range.
    pub fn differential(&self, degree: i64) -> DMatrix<C64> {
        match self.slot(degree) {
            Some(k) if k > 0 => self.differentials[k - 1].clone(),
            _ => DMatrix::zeros(self.dim(degree - 1), self.dim(degree)),
        }
    }

    pub fn differentials(&self) -> &[DMatrix<C64>] {
        &self.differentials
    }
}

/// Degreewise square maps `T_i` on `C_i`, aligned with the complex's degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainEndo {
    maps: Vec<MatrixOp>,
}

impl ChainEndo {
    pub fn new(complex: &ChainComplex, maps: Vec<MatrixOp>) -> Result<Self, ComplexError> {
        if maps.len() != complex.dims.len() {
            return Err(ComplexError::EndoLength {
                expected: complex.dims.len(),
                got: maps.len(),
            });
        }
        for ((degree, m), &dim) in complex.degrees().zip(&maps).zip(&complex.dims) {
            if m.dim() != dim {
                return Err(ComplexError::EndoShape {
                    degree,
                    expected: dim,
                    got: m.dim(),
                });
            }
        }
        Ok(ChainEndo { maps })
    }

    pub fn identity(complex: &ChainComplex) -> Self {
        ChainEndo {
            maps: complex.dims.iter().map(|&n| MatrixOp::identity(n)).collect(),
        }
    }

    pub fn zero(complex: &ChainComplex) -> Self {
        ChainEndo {
            maps: complex.dims.iter().map(|&n| MatrixOp::zeros(n)).collect(),
        }
    }

    pub fn maps(&self) -> &[MatrixOp] {
        &self.maps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub degree: i64,
    pub residual: f64,
    pub threshold: f64,
    pub ok: bool,
}

impl Residual {
    fn new(degree: i64, residual: f64, scale: f64) -> Self {
        let threshold = STRUCTURE_TOL * scale;
        Residual {
            degree,
            residual,
            threshold,
            ok: residual <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `‖d_{i-1} d_i‖_F` per degree `i`.
    pub d_squared: Vec<Residual>,
    /// `‖d_i T_i − T_{i-1} d_i‖_F` per degree `i`, when an endomorphism was given.
    pub chain_map: Vec<Residual>,
    pub pass: bool,
}

fn chain_map_residuals(c: &ChainComplex, t: &ChainEndo) -> Vec<Residual> {
    c.degrees()
        .skip(1)
        .zip(t.maps.windows(2))
        .map(|(degree, pair)| {
            let (lower, upper) = (pair[0].matrix(), pair[1].matrix());
            let d = c.differential(degree);
            let residual = (&d * upper - lower * &d).norm();
            let dn = d.norm();
            Residual::new(degree, residual, 1.0 + dn * upper.norm() + lower.norm() * dn)
        })
        .collect()
}

/// Checks `d∘d = 0` and, if `t` is given, the chain-map law, each within
/// [`STRUCTURE_TOL`] scaled by the norms involved.
pub fn validate(c: &ChainComplex, t: Option<&ChainEndo>) -> Result<Diagnostics, ComplexError> {
    if let Some(t) = t {
        // re-run the shape checks for endos assembled elsewhere
        ChainEndo::new(c, t.maps.clone())?;
    }
    let d_squared: Vec<Residual> = c
        .degrees()
        .skip(2)
        .map(|degree| {
            let (upper, lower) = (c.differential(degree), c.differential(degree - 1));
            let residual = (&lower * &upper).norm();
            Residual::new(degree, residual, 1.0 + lower.norm() * upper.norm())
        })
        .collect();
    let chain_map = t.map(|t| chain_map_residuals(c, t)).unwrap_or_default();
    let pass = d_squared.iter().chain(&chain_map).all(|r| r.ok);
    Ok(Diagnostics {
        d_squared,
        chain_map,
        pass,
    })
}

/// Numerical rank data of one differential.
struct RankSplit {
    rank: usize,
    /// Orthonormal basis of the row space (as columns in the source).
    rows: DMatrix<C64>,
    /// Orthonormal basis of the column space (in the target).
    cols: DMatrix<C64>,
    ambiguous: bool,
}

fn rank_split(d: &DMatrix<C64>, rank_tol: f64) -> RankSplit {
    let (m, n) = d.shape();
    if d.is_empty() || sigma_max(d) == 0.0 {
        return RankSplit {
            rank: 0,
            rows: DMatrix::zeros(n, 0),
            cols: DMatrix::zeros(m, 0),
            ambiguous: false,
        };
    }
    let svd = linalg::svd(d);
    let threshold = rank_tol * svd.s[0];
    let rank = svd.s.iter().take_while(|&&s| s > threshold).count();
    let ambiguous = svd
        .s
        .iter()
        .any(|&s| s > threshold / 10.0 && s < threshold * 10.0);

    let rows = svd.v.columns(0, rank).into_owned();
    let cols = svd.u.columns(0, rank).into_owned();
    RankSplit {
        rank,
        rows,
        cols,
        ambiguous,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeHomology {
    pub degree: i64,
    pub dim: usize,
    /// `rank d_i`
    pub rank_out: usize,
    /// `rank d_{i+1}`
    pub rank_in: usize,
    pub betti: usize,
    /// `dim × betti`, orthonormal columns spanning the harmonic subspace.
    pub representatives: DMatrix<C64>,
    /// A singular value of `d_i` or `d_{i+1}` fell within a factor 10 of the threshold.
    pub rank_ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomologyBasis {
    pub degrees: Vec<DegreeHomology>,
}

impl HomologyBasis {
    pub fn betti(&self) -> Vec<usize> {
        self.degrees.iter().map(|d| d.betti).collect()
    }

    pub fn rank_ambiguous(&self) -> bool {
        self.degrees.iter().any(|d| d.rank_ambiguous)
    }

    /// Replaces each degree's representatives by `R_i·U_i` for unitary `U_i`.
    pub fn rotated(&self, rotations: &[DMatrix<C64>]) -> Self {
        HomologyBasis {
            degrees: self
                .degrees
                .iter()
                .zip(rotations)
                .map(|(d, u)| DegreeHomology {
                    representatives: &d.representatives * u,
                    ..d.clone()
                })
                .collect(),
        }
    }
}

/// Harmonic representatives and Betti numbers of every degree.
///
/// Singular values at or below `rank_tol·σ_max` of each differential count as
/// zero; `betti_i = dim C_i − rank d_i − rank d_{i+1}`.
pub fn homology_basis(c: &ChainComplex, rank_tol: f64) -> HomologyBasis {
    // splits[k] describes d_{d_min + k}; both ends are zero maps
    let splits: Vec<RankSplit> = (c.d_min()..=c.d_max() + 1)
        .map(|degree| rank_split(&c.differential(degree), rank_tol))
        .collect();

    let degrees = c
        .degrees()
        .enumerate()
        .map(|(k, degree)| {
            let dim = c.dim(degree);
            let (out, inc) = (&splits[k], &splits[k + 1]);
            let betti = dim.saturating_sub(out.rank + inc.rank);
            let representatives = harmonic_basis(dim, &out.rows, &inc.cols, betti);
            DegreeHomology {
                degree,
                dim,
                rank_out: out.rank,
                rank_in: inc.rank,
                betti,
                representatives,
                rank_ambiguous: out.ambiguous || inc.ambiguous || out.rank + inc.rank > dim,
            }
        })
        .collect();
    HomologyBasis { degrees }
}

/// Orthonormal basis of the complement of `span(rows) ⊕ span(cols)` in `ℂ^dim`.
fn harmonic_basis(dim: usize, rows: &DMatrix<C64>, cols: &DMatrix<C64>, betti: usize) -> DMatrix<C64> {
    if rows.ncols() + cols.ncols() == 0 {
        return DMatrix::identity(dim, dim);
    }
    if betti == 0 {
        return DMatrix::zeros(dim, 0);
    }
    let mut projector = DMatrix::<C64>::identity(dim, dim);
    projector -= rows * rows.adjoint();
    projector -= cols * cols.adjoint();
    linalg::svd(&projector).u.columns(0, betti).into_owned()
}

/// `H_i(T)` in the basis of harmonic representatives.
///
/// `T_i` preserves `ker d_i` and `im d_{i+1}`, and the harmonic subspace is
/// the orthogonal complement of `im d_{i+1}` inside `ker d_i`, so the
/// orthogonal projection `Rᴴ·T_i·R` is the projection along `im d_{i+1}`.
pub fn induced_on_homology(c: &ChainComplex, t: &ChainEndo, b: &HomologyBasis) -> Vec<MatrixOp> {
    debug_assert_eq!(c.dims.len(), b.degrees.len());
    t.maps
        .iter()
        .zip(&b.degrees)
        .map(|(m, h)| {
            let r = &h.representatives;
            MatrixOp::new(r.adjoint() * m.matrix() * r).expect("square and finite by construction")
        })
        .collect()
}

/// `f(T)` degree by degree; powers and sums of chain maps are chain maps.
pub fn func_calc_chain(
    f: &PowerSeries,
    t: &ChainEndo,
    c: &ChainComplex,
    tol: f64,
    max_terms: usize,
) -> Result<ChainEndo, ComplexError> {
    let maps = c
        .degrees()
        .zip(&t.maps)
        .map(|(degree, m)| {
            func_calc_series(f, m, tol, max_terms)
                .map(|(r, _)| r)
                .map_err(|source| ComplexError::Operator { degree, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ChainEndo { maps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Pass threshold: `Δ_i ≤ tol·(1 + ‖f(H_i(T))‖_F)`.
    pub tol: f64,
    pub rank_tol: f64,
    /// Absolute tail tolerance for every series evaluation.
    pub series_tol: f64,
    pub max_terms: usize,
}

impl VerifyOptions {
    pub fn new(tol: f64) -> Self {
        VerifyOptions {
            tol,
            rank_tol: DEFAULT_RANK_TOL,
            series_tol: (tol * 1e-3).max(1e-16),
            max_terms: 500,
        }
    }
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self::new(1e-8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassicalRoute {
    /// Eigendecomposition oracle.
    Eigen,
    /// The oracle rejected `H_i(T)`; partial sums were used instead.
    Series,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeCompat {
    pub degree: i64,
    pub betti: usize,
    pub delta: f64,
    pub threshold: f64,
    pub route: ClassicalRoute,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatReport {
    pub function: String,
    pub degrees: Vec<DegreeCompat>,
    pub max_delta: f64,
    pub validation: Option<Diagnostics>,
    /// `f(T)` satisfies the chain-map law.
    pub result_is_chain_map: bool,
    pub rank_ambiguous: bool,
    pub errors: Vec<String>,
    pub pass: bool,
}

impl CompatReport {
    fn failed(function: &str, validation: Option<Diagnostics>, error: String) -> Self {
        CompatReport {
            function: function.to_string(),
            degrees: Vec::new(),
            max_delta: f64::INFINITY,
            validation,
            result_is_chain_map: false,
            rank_ambiguous: false,
            errors: vec![error],
            pass: false,
        }
    }
}

/// Checks `H_i(f(T)) = f(H_i(T))` in every degree.
///
/// The left side is computed on the complex and then passed to homology; the
/// right side applies the classical calculus (eigen oracle, or partial sums
/// when the oracle declines) to the induced map. Failures are report entries.
pub fn verify_homology_compat(
    c: &ChainComplex,
    t: &ChainEndo,
    f: &PowerSeries,
    opts: &VerifyOptions,
) -> CompatReport {
    let name = f.name();
    let validation = match validate(c, Some(t)) {
        Ok(v) => v,
        Err(e) => return CompatReport::failed(name, None, e.to_string()),
    };
    if !validation.pass {
        return CompatReport::failed(name, Some(validation), "input failed validation".to_string());
    }

    let basis = homology_basis(c, opts.rank_tol);
    let ft = match func_calc_chain(f, t, c, opts.series_tol, opts.max_terms) {
        Ok(ft) => ft,
        Err(e) => return CompatReport::failed(name, Some(validation), e.to_string()),
    };
    let result_is_chain_map = chain_map_residuals(c, &ft).iter().all(|r| r.ok);

    let lhs = induced_on_homology(c, &ft, &basis);
    let induced = induced_on_homology(c, t, &basis);
    let mut errors = Vec::new();
    let mut degrees = Vec::with_capacity(lhs.len());
    for ((h, left), ht) in basis.degrees.iter().zip(&lhs).zip(&induced) {
        let (right, route) = match oracle_eigen(f, ht) {
            Ok(r) => (r, ClassicalRoute::Eigen),
            Err(_) => match func_calc_series(f, ht, opts.series_tol, opts.max_terms) {
                Ok((r, _)) => (r, ClassicalRoute::Series),
                Err(e) => {
                    errors.push(format!("degree {}: {e}", h.degree));
                    continue;
                }
            },
        };
        let delta = (left.matrix() - right.matrix()).norm();
        let threshold = opts.tol * (1.0 + right.frobenius_norm().max(left.frobenius_norm()));
        degrees.push(DegreeCompat {
            degree: h.degree,
            betti: h.betti,
            delta,
            threshold,
            route,
            pass: delta <= threshold,
        });
    }

    let max_delta = degrees.iter().map(|d| d.delta).fold(0.0, f64::max);
    let pass = errors.is_empty() && result_is_chain_map && degrees.iter().all(|d| d.pass);
    CompatReport {
        function: name.to_string(),
        degrees,
        max_delta,
        validation: Some(validation),
        result_is_chain_map,
        rank_ambiguous: basis.rank_ambiguous(),
        errors,
        pass,
    }
}

//! Square complex matrices as bounded operators, and `f(T)` for entire `f`.
//!
//! Three routes to `f(T)`:
//! - [`func_calc_series`]: partial sums `Σ aₖTᵏ` under a rigorous tail bound;
//! - [`func_calc_via_measure`]: pairing `μ_f` against the orbit `n ↦ √aₙ·Tⁿ`;
//! - [`oracle_eigen`]: `V·f(Λ)·V⁻¹`, the classical answer for diagonalizable `T`.

use nalgebra::{DMatrix, Schur};
use serde::Serialize;
use thiserror::Error;

use crate::linalg;
use crate::measure::{mu_f, pair, MeasureError};
use crate::profinite::TowerPoint;
use crate::series::{eval_scalar, principal_sqrt, truncation, PowerSeries, SeriesError};
use crate::C64;

/// Largest eigenvector condition number the oracle accepts.
pub const ORACLE_MAX_COND: f64 = 1e6;

const ORACLE_EVAL_TOL: f64 = 1e-16;
const ORACLE_MAX_TERMS: usize = 5_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("did not converge within budget ({} terms, tail bound {:e})", .report.terms_used, .report.tail_bound)]
    Budget {
        partial: MatrixOp,
        report: ConvergenceReport,
    },
    #[error("oracle requires well-conditioned diagonalizable input (eigenvector condition {cond:e})")]
    OracleRejected { cond: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// An operator on `ℂⁿ`, as an `n × n` matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOp(DMatrix<C64>);

impl MatrixOp {
    pub fn new(m: DMatrix<C64>) -> Result<Self, OperatorError> {
        if !m.is_square() {
            return Err(OperatorError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OperatorError::NonFinite);
        }
        Ok(MatrixOp(m))
    }

    /// Builds from real row-major entries.
    pub fn from_real(dim: usize, rows: &[f64]) -> Result<Self, OperatorError> {
        Self::new(DMatrix::from_row_iterator(
            dim,
            dim,
            rows.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    pub fn identity(dim: usize) -> Self {
        MatrixOp(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        MatrixOp(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

impl AsRef<DMatrix<C64>> for MatrixOp {
    fn as_ref(&self) -> &DMatrix<C64> {
        &self.0
    }
}

/// Largest singular value of any (possibly rectangular or empty) matrix.
pub fn sigma_max(m: &DMatrix<C64>) -> f64 {
    linalg::singular_values(m).first().copied().unwrap_or(0.0)
}

/// `σ_max(T)`, the operator norm on `ℂⁿ`.
pub fn spectral_norm(t: &MatrixOp) -> f64 {
    sigma_max(&t.0)
}

/// `σ_max / σ_min`; infinite for singular input.
pub fn condition_number(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let s = linalg::singular_values(m);
    let (hi, lo) = (s[0], s[s.len() - 1]);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StoppedBy {
    Tolerance,
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub terms_used: usize,
    pub tail_bound: f64,
    pub norm_t: f64,
    pub stopped_by: StoppedBy,
}

/// `n ↦ √aₙ·Tⁿ`, `∞ ↦ 0`, with powers cached up to a fixed index.
#[derive(Debug, Clone)]
pub struct OrbitMap {
    f: PowerSeries,
    t: DMatrix<C64>,
    roots: Vec<C64>,
    powers: Vec<DMatrix<C64>>,
}

impl OrbitMap {
    /// Point value; indices past the cache are computed on demand.
    pub fn eval(&self, x: TowerPoint) -> DMatrix<C64> {
        let dim = self.t.nrows();
        match x {
            TowerPoint::Infinity => DMatrix::zeros(dim, dim),
            TowerPoint::Finite(n) if n < self.powers.len() => &self.powers[n] * self.roots[n],
            TowerPoint::Finite(n) => {
                let cached = self.powers.len();
                let mut power = match self.powers.last() {
                    Some(last) => last * &self.t,
                    None => DMatrix::identity(dim, dim),
                };
                for _ in cached..n {
                    power = &power * &self.t;
                }
                power * principal_sqrt(self.f.coeff(n))
            }
        }
    }
}

/// Orbit map of `f` at `T`, caching `Tⁿ` and `√aₙ` for `n ≤ depth`.
pub fn orbit_map(f: &PowerSeries, t: &MatrixOp, depth: usize) -> OrbitMap {
    let dim = t.dim();
    let mut powers = Vec::with_capacity(depth + 1);
    let mut power = DMatrix::identity(dim, dim);
    for n in 0..=depth {
        let next = (n < depth).then(|| &power * &t.0);
        powers.push(power);
        power = next.unwrap_or_default();
    }
    OrbitMap {
        f: f.clone(),
        t: t.0.clone(),
        roots: f.coeffs().take(depth + 1).map(principal_sqrt).collect(),
        powers,
    }
}

/// `f(T)` by partial sums `Σ_{k<N} aₖTᵏ`.
///
/// `N` is the first count whose tail majorant `Σ_{k≥N} |aₖ|·‖T‖₂ᵏ` is at
/// most `tol`. Running out of `max_terms` first returns
/// [`OperatorError::Budget`] with the partial sum attached.
pub fn func_calc_series(
    f: &PowerSeries,
    t: &MatrixOp,
    tol: f64,
    max_terms: usize,
) -> Result<(MatrixOp, ConvergenceReport), OperatorError> {
    let norm_t = spectral_norm(t);
    let plan = truncation(f, norm_t, tol, max_terms);
    let dim = t.dim();

    let mut sum = DMatrix::<C64>::zeros(dim, dim);
    let mut power = DMatrix::<C64>::identity(dim, dim);
    for (k, a) in f.coeffs().take(plan.terms).enumerate() {
        if a != C64::default() {
            sum += &power * a;
        }
        if k + 1 < plan.terms {
            power = &power * &t.0;
        }
    }

    let report = ConvergenceReport {
        terms_used: plan.terms,
        tail_bound: plan.tail_bound,
        norm_t,
        stopped_by: if plan.converged {
            StoppedBy::Tolerance
        } else {
            StoppedBy::Budget
        },
    };
    if plan.converged {
        Ok((MatrixOp(sum), report))
    } else {
        Err(OperatorError::Budget {
            partial: MatrixOp(sum),
            report,
        })
    }
}

/// `f(T)` as the integral of the orbit map `n ↦ √aₙ·Tⁿ` against `μ_f`.
pub fn func_calc_via_measure(
    f: &PowerSeries,
    t: &MatrixOp,
    p: f64,
    depth: usize,
    tol: f64,
) -> Result<MatrixOp, OperatorError> {
    let mu = mu_f(f, p, depth)?;
    let orbit = orbit_map(f, t, depth);
    let pairing = pair(&mu, |x| orbit.eval(x), tol)?;
    Ok(MatrixOp(pairing.value))
}

/// Eigenpairs `(λ, V)` of `T` from its complex Schur form, with unit columns.
pub fn eigen_decomposition(t: &MatrixOp) -> (Vec<C64>, DMatrix<C64>) {
    let dim = t.dim();
    if dim == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let (q, u) = Schur::new(t.0.clone()).unpack();
    let eigenvalues: Vec<C64> = (0..dim).map(|i| u[(i, i)]).collect();
    // floor for (U_jj - λ_k) on (near-)repeated eigenvalues
    let small = f64::EPSILON * u.norm().max(f64::MIN_POSITIVE);

    let mut y = DMatrix::<C64>::zeros(dim, dim);
    for k in 0..dim {
        let lambda = eigenvalues[k];
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = C64::default();
            for l in j + 1..=k {
                acc += u[(j, l)] * y[(l, k)];
            }
            let mut denom = u[(j, j)] - lambda;
            if denom.norm() < small {
                denom = C64::new(small, 0.0);
            }
            y[(j, k)] = -acc / denom;
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= C64::new(n, 0.0);
        }
    }
    (eigenvalues, v)
}

/// Classical `f(T) = V·diag(f(λᵢ))·V⁻¹`.
///
/// Rejects input whose eigenvector matrix has condition number above
/// [`ORACLE_MAX_COND`], which covers defective matrices.
pub fn oracle_eigen(f: &PowerSeries, t: &MatrixOp) -> Result<MatrixOp, OperatorError> {
    let dim = t.dim();
    if dim == 0 {
        return Ok(MatrixOp::zeros(0));
    }
    let (eigenvalues, v) = eigen_decomposition(t);
    let cond = condition_number(&v);
    if !(cond <= ORACLE_MAX_COND) {
        return Err(OperatorError::OracleRejected { cond });
    }
    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or(OperatorError::OracleRejected { cond: f64::INFINITY })?;
    let mut scaled = v;
    for (j, &lambda) in eigenvalues.iter().enumerate() {
        let f_lambda = eval_scalar(f, lambda, ORACLE_EVAL_TOL, ORACLE_MAX_TERMS)?;
        let mut col = scaled.column_mut(j);
        col *= f_lambda;
    }
    Ok(MatrixOp(scaled * v_inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Builtin;
    use std::f64::consts::{FRAC_PI_2, LN_2};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_entry_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).map(|z| z.norm()).max()
    }

    fn test_matrix(dim: usize, seed: u64) -> MatrixOp {
        // small deterministic LCG; the random module covers proper sampling
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let m = DMatrix::from_fn(dim, dim, |_, _| C64::new(next(), next()));
        let norm = sigma_max(&m);
        MatrixOp::new(m * c(1.5 / norm)).unwrap()
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&MatrixOp::identity(3)) - 1.0).abs() < 1e-12);
        let d = MatrixOp::from_real(2, &[2.0, 0.0, 0.0, -1.0]).unwrap();
        assert!((spectral_norm(&d) - 2.0).abs() < 1e-12);
        let r1 = MatrixOp::from_real(2, &[0.0, 3.0, 0.0, 0.0]).unwrap();
        assert!((spectral_norm(&r1) - 3.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&MatrixOp::zeros(0)), 0.0);
    }

    #[test]
    fn matrix_op_validation() {
        assert!(matches!(
            MatrixOp::new(DMatrix::zeros(2, 3)),
            Err(OperatorError::NotSquare { rows: 2, cols: 3 })
        ));
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert_eq!(MatrixOp::new(m), Err(OperatorError::NonFinite));
    }

    #[test]
    fn orbit_map_examples() {
        let t = test_matrix(3, 1);
        let exp = orbit_map(&PowerSeries::exp(), &t, 5);
        assert_eq!(exp.eval(TowerPoint::Infinity), DMatrix::zeros(3, 3));
        assert_eq!(exp.eval(TowerPoint::Finite(0)), DMatrix::identity(3, 3));
        let sq = PowerSeries::polynomial("z^2", &[0.0, 0.0, 1.0]).unwrap();
        let orbit = orbit_map(&sq, &t, 4);
        assert!(max_entry_diff(&orbit.eval(TowerPoint::Finite(2)), &(t.matrix() * t.matrix())) < 1e-15);
        // past the cache
        let short = orbit_map(&PowerSeries::exp(), &t, 1);
        let want = exp.eval(TowerPoint::Finite(4));
        assert!(max_entry_diff(&short.eval(TowerPoint::Finite(4)), &want) < 1e-15);
    }

    #[test]
    fn func_calc_series_examples() {
        let exp = PowerSeries::exp();
        let (r, report) = func_calc_series(&exp, &MatrixOp::zeros(3), 1e-12, 50).unwrap();
        assert_eq!(r, MatrixOp::identity(3));
        assert_eq!(report.terms_used, 1);

        let n = MatrixOp::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let (r, report) = func_calc_series(&exp, &n, 1e-14, 100).unwrap();
        let want = MatrixOp::from_real(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(max_entry_diff(r.matrix(), want.matrix()) <= 1e-13);
        assert_eq!(report.stopped_by, StoppedBy::Tolerance);
        assert!(report.tail_bound <= 1e-14);

        let poly = PowerSeries::polynomial("z^3-2z", &[0.0, -2.0, 0.0, 1.0]).unwrap();
        let t = test_matrix(4, 7);
        let (r, _) = func_calc_series(&poly, &t, 1e-12, 10).unwrap();
        let m = t.matrix();
        let direct = m * m * m - m * c(2.0);
        assert!(max_entry_diff(r.matrix(), &direct) <= 1e-13 * direct.norm());
    }

    #[test]
    fn func_calc_series_budget_error_carries_partial_sum() {
        let ones = PowerSeries::polynomial("ones", &[1.0; 1000]).unwrap();
        let t = MatrixOp::identity(2);
        match func_calc_series(&ones, &t, 1e-10, 500) {
            Err(OperatorError::Budget { partial, report }) => {
                assert_eq!(report.stopped_by, StoppedBy::Budget);
                assert_eq!(report.terms_used, 500);
                assert_eq!(partial.matrix()[(0, 0)], c(500.0));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn via_measure_examples() {
        let t = test_matrix(3, 3);
        let sq = PowerSeries::polynomial("z^2", &[0.0, 0.0, 1.0]).unwrap();
        let r = func_calc_via_measure(&sq, &t, 1.0, 8, 1e-12).unwrap();
        assert!(max_entry_diff(r.matrix(), &(t.matrix() * t.matrix())) < 1e-15);

        let z = func_calc_via_measure(&PowerSeries::zero(), &t, 1.0, 8, 1e-12).unwrap();
        assert_eq!(z, MatrixOp::zeros(3));

        for f in [PowerSeries::exp(), PowerSeries::sin()] {
            let via = func_calc_via_measure(&f, &t, 1.0, 60, 1e-12).unwrap();
            let (series, _) = func_calc_series(&f, &t, 1e-14, 500).unwrap();
            assert!(max_entry_diff(via.matrix(), series.matrix()) <= 1e-12);
        }
    }

    #[test]
    fn oracle_examples() {
        let exp = PowerSeries::exp();
        let d = MatrixOp::from_real(2, &[0.0, 0.0, 0.0, LN_2]).unwrap();
        let r = oracle_eigen(&exp, &d).unwrap();
        let want = MatrixOp::from_real(2, &[1.0, 0.0, 0.0, 2.0]).unwrap();
        assert!(max_entry_diff(r.matrix(), want.matrix()) < 1e-14);

        // eigenvalues ±iθ; sin(iθ) = i·sinh θ
        let theta = FRAC_PI_2;
        let rot = MatrixOp::from_real(2, &[0.0, theta, -theta, 0.0]).unwrap();
        let r = oracle_eigen(&PowerSeries::sin(), &rot).unwrap();
        let s = 2.301_298_902_307_294_7;
        let want = MatrixOp::from_real(2, &[0.0, s, -s, 0.0]).unwrap();
        assert!(max_entry_diff(r.matrix(), want.matrix()) < 1e-13);

        let t = test_matrix(5, 11);
        let sq = PowerSeries::polynomial("z^2", &[0.0, 0.0, 1.0]).unwrap();
        let r = oracle_eigen(&sq, &t).unwrap();
        assert!(max_entry_diff(r.matrix(), &(t.matrix() * t.matrix())) < 1e-10);
    }

    #[test]
    fn oracle_rejects_defective_input() {
        let jordan = MatrixOp::from_real(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            oracle_eigen(&PowerSeries::exp(), &jordan),
            Err(OperatorError::OracleRejected { .. })
        ));
    }

    #[test]
    fn oracle_handles_repeated_eigenvalues_of_normal_input() {
        let id = MatrixOp::identity(3);
        let r = oracle_eigen(&PowerSeries::exp(), &id).unwrap();
        let e = std::f64::consts::E;
        assert!(max_entry_diff(r.matrix(), &(DMatrix::identity(3, 3) * c(e))) < 1e-14);
    }

    #[test]
    fn series_agrees_with_oracle_on_generic_matrices() {
        for seed in 0..10 {
            let t = test_matrix(6, seed);
            for b in [Builtin::Exp, Builtin::Sin, Builtin::Cos, Builtin::Cosh] {
                let f = PowerSeries::builtin(b);
                let (s, _) = func_calc_series(&f, &t, 1e-14, 500).unwrap();
                let o = oracle_eigen(&f, &t).unwrap();
                assert!((s.matrix() - o.matrix()).norm() <= 1e-9 * (1.0 + s.frobenius_norm()));
            }
        }
    }

    #[test]
    fn exponential_group_law() {
        let exp = PowerSeries::exp();
        for seed in 0..5 {
            let t = test_matrix(4, 100 + seed);
            let minus = MatrixOp::new(-t.matrix()).unwrap();
            let (a, _) = func_calc_series(&exp, &t, 1e-15, 500).unwrap();
            let (b, _) = func_calc_series(&exp, &minus, 1e-15, 500).unwrap();
            assert!(max_entry_diff(&(a.matrix() * b.matrix()), &DMatrix::identity(4, 4)) <= 1e-9);
        }
    }
}

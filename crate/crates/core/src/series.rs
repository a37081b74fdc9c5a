//! Entire functions as power-series coefficient streams, with the ratio and
//! root diagnostics and a scalar evaluator sharing the operator stopping rule.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::C64;

/// Default tolerance for the ratio and power-ratio checks.
pub const RATIO_TOL: f64 = 1e-6;
/// Default absolute tolerance for scalar evaluation.
pub const EVAL_TOL: f64 = 1e-12;

/// Fraction of consecutive coefficient pairs that must have a defined ratio
/// before a limit is estimated.
const MIN_DEFINED_FRACTION: f64 = 0.9;

/// Recurrence denominators are checked for zeros over this many indices.
const RECURRENCE_CHECK_LEN: usize = 10_000;

/// Upper bound on how many scalar terms the tail estimator will inspect.
const TAIL_SCAN_CAP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("did not converge within budget ({terms} terms, tail bound {tail_bound:e})")]
    DidNotConverge {
        partial: C64,
        terms: usize,
        tail_bound: f64,
    },
    #[error("ratio limit undefined")]
    RatioLimitUndefined,
    #[error("recurrence denominator vanishes at n = {0}")]
    SingularRecurrence(usize),
    #[error("non-finite value in series definition")]
    NonFinite,
    #[error("unknown builtin function `{0}`")]
    UnknownBuiltin(String),
    #[error("recurrence denominator must be a nonzero polynomial")]
    EmptyDenominator,
}

/// Built-in entire functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Exp,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::Exp,
        Builtin::Sin,
        Builtin::Cos,
        Builtin::Sinh,
        Builtin::Cosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Exp => "exp",
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Sinh => "sinh",
            Builtin::Cosh => "cosh",
        }
    }

    /// `(first nonzero index, step between nonzero indices, sign of a_{n+step}/a_n)`.
    fn shape(self) -> (usize, usize, f64) {
        match self {
            Builtin::Exp => (0, 1, 1.0),
            Builtin::Sin => (1, 2, -1.0),
            Builtin::Cos => (0, 2, -1.0),
            Builtin::Sinh => (1, 2, 1.0),
            Builtin::Cosh => (0, 2, 1.0),
        }
    }

    /// a_{n+step} / a_n for a structurally nonzero index n.
    fn step_ratio(self, n: usize) -> f64 {
        let (_, step, sign) = self.shape();
        let n = n as f64;
        if step == 1 {
            sign / (n + 1.0)
        } else {
            sign / ((n + 1.0) * (n + 2.0))
        }
    }

    fn is_nonzero_index(self, n: usize) -> bool {
        let (start, step, _) = self.shape();
        n >= start && (n - start) % step == 0
    }
}

impl std::str::FromStr for Builtin {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| SeriesError::UnknownBuiltin(s.to_string()))
    }
}

/// `a_{n+1} = (num(n) / den(n)) * a_n`, polynomials in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Recurrence {
    pub a0: C64,
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl Recurrence {
    pub fn ratio(&self, n: usize) -> f64 {
        horner(&self.num, n as f64) / horner(&self.den, n as f64)
    }
}

fn horner(poly: &[f64], x: f64) -> f64 {
    poly.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    Explicit(Vec<C64>),
    Recurrence(Recurrence),
    Builtin(Builtin),
}

/// An entire function `f(z) = Σ aₙ zⁿ`, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    name: String,
    rule: Rule,
}

impl PowerSeries {
    pub fn builtin(b: Builtin) -> Self {
        PowerSeries {
            name: b.name().to_string(),
            rule: Rule::Builtin(b),
        }
    }

    pub fn exp() -> Self {
        Self::builtin(Builtin::Exp)
    }

    pub fn sin() -> Self {
        Self::builtin(Builtin::Sin)
    }

    pub fn cos() -> Self {
        Self::builtin(Builtin::Cos)
    }

    /// A polynomial (or finite prefix); coefficients past the list are zero.
    pub fn explicit(name: impl Into<String>, coeffs: Vec<C64>) -> Result<Self, SeriesError> {
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SeriesError::NonFinite);
        }
        Ok(PowerSeries {
            name: name.into(),
            rule: Rule::Explicit(coeffs),
        })
    }

    /// Real-coefficient polynomial convenience constructor.
    pub fn polynomial(name: impl Into<String>, coeffs: &[f64]) -> Result<Self, SeriesError> {
        Self::explicit(name, coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        PowerSeries {
            name: "0".to_string(),
            rule: Rule::Explicit(Vec::new()),
        }
    }

    pub fn recurrence(
        name: impl Into<String>,
        a0: C64,
        num: Vec<f64>,
        den: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        if !a0.re.is_finite()
            || !a0.im.is_finite()
            || num.iter().chain(den.iter()).any(|c| !c.is_finite())
        {
            return Err(SeriesError::NonFinite);
        }
        if den.iter().all(|&c| c == 0.0) {
            return Err(SeriesError::EmptyDenominator);
        }
        if let Some(n) = (0..RECURRENCE_CHECK_LEN).find(|&n| horner(&den, n as f64) == 0.0) {
            return Err(SeriesError::SingularRecurrence(n));
        }
        Ok(PowerSeries {
            name: name.into(),
            rule: Rule::Recurrence(Recurrence { a0, num, den }),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Number of stored coefficients for explicit lists, `None` otherwise.
    pub fn finite_len(&self) -> Option<usize> {
        match &self.rule {
            Rule::Explicit(c) => Some(c.len()),
            _ => None,
        }
    }

    /// `aₙ`. Indices past an explicit list read as zero.
    pub fn coeff(&self, n: usize) -> C64 {
        self.coeffs().nth(n).unwrap_or_default()
    }

    /// Infinite stream `a₀, a₁, …`, generated multiplicatively.
    pub fn coeffs(&self) -> Coefficients<'_> {
        Coefficients {
            series: self,
            n: 0,
            carry: [C64::default(); 2],
        }
    }

    /// Stream of `ln|aₙ|`, `None` for structural zeros. Stays accurate long
    /// after the coefficients themselves underflow.
    pub fn log_abs_coeffs(&self) -> LogAbsCoefficients<'_> {
        LogAbsCoefficients {
            series: self,
            n: 0,
            carry: [None; 2],
        }
    }

    /// Whether `aₙ` is zero by construction (not by underflow).
    pub fn is_structural_zero(&self, n: usize) -> bool {
        match &self.rule {
            Rule::Explicit(c) => c.get(n).is_none_or(|a| *a == C64::default()),
            Rule::Builtin(b) => !b.is_nonzero_index(n),
            Rule::Recurrence(r) => {
                r.a0 == C64::default() || (0..n).any(|k| horner(&r.num, k as f64) == 0.0)
            }
        }
    }

    /// `|aₙ₊₁ / aₙ|` as the ratio test sees it; `None` where undefined.
    ///
    /// Recurrences report `|r(n)|` directly, so the ratio stays defined even
    /// where the coefficients underflow. Explicit lists only define ratios
    /// between stored entries.
    pub fn abs_ratio(&self, n: usize) -> Option<f64> {
        match &self.rule {
            Rule::Explicit(c) => {
                let (a, b) = (c.get(n)?, c.get(n + 1)?);
                (*a != C64::default()).then(|| b.norm() / a.norm())
            }
            Rule::Recurrence(r) => Some(r.ratio(n).abs()),
            Rule::Builtin(b) => {
                if !b.is_nonzero_index(n) {
                    None
                } else if b.is_nonzero_index(n + 1) {
                    Some(b.step_ratio(n).abs())
                } else {
                    Some(0.0)
                }
            }
        }
    }
}

impl fmt::Display for PowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// See [`PowerSeries::coeffs`].
pub struct Coefficients<'a> {
    series: &'a PowerSeries,
    n: usize,
    // last two emitted values (a_{n-1}, a_{n-2})
    carry: [C64; 2],
}

impl Iterator for Coefficients<'_> {
    type Item = C64;

    fn next(&mut self) -> Option<C64> {
        let n = self.n;
        let value = match &self.series.rule {
            Rule::Explicit(c) => c.get(n).copied().unwrap_or_default(),
            Rule::Recurrence(r) => {
                if n == 0 {
                    r.a0
                } else {
                    self.carry[0] * r.ratio(n - 1)
                }
            }
            Rule::Builtin(b) => {
                let (start, step, _) = b.shape();
                if !b.is_nonzero_index(n) {
                    C64::default()
                } else if n == start {
                    C64::new(1.0, 0.0)
                } else {
                    self.carry[step - 1] * b.step_ratio(n - step)
                }
            }
        };
        self.carry = [value, self.carry[0]];
        self.n += 1;
        Some(value)
    }
}

/// See [`PowerSeries::log_abs_coeffs`].
pub struct LogAbsCoefficients<'a> {
    series: &'a PowerSeries,
    n: usize,
    carry: [Option<f64>; 2],
}

impl Iterator for LogAbsCoefficients<'_> {
    type Item = Option<f64>;

    fn next(&mut self) -> Option<Option<f64>> {
        let n = self.n;
        let value = match &self.series.rule {
            Rule::Explicit(c) => c
                .get(n)
                .filter(|a| **a != C64::default())
                .map(|a| a.norm().ln()),
            Rule::Recurrence(r) => {
                if n == 0 {
                    (r.a0 != C64::default()).then(|| r.a0.norm().ln())
                } else {
                    let step = r.ratio(n - 1);
                    self.carry[0].filter(|_| step != 0.0).map(|l| l + step.abs().ln())
                }
            }
            Rule::Builtin(b) => {
                let (start, step, _) = b.shape();
                if !b.is_nonzero_index(n) {
                    None
                } else if n == start {
                    Some(0.0)
                } else {
                    self.carry[step - 1].map(|l| l + b.step_ratio(n - step).abs().ln())
                }
            }
        };
        self.carry = [value, self.carry[0]];
        self.n += 1;
        Some(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Passes,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub n_used: usize,
    /// Extrapolated `lim |aₙ₊₁/aₙ|`; `None` when the defined ratios are too sparse.
    pub limit_estimate: Option<f64>,
    pub last_ratio: Option<f64>,
    pub defined_fraction: f64,
    pub zero_coefficient_indices: Vec<usize>,
    pub verdict: Verdict,
}

/// Ratio test over the pairs `(aₙ, aₙ₊₁)`, `n < n_max`.
pub fn ratio_test(f: &PowerSeries, n_max: usize) -> RatioReport {
    let n_max = n_max.max(2);
    let pairs = match f.finite_len() {
        Some(len) => n_max.min(len.saturating_sub(1)),
        None => n_max,
    };

    let mut ratios = Vec::with_capacity(pairs);
    let mut zero_idx = Vec::new();
    for n in 0..pairs {
        let r = f.abs_ratio(n);
        if r.is_none() {
            zero_idx.push(n);
        }
        ratios.push(r);
    }

    let all_zero = (0..n_max.max(pairs + 1)).all(|n| f.is_structural_zero(n));
    if all_zero {
        return RatioReport {
            n_used: pairs,
            limit_estimate: Some(0.0),
            last_ratio: None,
            defined_fraction: 0.0,
            zero_coefficient_indices: zero_idx,
            verdict: Verdict::Passes,
        };
    }

    let defined = ratios.iter().filter(|r| r.is_some()).count();
    let defined_fraction = if pairs == 0 {
        0.0
    } else {
        defined as f64 / pairs as f64
    };
    let last_ratio = ratios.iter().rev().find_map(|r| *r);
    let limit_estimate = if defined >= 2 && defined_fraction >= MIN_DEFINED_FRACTION {
        extrapolate_limit(&ratios)
    } else {
        None
    };
    let verdict = match limit_estimate {
        Some(l) if l < 1.0 - RATIO_TOL => Verdict::Passes,
        Some(l) if l > 1.0 + RATIO_TOL => Verdict::Fails,
        _ => Verdict::Inconclusive,
    };
    RatioReport {
        n_used: pairs,
        limit_estimate,
        last_ratio,
        defined_fraction,
        zero_coefficient_indices: zero_idx,
        verdict,
    }
}

/// Estimates the limit of `seq` (indexed by n, `None` = undefined).
///
/// Aitken's Δ² on the geometric subsequence at `n + 1 = K, K/2, K/4`, which
/// is exact for `L + c·(n+1)^(-α)` and converged geometric tails alike.
/// Falls back to the last defined value when the sequence is too short.
fn extrapolate_limit(seq: &[Option<f64>]) -> Option<f64> {
    let at_or_below = |idx: usize| (0..=idx).rev().find_map(|k| seq[k].map(|v| (k, v)));
    let (last, s3) = at_or_below(seq.len().checked_sub(1)?)?;
    let k = last + 1;
    if k < 8 {
        return Some(s3.max(0.0));
    }
    let (i2, s2) = at_or_below(k / 2 - 1)?;
    let (i1, s1) = at_or_below(k / 4 - 1)?;
    if i1 == i2 || i2 == last {
        return Some(s3.max(0.0));
    }
    let d1 = s1 - s2;
    let d2 = s2 - s3;
    let denom = d1 - d2;
    // Non-contracting differences carry no usable trend.
    let estimate = if denom == 0.0 || d2.abs() >= d1.abs() {
        s3
    } else {
        s3 - d2 * d2 / denom
    };
    Some(estimate.max(0.0))
}

/// Checks numerically that `lim |aₙ₊₁/aₙ|^r = (lim |aₙ₊₁/aₙ|)^r`.
///
/// Both limits are extrapolated independently from their own sequences.
pub fn power_ratio_check(f: &PowerSeries, r: f64, n_max: usize) -> Result<bool, SeriesError> {
    let report = ratio_test(f, n_max);
    let limit = report.limit_estimate.ok_or(SeriesError::RatioLimitUndefined)?;
    let pairs = report.n_used;
    let powered: Vec<Option<f64>> = (0..pairs).map(|n| f.abs_ratio(n).map(|q| q.powf(r))).collect();
    let powered_limit = match extrapolate_limit(&powered) {
        Some(l) => l,
        // all-zero series: every power of the zero limit
        None => 0.0,
    };
    Ok((powered_limit - limit.powf(r)).abs() <= RATIO_TOL)
}

/// `max |aₙ|^{1/n}` over the trailing tenth of `1..=n_max`.
pub fn root_test(f: &PowerSeries, n_max: usize) -> f64 {
    let n_max = n_max.max(2);
    let window = (n_max / 10).max(1);
    let from = (n_max + 1 - window).max(1);
    f.log_abs_coeffs()
        .enumerate()
        .take(n_max + 1)
        .skip(from)
        .filter_map(|(n, l)| l.map(|l| (l / n as f64).exp()))
        .fold(0.0, f64::max)
}

/// How many terms of `Σ aₖ xᵏ` to keep for `|x| ≤ scale`, and the tail bound
/// `Σ_{k ≥ terms} |aₖ| scaleᵏ` that justifies it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub terms: usize,
    pub tail_bound: f64,
    pub converged: bool,
}

/// Shared stopping rule for the scalar and operator evaluators.
///
/// The scalar majorant series `Σ |aₖ| scaleᵏ` is continued until a run of
/// sixteen terms is both below `tol·1e-6` and halving per block of eight;
/// everything past that point is bounded geometrically. Explicit lists are
/// summed exactly. The result is the first `n` whose tail is `≤ tol`, or a
/// non-converged truncation at `max_terms`.
pub fn truncation(f: &PowerSeries, scale: f64, tol: f64, max_terms: usize) -> Truncation {
    let log_scale = scale.ln();
    let term = |k: usize, la: Option<f64>| -> f64 {
        match la {
            None => 0.0,
            Some(_) if k > 0 && scale == 0.0 => 0.0,
            Some(l) if k == 0 => l.exp(),
            Some(l) => (l + k as f64 * log_scale).exp(),
        }
    };

    let mut terms: Vec<f64> = Vec::new();
    let mut remainder = f64::INFINITY;
    match f.finite_len() {
        Some(len) => {
            terms.extend(f.log_abs_coeffs().take(len).enumerate().map(|(k, l)| term(k, l)));
            remainder = 0.0;
        }
        None => {
            let small = tol * 1e-6;
            for (k, l) in f.log_abs_coeffs().enumerate().take(TAIL_SCAN_CAP) {
                let t = term(k, l);
                if !t.is_finite() {
                    break;
                }
                terms.push(t);
                if k >= 15 {
                    let recent = terms[k - 7..=k].iter().copied().fold(0.0, f64::max);
                    let older = terms[k - 15..k - 7].iter().copied().fold(0.0, f64::max);
                    if recent == 0.0 {
                        remainder = 0.0;
                        break;
                    }
                    if recent <= small && recent <= 0.5 * older {
                        let rho = recent / older;
                        remainder = 8.0 * recent * rho / (1.0 - rho);
                        break;
                    }
                }
            }
        }
    }

    // tails[n] = Σ_{k > n} t_k + remainder, summed from the small end
    let mut tails = vec![0.0; terms.len().max(1)];
    let mut acc = remainder;
    for n in (0..terms.len()).rev() {
        tails[n] = acc;
        acc += terms[n];
    }
    if terms.is_empty() {
        tails[0] = remainder;
    }

    match tails.iter().position(|&t| t <= tol) {
        Some(n) if n < max_terms => Truncation {
            terms: n + 1,
            tail_bound: tails[n],
            converged: true,
        },
        _ => {
            let n = max_terms.saturating_sub(1);
            Truncation {
                terms: max_terms,
                tail_bound: tails.get(n).copied().unwrap_or(f64::INFINITY),
                converged: false,
            }
        }
    }
}

/// Principal square root, exact on the real axis.
///
/// A negative real with a signed-zero imaginary part maps onto the positive
/// imaginary axis either way, so `√aₙ` does not depend on how `aₙ` was formed.
pub fn principal_sqrt(z: C64) -> C64 {
    if z.re == 0.0 && z.im == 0.0 {
        return C64::default();
    }
    let t = ((z.re.abs() + z.norm()) * 0.5).sqrt();
    if z.re >= 0.0 {
        C64::new(t, z.im / (2.0 * t))
    } else if z.im == 0.0 {
        C64::new(0.0, t)
    } else {
        C64::new(z.im.abs() / (2.0 * t), t.copysign(z.im))
    }
}

/// `f(z)` by partial sums, stopped by [`truncation`] with scale `|z|`.
pub fn eval_scalar(f: &PowerSeries, z: C64, tol: f64, max_terms: usize) -> Result<C64, SeriesError> {
    let plan = truncation(f, z.norm(), tol, max_terms);
    let mut sum = C64::default();
    let mut power = C64::new(1.0, 0.0);
    for a in f.coeffs().take(plan.terms) {
        sum += a * power;
        power *= z;
    }
    if plan.converged {
        Ok(sum)
    } else {
        Err(SeriesError::DidNotConverge {
            partial: sum,
            terms: plan.terms,
            tail_bound: plan.tail_bound,
        })
    }
}

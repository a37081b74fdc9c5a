//! ℓᵖ-bounded measures on the tower `S_i = {0, …, i, ∞}`, the measure `μ_f`
//! of an entire function, and integration of orbit maps against it.
//!
//! Weights are complex; ℓᵖ conditions are applied to their moduli. A level-`i`
//! measure stores `i + 2` weights with the weight at `∞` last.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::profinite::{project, ProfiniteError, TowerPoint};
use crate::series::{principal_sqrt, PowerSeries};
use crate::C64;

/// Terms of the `c₀` and tail sums below this are treated as vanished.
const NEGLIGIBLE_TERM: f64 = 1e-18;
/// Consecutive negligible terms required before a sum is declared converged.
const NEGLIGIBLE_RUN: usize = 5;
const SUMMATION_CAP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("exponent p = {0} outside (0, 1]")]
    InvalidExponent(f64),
    #[error(transparent)]
    Profinite(#[from] ProfiniteError),
    #[error("level {level} needs {expected} weights, got {got}")]
    WeightCount {
        level: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite weight")]
    NonFinite,
    #[error("not p-summable at requested depth (p = {p}, {terms} terms)")]
    NotSummable { p: f64, terms: usize },
    #[error("orbit value at {point} has shape {got:?}, expected {expected:?}")]
    DimensionMismatch {
        point: TowerPoint,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("orbit must vanish at ∞ (norm {0:e})")]
    NonzeroAtInfinity(f64),
    #[error("measures live on different towers")]
    TowerMismatch,
}

fn check_exponent(p: f64) -> Result<(), MeasureError> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(MeasureError::InvalidExponent(p))
    }
}

/// A finitely supported measure on `S_level`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMeasure {
    level: usize,
    weights: Vec<C64>,
}

impl LevelMeasure {
    pub fn new(level: usize, weights: Vec<C64>) -> Result<Self, MeasureError> {
        if weights.len() != level + 2 {
            return Err(MeasureError::WeightCount {
                level,
                expected: level + 2,
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return Err(MeasureError::NonFinite);
        }
        Ok(LevelMeasure { level, weights })
    }

    pub fn zero(level: usize) -> Self {
        LevelMeasure {
            level,
            weights: vec![C64::default(); level + 2],
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// `[w(0), …, w(level), w(∞)]`.
    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn weight(&self, x: TowerPoint) -> Result<C64, MeasureError> {
        Ok(self.weights[x.index_in_level(self.level)?])
    }

    pub fn infinity_weight(&self) -> C64 {
        self.weights[self.level + 1]
    }
}

/// `Σ |w|ᵖ` over all points of the level.
pub fn lp_norm(m: &LevelMeasure, p: f64) -> f64 {
    m.weights.iter().map(|w| w.norm().powf(p)).sum()
}

pub fn dirac(x: TowerPoint, level: usize) -> Result<LevelMeasure, MeasureError> {
    let idx = x.index_in_level(level)?;
    let mut m = LevelMeasure::zero(level);
    m.weights[idx] = C64::new(1.0, 0.0);
    Ok(m)
}

/// Pushforward along the transition `S_j → S_i`.
///
/// The mass of `i < n ≤ j` is folded into `∞`, accumulated from `n = j`
/// downwards. [`mu_f`] builds its tail masses in the same order, which is
/// what makes its levels coherent bit for bit.
pub fn pushforward(m: &LevelMeasure, i: usize) -> Result<LevelMeasure, MeasureError> {
    let j = m.level;
    if i > j {
        return Err(ProfiniteError::LevelOrder { from: j, to: i }.into());
    }
    let mut at_infinity = m.weights[j + 1];
    for n in (i + 1..=j).rev() {
        at_infinity += m.weights[n];
    }
    let mut weights = Vec::with_capacity(i + 2);
    weights.extend_from_slice(&m.weights[..=i]);
    weights.push(at_infinity);
    Ok(LevelMeasure { level: i, weights })
}

/// ℓᵖ bound certifying membership at a smaller exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub p: f64,
    pub bound_c: f64,
}

/// A coherent family of level measures `0..=depth` with a uniform ℓᵖ bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TowerMeasure {
    p: f64,
    levels: Vec<LevelMeasure>,
    bound_c: f64,
    witness: Option<Witness>,
}

impl TowerMeasure {
    /// Assembles a tower from its levels; `levels[i]` must sit at level `i`.
    pub fn from_levels(p: f64, levels: Vec<LevelMeasure>, bound_c: f64) -> Result<Self, MeasureError> {
        check_exponent(p)?;
        if levels.is_empty() || levels.iter().enumerate().any(|(i, l)| l.level != i) {
            return Err(MeasureError::TowerMismatch);
        }
        Ok(TowerMeasure {
            p,
            levels,
            bound_c,
            witness: None,
        })
    }

    /// The Dirac measure at `x`, lifted coherently through every level.
    pub fn dirac(x: TowerPoint, depth: usize, p: f64) -> Result<Self, MeasureError> {
        let levels = (0..=depth)
            .map(|i| dirac(project(depth, i, x)?, i))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_levels(p, levels, 1.0)
    }

    pub fn zero(depth: usize, p: f64) -> Result<Self, MeasureError> {
        Self::from_levels(p, (0..=depth).map(LevelMeasure::zero).collect(), 0.0)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn bound_c(&self) -> f64 {
        self.bound_c
    }

    pub fn witness(&self) -> Option<Witness> {
        self.witness
    }

    pub fn level(&self, i: usize) -> Option<&LevelMeasure> {
        self.levels.get(i)
    }

    pub fn top(&self) -> &LevelMeasure {
        self.levels.last().expect("towers have at least one level")
    }

    pub fn level_norms(&self) -> Vec<f64> {
        self.levels.iter().map(|l| lp_norm(l, self.p)).collect()
    }

    /// Exact coherence: every pushforward of level `j` reproduces level `i ≤ j`.
    pub fn is_coherent(&self) -> bool {
        self.levels.iter().all(|upper| {
            self.levels[..=upper.level]
                .iter()
                .all(|lower| pushforward(upper, lower.level).is_ok_and(|m| m == *lower))
        })
    }

    /// Largest weight discrepancy between a level and the pushforward of any
    /// higher level; zero exactly when [`TowerMeasure::is_coherent`] holds.
    pub fn coherence_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for upper in &self.levels {
            for lower in &self.levels[..=upper.level] {
                let pushed = pushforward(upper, lower.level).expect("levels are ordered");
                for (a, b) in pushed.weights.iter().zip(&lower.weights) {
                    worst = worst.max((a - b).norm());
                }
            }
        }
        worst
    }

    /// Whether every level satisfies `Σ|w|ᵖ ≤ bound_c + slack`.
    pub fn within_bound(&self, slack: f64) -> bool {
        self.level_norms().iter().all(|&n| n <= self.bound_c + slack)
    }

    /// `α·self + β·other`, levelwise.
    pub fn linear_combination(&self, alpha: C64, other: &Self, beta: C64) -> Result<Self, MeasureError> {
        if self.depth() != other.depth() || self.p != other.p {
            return Err(MeasureError::TowerMismatch);
        }
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| LevelMeasure {
                level: a.level,
                weights: a
                    .weights
                    .iter()
                    .zip(&b.weights)
                    .map(|(x, y)| alpha * x + beta * y)
                    .collect(),
            })
            .collect();
        let bound_c = alpha.norm().powf(self.p) * self.bound_c + beta.norm().powf(self.p) * other.bound_c;
        Self::from_levels(self.p, levels, bound_c)
    }
}

/// `Σₙ |aₙ|^{exponent/2} = Σ |√aₙ|^exponent`, to numerical convergence.
fn sqrt_coefficient_mass(f: &PowerSeries, exponent: f64) -> Result<f64, MeasureError> {
    let half = 0.5 * exponent;
    let term = |l: Option<f64>| l.map_or(0.0, |l| (half * l).exp());
    if let Some(len) = f.finite_len() {
        return Ok(f.log_abs_coeffs().take(len).map(term).sum());
    }
    let mut sum = 0.0;
    let mut run = 0;
    for l in f.log_abs_coeffs().take(SUMMATION_CAP) {
        let t = term(l);
        sum += t;
        run = if t < NEGLIGIBLE_TERM { run + 1 } else { 0 };
        if run == NEGLIGIBLE_RUN {
            return Ok(sum);
        }
    }
    Err(MeasureError::NotSummable {
        p: exponent,
        terms: SUMMATION_CAP,
    })
}

/// `Σ_{n > depth} √aₙ`.
fn tail_mass(f: &PowerSeries, depth: usize, p: f64) -> Result<C64, MeasureError> {
    let roots = f.coeffs().skip(depth + 1).map(principal_sqrt);
    if let Some(len) = f.finite_len() {
        return Ok(roots.take(len.saturating_sub(depth + 1)).sum());
    }
    let mut sum = C64::default();
    let mut run = 0;
    for w in roots.take(SUMMATION_CAP) {
        sum += w;
        run = if w.norm() < NEGLIGIBLE_TERM { run + 1 } else { 0 };
        if run == NEGLIGIBLE_RUN {
            return Ok(sum);
        }
    }
    Err(MeasureError::NotSummable {
        p,
        terms: SUMMATION_CAP,
    })
}

/// The measure of `f`: weight `√aₙ` (principal branch) at `n`.
///
/// Level `i` carries the tail mass `Σ_{n>i} √aₙ` at `∞`, so the levels are
/// exactly coherent under [`pushforward`]. The bound is
/// `c₀ = Σ |√aₙ|ᵖ`, and a second bound at `p/2` is recorded as the witness
/// for membership below `p`.
pub fn mu_f(f: &PowerSeries, p: f64, depth: usize) -> Result<TowerMeasure, MeasureError> {
    check_exponent(p)?;
    let bound_c = sqrt_coefficient_mass(f, p)?;
    let witness = Witness {
        p: 0.5 * p,
        bound_c: sqrt_coefficient_mass(f, 0.5 * p)?,
    };

    let roots: Vec<C64> = f.coeffs().take(depth + 1).map(principal_sqrt).collect();
    let mut tails = vec![C64::default(); depth + 1];
    tails[depth] = tail_mass(f, depth, p)?;
    for i in (0..depth).rev() {
        tails[i] = tails[i + 1] + roots[i + 1];
    }

    let levels = (0..=depth)
        .map(|i| {
            let mut weights = Vec::with_capacity(i + 2);
            weights.extend_from_slice(&roots[..=i]);
            weights.push(tails[i]);
            LevelMeasure::new(i, weights)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut tower = TowerMeasure::from_levels(p, levels, bound_c)?;
    tower.witness = Some(witness);
    Ok(tower)
}

/// Result of integrating an orbit map against a tower measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub value: DMatrix<C64>,
    /// Size of the last nonvanishing summands; what truncation at `depth` leaves out
    /// is of this order.
    pub truncation_estimate: f64,
    pub within_tol: bool,
}

/// `∫_S φ dμ = Σ_{n ≤ depth} μ(n)·φ(n)` over the top level of `mu`.
///
/// `φ(∞)` must vanish (to within `tol`), so the weight at `∞` never
/// contributes. All values of `φ` must share one shape.
pub fn pair<F>(mu: &TowerMeasure, orbit: F, tol: f64) -> Result<Pairing, MeasureError>
where
    F: Fn(TowerPoint) -> DMatrix<C64>,
{
    let at_infinity = orbit(TowerPoint::Infinity);
    let shape = at_infinity.shape();
    let inf_norm = at_infinity.norm();
    if inf_norm > tol {
        return Err(MeasureError::NonzeroAtInfinity(inf_norm));
    }

    let top = mu.top();
    let depth = top.level;
    let mut value = DMatrix::zeros(shape.0, shape.1);
    let mut last_terms = [0.0f64; 2];
    for n in 0..=depth {
        let point = TowerPoint::Finite(n);
        let phi = orbit(point);
        if phi.shape() != shape {
            return Err(MeasureError::DimensionMismatch {
                point,
                expected: shape,
                got: phi.shape(),
            });
        }
        let w = top.weights[n];
        let term_norm = if w == C64::default() {
            0.0
        } else {
            let term = phi * w;
            let norm = term.norm();
            value += term;
            norm
        };
        last_terms = [last_terms[1], term_norm];
    }
    let truncation_estimate = last_terms[0].max(last_terms[1]);
    Ok(Pairing {
        value,
        truncation_estimate,
        within_tol: truncation_estimate <= tol,
    })
}

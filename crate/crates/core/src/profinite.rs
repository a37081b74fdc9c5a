//! The profinite set `S = ℕ ∪ {∞}` as the limit of `S_i = {0, …, i, ∞}`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProfiniteError {
    #[error("point outside level: {point} is not in S_{level}")]
    PointOutsideLevel { point: TowerPoint, level: usize },
    #[error("cannot project from level {from} to higher level {to}")]
    LevelOrder { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TowerPoint {
    Finite(usize),
    Infinity,
}

impl TowerPoint {
    pub fn is_in_level(self, level: usize) -> bool {
        match self {
            TowerPoint::Finite(n) => n <= level,
            TowerPoint::Infinity => true,
        }
    }

    /// Position within `level_points(level)`; `∞` sits last at `level + 1`.
    pub fn index_in_level(self, level: usize) -> Result<usize, ProfiniteError> {
        match self {
            TowerPoint::Finite(n) if n <= level => Ok(n),
            TowerPoint::Infinity => Ok(level + 1),
            point => Err(ProfiniteError::PointOutsideLevel { point, level }),
        }
    }
}

impl fmt::Display for TowerPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TowerPoint::Finite(n) => write!(f, "{n}"),
            TowerPoint::Infinity => f.write_str("∞"),
        }
    }
}

/// Transition map `S_j → S_i`: keeps `n ≤ i`, sends everything else to `∞`.
pub fn project(j: usize, i: usize, x: TowerPoint) -> Result<TowerPoint, ProfiniteError> {
    if i > j {
        return Err(ProfiniteError::LevelOrder { from: j, to: i });
    }
    if !x.is_in_level(j) {
        return Err(ProfiniteError::PointOutsideLevel { point: x, level: j });
    }
    Ok(match x {
        TowerPoint::Finite(n) if n <= i => x,
        _ => TowerPoint::Infinity,
    })
}

/// `[0, 1, …, i, ∞]`.
pub fn level_points(i: usize) -> Vec<TowerPoint> {
    (0..=i)
        .map(TowerPoint::Finite)
        .chain(std::iter::once(TowerPoint::Infinity))
        .collect()
}

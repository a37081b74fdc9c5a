//! Shared helpers for the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use holocalc::random::IntegerComplex;

/// Rank over ℚ by exact Gaussian elimination.
pub fn rational_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..m.len() {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &m[rank][col];
            for c in col..ncols {
                let delta = &factor * &m[rank][c];
                m[r][c] -= delta;
            }
        }
        rank += 1;
    }
    rank
}

/// `dim C_i − rank d_i − rank d_{i+1}` with exact ranks.
pub fn exact_betti(ic: &IntegerComplex) -> Vec<usize> {
    let ranks: Vec<usize> = ic.differentials.iter().map(|d| rational_rank(d)).collect();
    ic.dims
        .iter()
        .enumerate()
        .map(|(k, &dim)| {
            let out = if k > 0 { ranks[k - 1] } else { 0 };
            let inc = ranks.get(k).copied().unwrap_or(0);
            dim - out - inc
        })
        .collect()
}

//! Seeded generators for test and benchmark inputs: well-conditioned
//! diagonalizable matrices, chain complexes with known homology, and chain
//! endomorphisms compatible with them.
//!
//! Complexes are direct sums of two-term acyclic pieces `ℂ --1--> ℂ` and
//! one-term pieces with zero differential, conjugated degreewise by random
//! invertible matrices. In each degree the standard basis is ordered
//! `[A | B | H]`: `A` maps isomorphically onto the `B` block one degree down,
//! `H` spans the homology.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{ChainComplex, ChainEndo};
use crate::operator::{sigma_max, MatrixOp};
use crate::C64;

/// Deterministic RNG used throughout tests and benches.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in the unit square `[-1, 1]²`.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Unitary factor of the QR decomposition of a random matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> DMatrix<C64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    random_matrix(rng, n, n).qr().q()
}

/// `U·diag(s)·W` with singular values log-uniform in `[1, max_cond]`, so
/// the condition number is at most `max_cond`.
pub fn well_conditioned<R: Rng>(rng: &mut R, n: usize, max_cond: f64) -> DMatrix<C64> {
    let u = random_unitary(rng, n);
    let w = random_unitary(rng, n);
    let log_max = max_cond.ln();
    let s = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(rng.random_range(0.0..=log_max).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    u * s * w
}

/// Inverse of an invertible matrix produced by this module.
fn inverse(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.clone().try_inverse().expect("generated matrices are invertible")
}

/// `T = V·Λ·V⁻¹` with eigenvalues in the unit disk and `cond(V) ≤ max_cond`,
/// rescaled so that `‖T‖₂ ≤ max_norm`.
pub fn random_diagonalizable<R: Rng>(rng: &mut R, n: usize, max_norm: f64, max_cond: f64) -> MatrixOp {
    let v = well_conditioned(rng, n, max_cond);
    let lambda = DMatrix::from_fn(n, n, |r, c| {
        if r != c {
            return C64::new(0.0, 0.0);
        }
        let radius = rng.random_range(0.0..1.0f64).sqrt();
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        C64::from_polar(radius, angle)
    });
    let mut t = &v * lambda * inverse(&v);
    let norm = sigma_max(&t);
    if norm > 0.0 {
        let target = max_norm * rng.random_range(0.5..=1.0);
        t *= C64::new(target / norm, 0.0);
    }
    MatrixOp::new(t).expect("finite by construction")
}

/// Block sizes of one degree in the `[A | B | H]` basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blocks {
    /// Sources of acyclic pieces going down one degree.
    pub a: usize,
    /// Targets of acyclic pieces coming from one degree up.
    pub b: usize,
    /// Homology.
    pub h: usize,
}

impl Blocks {
    pub fn dim(&self) -> usize {
        self.a + self.b + self.h
    }
}

/// Random block sizes for `len` consecutive degrees with every `dim ≤ max_dim`,
/// listed from the lowest degree up.
pub fn random_blocks<R: Rng>(rng: &mut R, len: usize, max_dim: usize) -> Vec<Blocks> {
    let mut blocks = vec![Blocks { a: 0, b: 0, h: 0 }; len];
    // from the top: b of a degree is a of the one above
    for k in (0..len).rev() {
        let b = if k + 1 < len { blocks[k + 1].a } else { 0 };
        let room = max_dim - b;
        let a = if k == 0 { 0 } else { rng.random_range(0..=room) };
        let h = rng.random_range(0..=room - a);
        blocks[k] = Blocks { a, b, h };
    }
    blocks
}

/// Differential `d : C_k → C_{k-1}` in standard form.
fn standard_differential(lower: Blocks, upper: Blocks) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(lower.dim(), upper.dim());
    for j in 0..upper.a {
        d[(lower.a + j, j)] = 1.0;
    }
    d
}

fn embed(target: &mut DMatrix<C64>, row: usize, col: usize, block: &DMatrix<C64>) {
    target
        .view_mut((row, col), block.shape())
        .copy_from(block);
}

/// A complex with known homology together with a chain endomorphism of it.
#[derive(Debug, Clone)]
pub struct RandomChain {
    pub complex: ChainComplex,
    pub endo: ChainEndo,
    pub betti: Vec<usize>,
    /// Induced maps on homology in the standard `H` block basis, before
    /// conjugation. `H_i(T)` is similar to these.
    pub homology_blocks: Vec<DMatrix<C64>>,
}

/// Random complex of `len ≤ 4` degrees starting at `d_min` with `dims ≤ max_dim`,
/// conjugated by matrices of condition number at most `max_cond`, plus a chain
/// endomorphism rescaled so that every `‖T_i‖₂ ≤ max_norm`.
pub fn random_chain<R: Rng>(
    rng: &mut R,
    d_min: i64,
    len: usize,
    max_dim: usize,
    max_cond: f64,
    max_norm: f64,
) -> RandomChain {
    let blocks = random_blocks(rng, len, max_dim);
    let changes: Vec<DMatrix<C64>> = blocks
        .iter()
        .map(|b| well_conditioned(rng, b.dim(), max_cond))
        .collect();
    let inverses: Vec<DMatrix<C64>> = changes.iter().map(inverse).collect();

    let differentials = (1..len)
        .map(|k| {
            let d = standard_differential(blocks[k - 1], blocks[k]).map(|x| C64::new(x, 0.0));
            &changes[k - 1] * d * &inverses[k]
        })
        .collect();
    let dims = blocks.iter().map(Blocks::dim).collect();
    let complex = ChainComplex::new(d_min, dims, differentials).expect("shapes agree by construction");

    // Y_k acts on the B block of degree k (= A block of degree k+1)
    let ys: Vec<DMatrix<C64>> = blocks.iter().map(|b| random_matrix(rng, b.b, b.b)).collect();
    let zs: Vec<DMatrix<C64>> = blocks.iter().map(|b| random_matrix(rng, b.h, b.h)).collect();
    let standard: Vec<DMatrix<C64>> = blocks
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let mut t = DMatrix::zeros(b.dim(), b.dim());
            let (a0, b0, h0) = (0, b.a, b.a + b.b);
            if b.a > 0 {
                embed(&mut t, a0, a0, &ys[k - 1]);
            }
            embed(&mut t, b0, a0, &random_matrix(rng, b.b, b.a));
            embed(&mut t, b0, b0, &ys[k]);
            embed(&mut t, b0, h0, &random_matrix(rng, b.b, b.h));
            embed(&mut t, h0, a0, &random_matrix(rng, b.h, b.a));
            embed(&mut t, h0, h0, &zs[k]);
            t
        })
        .collect();

    let mut maps: Vec<DMatrix<C64>> = standard
        .iter()
        .zip(changes.iter().zip(&inverses))
        .map(|(t, (p, p_inv))| p * t * p_inv)
        .collect();
    // one common factor keeps the chain-map law
    let largest = maps.iter().map(sigma_max).fold(0.0, f64::max);
    let scale = if largest > max_norm { max_norm / largest } else { 1.0 };
    for m in &mut maps {
        *m *= C64::new(scale, 0.0);
    }
    let homology_blocks = zs.into_iter().map(|z| z * C64::new(scale, 0.0)).collect();

    let maps = maps
        .into_iter()
        .map(|m| MatrixOp::new(m).expect("finite by construction"))
        .collect();
    let endo = ChainEndo::new(&complex, maps).expect("shapes agree by construction");
    RandomChain {
        complex,
        endo,
        betti: blocks.iter().map(|b| b.h).collect(),
        homology_blocks,
    }
}

/// A complex with integer differentials and known Betti numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerComplex {
    pub d_min: i64,
    pub dims: Vec<usize>,
    /// `differentials[k] = d_{d_min+k+1}`, row-major rows of integers.
    pub differentials: Vec<Vec<Vec<i64>>>,
    pub betti: Vec<usize>,
}

impl IntegerComplex {
    pub fn to_complex(&self) -> ChainComplex {
        let differentials = self
            .differentials
            .iter()
            .zip(self.dims.windows(2))
            .map(|(d, w)| DMatrix::from_fn(w[0], w[1], |r, c| C64::new(d[r][c] as f64, 0.0)))
            .collect();
        ChainComplex::new(self.d_min, self.dims.clone(), differentials).expect("shapes agree by construction")
    }
}

/// Unimodular `P` and its inverse as a product of `steps` elementary row
/// operations with multipliers in `[-2, 2]`.
fn unimodular<R: Rng>(rng: &mut R, n: usize, steps: usize) -> (DMatrix<i64>, DMatrix<i64>) {
    let mut p = DMatrix::<i64>::identity(n, n);
    let mut p_inv = DMatrix::<i64>::identity(n, n);
    if n < 2 {
        return (p, p_inv);
    }
    for _ in 0..steps {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let m = rng.random_range(-2..=2i64);
        // P ← E·P with E = I + m·e_ij; P⁻¹ ← P⁻¹·E⁻¹ with E⁻¹ = I − m·e_ij
        let row_j = p.row(j).clone_owned();
        let mut row_i = p.row_mut(i);
        row_i += row_j * m;
        let col_i = p_inv.column(i).clone_owned();
        let mut col_j = p_inv.column_mut(j);
        col_j -= col_i * m;
    }
    (p, p_inv)
}

/// Integer complex of `len` degrees with `dims ≤ max_dim`, conjugated by
/// unimodular integer matrices so the Betti numbers are exact by construction.
pub fn random_integer_complex<R: Rng>(rng: &mut R, d_min: i64, len: usize, max_dim: usize) -> IntegerComplex {
    let blocks = random_blocks(rng, len, max_dim);
    let changes: Vec<(DMatrix<i64>, DMatrix<i64>)> =
        blocks.iter().map(|b| unimodular(rng, b.dim(), 3 * b.dim())).collect();
    let differentials = (1..len)
        .map(|k| {
            let d = standard_differential(blocks[k - 1], blocks[k]).map(|x| x as i64);
            let m = &changes[k - 1].0 * d * &changes[k].1;
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        })
        .collect();
    IntegerComplex {
        d_min,
        dims: blocks.iter().map(Blocks::dim).collect(),
        differentials,
        betti: blocks.iter().map(|b| b.h).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{homology_basis, induced_on_homology, validate, DEFAULT_RANK_TOL};
    use crate::operator::{condition_number, eigen_decomposition, spectral_norm};

    #[test]
    fn seeded_output_is_deterministic() {
        let a = random_matrix(&mut rng(3), 4, 4);
        let b = random_matrix(&mut rng(3), 4, 4);
        assert_eq!(a, b);
    }

    #[test]
    fn unitary_and_conditioning() {
        let mut r = rng(11);
        for n in [1, 3, 8] {
            let u = random_unitary(&mut r, n);
            assert!((u.adjoint() * &u - DMatrix::identity(n, n)).norm() < 1e-12);
            let v = well_conditioned(&mut r, n, 100.0);
            assert!(condition_number(&v) <= 100.0 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn diagonalizable_respects_norm_bound() {
        let mut r = rng(5);
        for _ in 0..20 {
            let t = random_diagonalizable(&mut r, 8, 2.0, 100.0);
            assert!(spectral_norm(&t) <= 2.0 * (1.0 + 1e-12));
            let (_, v) = eigen_decomposition(&t);
            assert!(condition_number(&v).is_finite());
        }
    }

    #[test]
    fn blocks_fit() {
        let mut r = rng(1);
        for _ in 0..200 {
            let len = r.random_range(1..=4);
            let blocks = random_blocks(&mut r, len, 6);
            assert_eq!(blocks[0].a, 0);
            assert_eq!(blocks[len - 1].b, 0);
            for k in 1..len {
                assert_eq!(blocks[k].a, blocks[k - 1].b);
            }
            assert!(blocks.iter().all(|b| b.dim() <= 6));
        }
    }

    #[test]
    fn random_chain_is_valid_with_known_homology() {
        let mut r = rng(42);
        for _ in 0..50 {
            let len = r.random_range(1..=4);
            let chain = random_chain(&mut r, -1, len, 6, 4.0, 3.0);
            let diag = validate(&chain.complex, Some(&chain.endo)).unwrap();
            assert!(diag.pass, "{diag:?}");
            let basis = homology_basis(&chain.complex, DEFAULT_RANK_TOL);
            assert_eq!(basis.betti(), chain.betti);
            let h = induced_on_homology(&chain.complex, &chain.endo, &basis);
            for (m, z) in h.iter().zip(&chain.homology_blocks) {
                assert!((m.matrix().trace() - z.trace()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn unimodular_pair_is_inverse() {
        let mut r = rng(9);
        for n in 0..7 {
            let (p, q) = unimodular(&mut r, n, 3 * n);
            assert_eq!(&p * &q, DMatrix::identity(n, n));
        }
    }

    #[test]
    fn integer_complex_squares_to_zero() {
        let mut r = rng(2);
        for _ in 0..50 {
            let len = r.random_range(1..=4);
            let ic = random_integer_complex(&mut r, 0, len, 6);
            let c = ic.to_complex();
            for k in 1..ic.differentials.len() {
                let lower = &c.differentials()[k - 1];
                let upper = &c.differentials()[k];
                assert_eq!((lower * upper).norm(), 0.0);
            }
        }
    }
}

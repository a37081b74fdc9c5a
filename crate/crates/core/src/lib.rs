//! Functional calculus for entire functions on matrices and bounded chain
//! complexes of finite-dimensional spaces.
//!
//! An entire function `f = Σ aₙ zⁿ` is encoded as a measure on `ℕ ∪ {∞}`
//! with weight `√aₙ` at `n`. Pairing that measure against the orbit
//! `n ↦ √aₙ·Tⁿ` reproduces `f(T) = Σ aₙ Tⁿ`, and the degreewise result on a
//! chain complex commutes with taking homology.

pub mod complex;
pub mod io;
mod linalg;
pub mod measure;
pub mod operator;
pub mod profinite;
pub mod random;
pub mod series;

pub use nalgebra::Complex;

/// Complex double, the scalar type throughout.
pub type C64 = Complex<f64>;

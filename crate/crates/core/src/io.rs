//! JSON formats for functions, matrices, complexes and chain endomorphisms.
//!
//! Complex numbers are `[re, im]` pairs. Matrices are row-major. Output goes
//! through [`to_json`], which writes every float with 17 significant digits
//! so that reports are byte-stable and re-parse to identical bits.

use std::io;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{ChainComplex, ChainEndo, ComplexError};
use crate::operator::{MatrixOp, OperatorError};
use crate::series::{Builtin, PowerSeries, SeriesError};
use crate::C64;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Parses `text` as `T`, reporting the position of any syntax or type error.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    Ok(serde_json::from_str(text)?)
}

/// A complex number as `[re, im]`.
pub type Pair = [f64; 2];

fn to_c64(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn to_pair(z: &C64) -> Pair {
    [z.re, z.im]
}

/// `{"builtin": "exp"}`, `{"coeffs": [[re, im], ...]}` or
/// `{"recurrence": {"a0": [re, im], "num": [...], "den": [...]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionSpec {
    Builtin(Builtin),
    Coeffs(Vec<Pair>),
    Recurrence(RecurrenceSpec),
}

/// `a_{n+1} = r(n)·a_n` with `r = num/den`, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceSpec {
    pub a0: Pair,
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl FunctionSpec {
    pub fn to_series(&self) -> Result<PowerSeries, SeriesError> {
        match self {
            FunctionSpec::Builtin(b) => Ok(PowerSeries::builtin(*b)),
            FunctionSpec::Coeffs(c) => PowerSeries::explicit("coeffs", c.iter().map(to_c64).collect()),
            FunctionSpec::Recurrence(r) => {
                PowerSeries::recurrence("recurrence", to_c64(&r.a0), r.num.clone(), r.den.clone())
            }
        }
    }
}

/// Square matrix: `{"dim": n, "entries": [[re, im], ...]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub dim: usize,
    pub entries: Vec<Pair>,
}

impl MatrixSpec {
    pub fn to_op(&self) -> Result<MatrixOp, IoError> {
        let m = dense(self.dim, self.dim, &self.entries)?;
        Ok(MatrixOp::new(m)?)
    }

    pub fn from_op(op: &MatrixOp) -> Self {
        MatrixSpec {
            dim: op.dim(),
            entries: row_major(op.matrix()),
        }
    }
}

/// Possibly rectangular matrix: `{"rows": r, "cols": c, "entries": [...]}`.
/// Square matrices may use `{"dim": n, ...}` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub entries: Vec<Pair>,
}

impl DenseSpec {
    pub fn shape(&self) -> Result<(usize, usize), IoError> {
        match (self.dim, self.rows, self.cols) {
            (Some(n), None, None) => Ok((n, n)),
            (None, Some(r), Some(c)) => Ok((r, c)),
            _ => Err(IoError::Shape(
                "matrix needs either `dim` or both `rows` and `cols`".to_string(),
            )),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>, IoError> {
        let (r, c) = self.shape()?;
        dense(r, c, &self.entries)
    }

    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        DenseSpec {
            dim: None,
            rows: Some(m.nrows()),
            cols: Some(m.ncols()),
            entries: row_major(m),
        }
    }
}

fn dense(rows: usize, cols: usize, entries: &[Pair]) -> Result<DMatrix<C64>, IoError> {
    if entries.len() != rows * cols {
        return Err(IoError::Shape(format!(
            "{rows}x{cols} matrix needs {} entries, got {}",
            rows * cols,
            entries.len()
        )));
    }
    Ok(DMatrix::from_row_iterator(rows, cols, entries.iter().map(to_c64)))
}

fn row_major(m: &DMatrix<C64>) -> Vec<Pair> {
    m.row_iter().flat_map(|r| r.iter().map(to_pair).collect::<Vec<_>>()).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    /// `d_i : C_i → C_{i-1}`; lists run upward from `d_min`.
    #[default]
    Homological,
    /// `d^i : C^i → C^{i+1}`; lists run upward from `d_min`, and
    /// `differentials[k] = d^{d_min+k}`.
    Cohomological,
}

/// `{"d_min": i0, "dims": [...], "differentials": [matrix...], "grading": "homological"}`.
///
/// In homological grading `differentials[k] = d_{d_min+k+1}`, a
/// `dims[k] × dims[k+1]` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub d_min: i64,
    pub dims: Vec<usize>,
    pub differentials: Vec<DenseSpec>,
    #[serde(default)]
    pub grading: Grading,
}

impl ComplexSpec {
    /// Builds the homologically graded complex, reindexing `C^i = C_{-i}`
    /// when the data is cohomological.
    pub fn to_complex(&self, grading: Grading) -> Result<ChainComplex, IoError> {
        let mut ds = self
            .differentials
            .iter()
            .map(DenseSpec::to_matrix)
            .collect::<Result<Vec<_>, _>>()?;
        let mut dims = self.dims.clone();
        let d_min = match grading {
            Grading::Homological => self.d_min,
            Grading::Cohomological => {
                ds.reverse();
                dims.reverse();
                -(self.d_min + self.dims.len() as i64 - 1)
            }
        };
        Ok(ChainComplex::new(d_min, dims, ds)?)
    }

    pub fn from_complex(c: &ChainComplex) -> Self {
        ComplexSpec {
            d_min: c.d_min(),
            dims: c.dims().to_vec(),
            differentials: c.differentials().iter().map(DenseSpec::from_matrix).collect(),
            grading: Grading::Homological,
        }
    }
}

/// `{"maps": [matrix...]}`, aligned with the complex's `dims` as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndoSpec {
    pub maps: Vec<MatrixSpec>,
}

impl EndoSpec {
    pub fn to_endo(&self, complex: &ChainComplex, grading: Grading) -> Result<ChainEndo, IoError> {
        let mut maps = self
            .maps
            .iter()
            .map(MatrixSpec::to_op)
            .collect::<Result<Vec<_>, _>>()?;
        if grading == Grading::Cohomological {
            maps.reverse();
        }
        Ok(ChainEndo::new(complex, maps)?)
    }

    pub fn from_endo(t: &ChainEndo) -> Self {
        EndoSpec {
            maps: t.maps().iter().map(MatrixSpec::from_op).collect(),
        }
    }
}

/// Compact JSON with floats as `{:.16e}` and non-finite values as `null`.
struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes with 17 significant digits per float.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

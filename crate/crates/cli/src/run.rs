use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use holocalc::complex::{homology_basis, validate, verify_homology_compat, CompatReport, Diagnostics, VerifyOptions};
use holocalc::io::{from_json, to_json, ComplexSpec, DenseSpec, EndoSpec, FunctionSpec, Grading, IoError, MatrixSpec};
use holocalc::measure::{mu_f, MeasureError, Witness};
use holocalc::operator::{func_calc_series, ConvergenceReport, OperatorError};
use holocalc::series::{root_test, ratio_test, PowerSeries, RatioReport, Verdict};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Apply,
    Homology,
    Verify,
    Measure,
    Diagnose,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Apply => "apply",
            Kind::Homology => "homology",
            Kind::Verify => "verify",
            Kind::Measure => "measure",
            Kind::Diagnose => "diagnose",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Kind,
    pub function: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub complex: Option<PathBuf>,
    pub endo: Option<PathBuf>,
    pub tol: f64,
    pub p: f64,
    pub depth: usize,
    pub max_terms: usize,
    pub rank_tol: f64,
    /// Overrides the grading declared in the complex file.
    pub grading: Option<Grading>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub report: String,
    /// For stderr.
    pub message: Option<String>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    status: Status,
    #[serde(flatten)]
    body: T,
}

/// An input problem: unreadable file, malformed JSON, inconsistent shapes.
#[derive(Debug, Serialize)]
struct InputError {
    file: Option<String>,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
}

impl InputError {
    fn new(file: Option<&Path>, message: impl Into<String>) -> Self {
        InputError {
            file: file.map(|p| p.display().to_string()),
            message: message.into(),
            line: None,
            column: None,
        }
    }

    fn from_io(file: &Path, e: IoError) -> Self {
        let mut err = InputError::new(Some(file), e.to_string());
        if let IoError::Json { line, column, .. } = e {
            err.line = Some(line);
            err.column = Some(column);
        }
        err
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a InputError,
}

fn envelope<T: Serialize>(kind: Kind, status: Status, body: T) -> String {
    to_json(&Envelope {
        schema: SCHEMA,
        command: kind.name(),
        status,
        body,
    })
}

fn input_error(kind: Kind, err: InputError) -> Outcome {
    let message = match &err.file {
        Some(f) => format!("{f}: {}", err.message),
        None => err.message.clone(),
    };
    Outcome {
        status: Status::Error,
        report: envelope(kind, Status::Error, ErrorBody { error: &err }),
        message: Some(message),
    }
}

fn finished<T: Serialize>(kind: Kind, pass: bool, body: T, message: Option<String>) -> Outcome {
    let status = Status::from_pass(pass);
    Outcome {
        status,
        report: envelope(kind, status, body),
        message,
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str, kind: Kind) -> Result<&'a Path, InputError> {
    path.as_deref().ok_or_else(|| {
        InputError::new(None, format!("`{}` needs --{flag}", kind.name()))
    })
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|e| InputError::new(Some(path), format!("cannot read: {e}")))?;
    from_json(&text).map_err(|e| InputError::from_io(path, e))
}

fn load_function(cfg: &RunConfig) -> Result<PowerSeries, InputError> {
    let path = required(&cfg.function, "function", cfg.command)?;
    let spec: FunctionSpec = load(path)?;
    spec.to_series().map_err(|e| InputError::new(Some(path), e.to_string()))
}

fn check_config(cfg: &RunConfig) -> Result<(), InputError> {
    if !(cfg.tol > 0.0 && cfg.tol.is_finite()) {
        return Err(InputError::new(None, format!("--tol must be positive, got {}", cfg.tol)));
    }
    if !(cfg.p > 0.0 && cfg.p <= 1.0) {
        return Err(InputError::new(None, format!("--p must lie in (0, 1], got {}", cfg.p)));
    }
    if !(cfg.rank_tol > 0.0 && cfg.rank_tol < 1.0) {
        return Err(InputError::new(None, format!("--rank-tol must lie in (0, 1), got {}", cfg.rank_tol)));
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Outcome {
    let kind = cfg.command;
    let result = check_config(cfg).and_then(|()| match kind {
        Kind::Apply => apply(cfg),
        Kind::Homology => homology(cfg),
        Kind::Verify => verify(cfg),
        Kind::Measure => measure(cfg),
        Kind::Diagnose => diagnose(cfg),
    });
    result.unwrap_or_else(|e| input_error(kind, e))
}

#[derive(Serialize)]
struct ApplyBody<'a> {
    function: &'a str,
    result: MatrixSpec,
    convergence: ConvergenceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn apply(cfg: &RunConfig) -> Result<Outcome, InputError> {
    let f = load_function(cfg)?;
    let path = required(&cfg.matrix, "matrix", cfg.command)?;
    let t = load::<MatrixSpec>(path)?
        .to_op()
        .map_err(|e| InputError::new(Some(path), e.to_string()))?;

    Ok(match func_calc_series(&f, &t, cfg.tol, cfg.max_terms) {
        Ok((result, convergence)) => {
            let body = ApplyBody {
                function: f.name(),
                result: MatrixSpec::from_op(&result),
                convergence,
                error: None,
            };
            finished(cfg.command, true, body, None)
        }
        Err(OperatorError::Budget { partial, report }) => {
            let message = OperatorError::Budget {
                partial: partial.clone(),
                report,
            }
            .to_string();
            let body = ApplyBody {
                function: f.name(),
                result: MatrixSpec::from_op(&partial),
                convergence: report,
                error: Some(message.clone()),
            };
            finished(cfg.command, false, body, Some(message))
        }
        Err(e) => {
            #[derive(Serialize)]
            struct Failed<'a> {
                function: &'a str,
                error: String,
            }
            let message = e.to_string();
            let body = Failed {
                function: f.name(),
                error: message.clone(),
            };
            finished(cfg.command, false, body, Some(message))
        }
    })
}

/// The complex and the grading it was read in.
fn load_complex(cfg: &RunConfig) -> Result<(holocalc::complex::ChainComplex, Grading), InputError> {
    let path = required(&cfg.complex, "complex", cfg.command)?;
    let spec: ComplexSpec = load(path)?;
    let grading = cfg.grading.unwrap_or(spec.grading);
    let complex = spec
        .to_complex(grading)
        .map_err(|e| InputError::new(Some(path), e.to_string()))?;
    Ok((complex, grading))
}

/// Degree label in the grading of the input.
fn present(degree: i64, grading: Grading) -> i64 {
    match grading {
        Grading::Homological => degree,
        Grading::Cohomological => -degree,
    }
}

fn present_diagnostics(mut d: Diagnostics, grading: Grading) -> Diagnostics {
    for r in d.d_squared.iter_mut().chain(d.chain_map.iter_mut()) {
        r.degree = present(r.degree, grading);
    }
    d
}

#[derive(Serialize)]
struct DegreeBody {
    degree: i64,
    dim: usize,
    betti: usize,
    rank_out: usize,
    rank_in: usize,
    rank_ambiguous: bool,
    representatives: DenseSpec,
}

#[derive(Serialize)]
struct HomologyBody {
    grading: Grading,
    betti: Vec<usize>,
    degrees: Vec<DegreeBody>,
    rank_ambiguous: bool,
    diagnostics: Diagnostics,
}

fn homology(cfg: &RunConfig) -> Result<Outcome, InputError> {
    let (complex, grading) = load_complex(cfg)?;
    let diagnostics = validate(&complex, None).map_err(|e| InputError::new(None, e.to_string()))?;
    let basis = homology_basis(&complex, cfg.rank_tol);
    let mut degrees: Vec<DegreeBody> = basis
        .degrees
        .iter()
        .map(|d| DegreeBody {
            degree: present(d.degree, grading),
            dim: d.dim,
            betti: d.betti,
            rank_out: d.rank_out,
            rank_in: d.rank_in,
            rank_ambiguous: d.rank_ambiguous,
            representatives: DenseSpec::from_matrix(&d.representatives),
        })
        .collect();
    degrees.sort_by_key(|d| d.degree);
    let pass = diagnostics.pass;
    let message = (!pass).then(|| "differentials do not square to zero".to_string());
    let body = HomologyBody {
        grading,
        betti: degrees.iter().map(|d| d.betti).collect(),
        degrees,
        rank_ambiguous: basis.rank_ambiguous(),
        diagnostics: present_diagnostics(diagnostics, grading),
    };
    Ok(finished(cfg.command, pass, body, message))
}

#[derive(Serialize)]
struct VerifyBody {
    grading: Grading,
    tol: f64,
    #[serde(flatten)]
    report: CompatReport,
}

fn verify(cfg: &RunConfig) -> Result<Outcome, InputError> {
    let f = load_function(cfg)?;
    let (complex, grading) = load_complex(cfg)?;
    let path = required(&cfg.endo, "endo", cfg.command)?;
    let endo = load::<EndoSpec>(path)?
        .to_endo(&complex, grading)
        .map_err(|e| InputError::new(Some(path), e.to_string()))?;

    let opts = VerifyOptions {
        rank_tol: cfg.rank_tol,
        max_terms: cfg.max_terms,
        ..VerifyOptions::new(cfg.tol)
    };
    let mut report = verify_homology_compat(&complex, &endo, &f, &opts);
    for d in &mut report.degrees {
        d.degree = present(d.degree, grading);
    }
    report.degrees.sort_by_key(|d| d.degree);
    report.validation = report.validation.map(|v| present_diagnostics(v, grading));
    let pass = report.pass;
    let message = (!pass).then(|| {
        if report.errors.is_empty() {
            format!("homology compatibility failed (max delta {:e})", report.max_delta)
        } else {
            report.errors.join("; ")
        }
    });
    Ok(finished(
        cfg.command,
        pass,
        VerifyBody {
            grading,
            tol: cfg.tol,
            report,
        },
        message,
    ))
}

#[derive(Serialize)]
struct MeasureBody<'a> {
    function: &'a str,
    p: f64,
    depth: usize,
    c0: f64,
    level_norms: Vec<f64>,
    coherent: bool,
    within_bound: bool,
    witness: Option<Witness>,
}

fn measure(cfg: &RunConfig) -> Result<Outcome, InputError> {
    let f = load_function(cfg)?;
    match mu_f(&f, cfg.p, cfg.depth) {
        Ok(mu) => {
            let coherent = mu.is_coherent();
            let within_bound = mu.within_bound(1e-9);
            let body = MeasureBody {
                function: f.name(),
                p: mu.p(),
                depth: mu.depth(),
                c0: mu.bound_c(),
                level_norms: mu.level_norms(),
                coherent,
                within_bound,
                witness: mu.witness(),
            };
            Ok(finished(cfg.command, coherent && within_bound, body, None))
        }
        Err(e @ (MeasureError::InvalidExponent(_) | MeasureError::NonFinite)) => {
            Err(InputError::new(cfg.function.as_deref(), e.to_string()))
        }
        Err(e) => {
            #[derive(Serialize)]
            struct Failed<'a> {
                function: &'a str,
                p: f64,
                depth: usize,
                error: String,
            }
            let message = e.to_string();
            let body = Failed {
                function: f.name(),
                p: cfg.p,
                depth: cfg.depth,
                error: message.clone(),
            };
            Ok(finished(cfg.command, false, body, Some(message)))
        }
    }
}

#[derive(Serialize)]
struct DiagnoseBody<'a> {
    function: &'a str,
    n_max: usize,
    ratio: RatioReport,
    root_estimate: f64,
}

fn diagnose(cfg: &RunConfig) -> Result<Outcome, InputError> {
    let f = load_function(cfg)?;
    let ratio = ratio_test(&f, cfg.max_terms);
    let pass = ratio.verdict != Verdict::Fails;
    let message = (!pass).then(|| "ratio test fails: the series is not entire".to_string());
    let body = DiagnoseBody {
        function: f.name(),
        n_max: cfg.max_terms,
        root_estimate: root_test(&f, cfg.max_terms),
        ratio,
    };
    Ok(finished(cfg.command, pass, body, message))
}

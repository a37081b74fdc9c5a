//! `holocalc`: evaluate entire functions on matrices and chain complexes,
//! check homology compatibility, and inspect the encoding measures.
//!
//! Exit status: 0 on pass, 1 on verification or convergence failure, 2 on
//! input errors. Every run writes one JSON report with `"schema": 1`.

mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use holocalc::io::Grading;

#[derive(Debug, Parser)]
#[command(name = "holocalc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Function file: {"builtin": ...}, {"coeffs": ...} or {"recurrence": ...}.
    #[arg(long, global = true)]
    function: Option<PathBuf>,
    /// Square matrix file: {"dim": n, "entries": [[re, im], ...]}.
    #[arg(long, global = true)]
    matrix: Option<PathBuf>,
    /// Chain complex file.
    #[arg(long, global = true)]
    complex: Option<PathBuf>,
    /// Chain endomorphism file: {"maps": [...]}.
    #[arg(long, global = true)]
    endo: Option<PathBuf>,
    /// Tolerance: series tail bound for `apply`, pass threshold for `verify`.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Exponent of the ℓᵖ bound, in (0, 1].
    #[arg(long, global = true, default_value_t = 1.0)]
    p: f64,
    /// Deepest tower level for `measure`.
    #[arg(long, global = true, default_value_t = 64)]
    depth: usize,
    /// Series term budget; also the number of coefficients `diagnose` inspects.
    #[arg(long, global = true, default_value_t = 500)]
    max_terms: usize,
    /// Relative singular value threshold for numerical rank.
    #[arg(long, global = true, default_value_t = 1e-9)]
    rank_tol: f64,
    /// Override the grading declared in the complex file.
    #[arg(long, global = true, value_enum)]
    grading: Option<GradingArg>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// f(T) for a matrix, with its convergence report.
    Apply,
    /// Betti numbers, harmonic representatives and structural diagnostics.
    Homology,
    /// Check H_i(f(T)) = f(H_i(T)) in every degree.
    Verify,
    /// The tower measure encoding f: c₀, level norms, coherence.
    Measure,
    /// Ratio and root tests on the coefficients.
    Diagnose,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GradingArg {
    Homological,
    Cohomological,
}

impl From<GradingArg> for Grading {
    fn from(g: GradingArg) -> Self {
        match g {
            GradingArg::Homological => Grading::Homological,
            GradingArg::Cohomological => Grading::Cohomological,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = run::RunConfig {
        command: match cli.command {
            Command::Apply => run::Kind::Apply,
            Command::Homology => run::Kind::Homology,
            Command::Verify => run::Kind::Verify,
            Command::Measure => run::Kind::Measure,
            Command::Diagnose => run::Kind::Diagnose,
        },
        function: cli.function,
        matrix: cli.matrix,
        complex: cli.complex,
        endo: cli.endo,
        tol: cli.tol,
        p: cli.p,
        depth: cli.depth,
        max_terms: cli.max_terms,
        rank_tol: cli.rank_tol,
        grading: cli.grading.map(Grading::from),
    };

    let outcome = run::run(&config);
    if let Some(message) = &outcome.message {
        eprintln!("holocalc: {message}");
    }
    let text = outcome.report + "\n";
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("holocalc: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(outcome.status.code())
}

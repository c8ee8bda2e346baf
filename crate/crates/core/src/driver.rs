//! Orchestration behind the command-line tool: solve a problem file or a
//! built-in, dump operator matrices, project an expression.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::basis::BasisConfig;
use crate::expr::Expr;
use crate::operators::{build_j, build_l, build_p};
use crate::problem::{builtin_source, ProblemFile};
use crate::projection::{project_function, CoeffVector};
use crate::quadrature::{GaussLegendre, DEFAULT_QUAD_NODES};
use crate::solution::SolutionTable;
use crate::system::{Discretization, SolveReport};
use crate::{Error, Result};

/// Environment variable overriding the per-block quadrature node count.
pub const QUAD_NODES_ENV: &str = "HF_QUAD_NODES";

/// Node count from [`QUAD_NODES_ENV`], or [`DEFAULT_QUAD_NODES`] when unset.
pub fn quad_nodes_from_env() -> Result<usize> {
    match std::env::var(QUAD_NODES_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::InvalidProblem(format!(
                "{QUAD_NODES_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(DEFAULT_QUAD_NODES),
    }
}

/// Outcome of one solve: the inputs actually used plus the results.
#[derive(Debug, Clone)]
pub struct SolveRun {
    pub file: ProblemFile,
    pub report: SolveReport,
    pub table: SolutionTable,
}

/// Resolves `source` as a built-in name first, then as a path.
pub fn load_problem(source: &str) -> Result<ProblemFile> {
    match builtin_source(source) {
        Some(text) => ProblemFile::parse(text),
        None => ProblemFile::load(source),
    }
}

/// Builds operators, projects the data, runs Newton and samples `y(t)`.
/// Non-convergence is reported through `report.converged`, not as an error.
pub fn run_solve(
    file: ProblemFile,
    grid_points: Option<usize>,
    quad_nodes: usize,
) -> Result<SolveRun> {
    let quad = GaussLegendre::new(quad_nodes);
    let disc = Discretization::new(&file.problem, &file.cfg, &quad)?;
    let report = disc.newton_solve(&file.solver)?;
    let points = grid_points.unwrap_or(file.grid_points);
    let table = SolutionTable::sample(&report.y, points, file.exact.as_ref())?;
    Ok(SolveRun {
        file,
        report,
        table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    P,
    L,
    J,
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(Self::P),
            "L" | "l" => Ok(Self::L),
            "J" | "j" => Ok(Self::J),
            _ => Err(Error::InvalidProblem(format!(
                "unknown matrix {s:?} (expected P, L or J)"
            ))),
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::P => "P",
            Self::L => "L",
            Self::J => "J",
        })
    }
}

/// Tolerance for the `J Pᵀ = I` check performed before `J` is emitted.
const J_CHECK_TOL: f64 = 1e-10;

/// The requested operator matrix. `J` is verified against `Pᵀ` first.
pub fn operator_matrix(which: MatrixKind, cfg: &BasisConfig) -> Result<DMatrix<f64>> {
    match which {
        MatrixKind::P => Ok(build_p(cfg).into_matrix()),
        MatrixKind::L => Ok(build_l(cfg).into_matrix()),
        MatrixKind::J => {
            let j = build_j(cfg)?.into_matrix();
            let pt = build_p(cfg).into_matrix().transpose();
            let resid = &j * pt - DMatrix::identity(cfg.dim(), cfg.dim());
            let inf = resid
                .row_iter()
                .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max);
            if inf >= J_CHECK_TOL {
                return Err(Error::Singular { pivot: inf });
            }
            Ok(j)
        }
    }
}

/// Coefficients of a single-variable expression.
pub fn project_expr(src: &str, cfg: &BasisConfig, quad_nodes: usize) -> Result<CoeffVector> {
    let e = Expr::parse(src)?;
    if e.uses_s() {
        return Err(Error::InvalidProblem(
            "expression must depend on t only".into(),
        ));
    }
    project_function(
        |t| Ok(e.eval(t, None)?),
        cfg,
        &GaussLegendre::new(quad_nodes),
    )
}

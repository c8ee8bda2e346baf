use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hfide_core::driver::{
    load_problem, operator_matrix, project_expr, quad_nodes_from_env, run_solve, MatrixKind,
};
use hfide_core::matrix_io::{write_matrix_csv, write_values};
use hfide_core::BasisConfig;

/// Nonlinear Fredholm integro-differential equation solver on a hybrid
/// Legendre / block-pulse basis.
#[derive(Debug, Parser)]
#[command(name = "hfide", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem file or a built-in example (ex1, ex2, ex3).
    Solve {
        /// Path to a TOML problem file, or a built-in name.
        problem: String,
        /// Write the solution table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of sample points (overrides the file).
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        grid: Option<u64>,
    },
    /// Dump an operator matrix as CSV.
    Matrices {
        #[arg(long, value_parser = parse_kind)]
        which: MatrixKind,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project an expression in `t` onto the basis.
    Project {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_kind(s: &str) -> Result<MatrixKind, String> {
    s.parse().map_err(|_| "expected P, L or J".to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn solve(problem: &str, out: Option<&Path>, grid: Option<u64>) -> Result<bool> {
    let file = load_problem(problem).with_context(|| format!("cannot load problem {problem:?}"))?;
    let nodes = quad_nodes_from_env()?;
    let run = run_solve(file, grid.map(|g| g as usize), nodes)?;
    let rep = &run.report;

    match out {
        Some(path) => {
            let mut w = create(path)?;
            run.table.write_csv(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            run.table.write_csv(&mut w)?;
            w.flush()?;
        }
    }

    eprintln!(
        "r = {}, q = {}, iterations = {}, final residual = {:.3e}",
        run.file.cfg.r(),
        run.file.cfg.q(),
        rep.iterations,
        rep.final_residual
    );
    if let Some(err) = run.table.max_abs_error() {
        eprintln!("max abs error = {err:.3e}");
    }
    if !rep.converged {
        eprintln!(
            "warning: Newton did not reach tol = {:e} within {} iterations",
            run.file.solver.tol, run.file.solver.max_iter
        );
    }
    Ok(rep.converged)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { problem, out, grid } => solve(&problem, out.as_deref(), grid),
        Command::Matrices { which, r, q, out } => {
            let cfg = BasisConfig::new(r, q)?;
            let m = operator_matrix(which, &cfg)?;
            let mut w = create(&out)?;
            write_matrix_csv(&mut w, &m)?;
            w.flush()?;
            Ok(true)
        }
        Command::Project { expr, r, q, out } => {
            let cfg = BasisConfig::new(r, q)?;
            let v = project_expr(&expr, &cfg, quad_nodes_from_env()?)?;
            let mut w = create(&out)?;
            write_values(&mut w, v.as_slice())?;
            w.flush()?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

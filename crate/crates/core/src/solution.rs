//! Reconstruction of `y(t) = Yᵀ B(t)` and the sampled solution table.

use std::io::Write;

use crate::basis::basis_vector;
use crate::expr::Expr;
use crate::matrix_io::format_f64;
use crate::projection::CoeffVector;
use crate::Result;

/// Sampling stops here since the basis is undefined at `t = 1`.
pub const GRID_END: f64 = 1.0 - 1e-9;

/// `Yᵀ B(t)` for `t ∈ [0, 1)`.
pub fn reconstruct(y: &CoeffVector, t: f64) -> Result<f64> {
    Ok(basis_vector(t, y.cfg())?.dot(y.values()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionRow {
    pub t: f64,
    pub y_approx: f64,
    pub y_exact: Option<f64>,
    pub abs_error: Option<f64>,
}

/// Approximate (and optionally exact) solution on a uniform grid over
/// `[0, GRID_END]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTable {
    rows: Vec<SolutionRow>,
}

impl SolutionTable {
    /// `points ≥ 2` samples `t_i = i·GRID_END/(points − 1)`.
    pub fn sample(y: &CoeffVector, points: usize, exact: Option<&Expr>) -> Result<Self> {
        let points = points.max(2);
        let step = GRID_END / (points - 1) as f64;
        let rows = (0..points)
            .map(|i| {
                let t = if i + 1 == points {
                    GRID_END
                } else {
                    i as f64 * step
                };
                let y_approx = reconstruct(y, t)?;
                let y_exact = exact.map(|e| e.eval(t, None)).transpose()?;
                Ok(SolutionRow {
                    t,
                    y_approx,
                    y_exact,
                    abs_error: y_exact.map(|e| (y_approx - e).abs()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[SolutionRow] {
        &self.rows
    }

    pub fn has_exact(&self) -> bool {
        self.rows.first().is_some_and(|r| r.y_exact.is_some())
    }

    /// Largest `abs_error`, if an exact solution was supplied.
    pub fn max_abs_error(&self) -> Option<f64> {
        self.has_exact().then(|| {
            self.rows
                .iter()
                .filter_map(|r| r.abs_error)
                .fold(0.0, f64::max)
        })
    }

    /// `t,y_approx[,y_exact,abs_error]` with a header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if self.has_exact() {
            writeln!(w, "t,y_approx,y_exact,abs_error")?;
        } else {
            writeln!(w, "t,y_approx")?;
        }
        for row in &self.rows {
            write!(w, "{},{}", format_f64(row.t), format_f64(row.y_approx))?;
            if let (Some(e), Some(err)) = (row.y_exact, row.abs_error) {
                write!(w, ",{},{}", format_f64(e), format_f64(err))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

//! Plain-text numeric output: row-major CSV without header, 17 significant
//! digits, which round-trips every `f64` exactly.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::{Error, Result};

/// `v` in scientific notation with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_csv<W: Write>(mut w: W, m: &DMatrix<f64>) -> Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv<R: BufRead>(r: R) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|e| Error::Csv {
                    line: i + 1,
                    msg: format!("{cell:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Csv {
                    line: i + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

/// One value per line.
pub fn write_values<W: Write>(mut w: W, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(w, "{}", format_f64(*v))?;
    }
    Ok(())
}

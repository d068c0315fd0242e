//! Elementary projection steps: affine hyperplane projection for one
//! equation, its rhs-free linear part, the column analogue, and full
//! row/column sweeps. Sweeps apply index 0 first and the last index last.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};

/// Project x onto the hyperplane { z : <z, row> = rhs }.
pub fn project_hyperplane(row: &Vector, rhs: f64, x: &Vector) -> Result<Vector> {
    if row.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "project_hyperplane: row length {} vs point length {}",
            row.len(),
            x.len()
        )));
    }
    let norm_sq = row.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::ZeroRow(0));
    }
    let t = (x.dot(row) - rhs) / norm_sq;
    Ok(x.axpy(-t, row))
}

/// Linear part of the hyperplane projection: project x onto row^perp.
pub fn project_row_null(row: &Vector, x: &Vector) -> Result<Vector> {
    project_hyperplane(row, 0.0, x)
}

/// Column analogue used by the extended algorithms: project y onto col^perp.
pub fn project_column(col: &Vector, y: &Vector) -> Result<Vector> {
    if col.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "project_column: column length {} vs point length {}",
            col.len(),
            y.len()
        )));
    }
    let norm_sq = col.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::ZeroColumn(0));
    }
    let t = y.dot(col) / norm_sq;
    Ok(y.axpy(-t, col))
}

/// One full sweep of hyperplane projections, rows applied in order 0..m.
pub fn sweep_rows(a: &DenseMatrix, b: &Vector, x: &Vector) -> Result<Vector> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "sweep_rows: {} rows vs rhs length {}",
            a.rows(),
            b.len()
        )));
    }
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "sweep_rows: {} cols vs point length {}",
            a.cols(),
            x.len()
        )));
    }
    let mut cur = x.clone();
    for i in 0..a.rows() {
        let row = a.row(i);
        if row.norm_sq() == 0.0 {
            return Err(Error::ZeroRow(i));
        }
        cur = project_hyperplane(&row, b[i], &cur)?;
    }
    Ok(cur)
}

/// One full sweep of column projections, columns applied in order 0..n.
pub fn sweep_columns(a: &DenseMatrix, y: &Vector) -> Result<Vector> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "sweep_columns: {} rows vs point length {}",
            a.rows(),
            y.len()
        )));
    }
    let mut cur = y.clone();
    for j in 0..a.cols() {
        let col = a.col(j);
        if col.norm_sq() == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        cur = project_column(&col, &cur)?;
    }
    Ok(cur)
}

//! One-sided Jacobi SVD. Rotations orthogonalize column pairs of a working
//! copy until every normalized off-diagonal product is below `JACOBI_TOL`;
//! the accumulated rotations form V and the normalized columns form U.

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Relative threshold under which a singular value counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Relative off-diagonal convergence threshold for the Jacobi sweeps.
const JACOBI_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// m x min(m, n), orthonormal columns.
    pub left_vectors: DenseMatrix,
    /// min(m, n) values, nonincreasing and nonnegative.
    pub singular_values: Vec<f64>,
    /// n x min(m, n), orthonormal columns.
    pub right_vectors: DenseMatrix,
    /// Number of singular values above `RANK_TOLERANCE * sigma_1`.
    pub numeric_rank: usize,
}

/// Deterministic SVD of a dense matrix: A = U diag(sigma) V^T.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::EmptyDimension);
    }
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.transpose())?;
        Ok(SvdResult {
            left_vectors: t.right_vectors,
            singular_values: t.singular_values,
            right_vectors: t.left_vectors,
            numeric_rank: t.numeric_rank,
        })
    }
}

fn svd_tall(a: &DenseMatrix) -> Result<SvdResult> {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);

    // Column-major working copy of A; w[j] is the j-th column.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.col(j).as_slice().to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..MAX_SWEEPS {
        let mut converged = true;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = w[p].iter().map(|x| x * x).sum();
                let beta: f64 = w[q].iter().map(|x| x * x).sum();
                let g: f64 = w[p].iter().zip(&w[q]).map(|(x, y)| x * y).sum();
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if g.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s, m);
                rotate(&mut v, p, q, c, s, n);
            }
        }
        if converged {
            break;
        }
    }

    let raw_norms: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    // Stable order: by norm descending, index ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw_norms[j].partial_cmp(&raw_norms[i]).unwrap().then(i.cmp(&j)));
    let w: Vec<Vec<f64>> = order.iter().map(|&j| w[j].clone()).collect();
    let v: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();
    let norms: Vec<f64> = order.iter().map(|&j| raw_norms[j]).collect();

    // Normalize the left vectors; complete zero columns to an orthonormal set.
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        if norms[j] > 0.0 {
            u.push(w[j].iter().map(|x| x / norms[j]).collect());
        } else {
            u.push(complete_orthonormal(&u, m));
        }
    }

    let sigma1 = norms.first().copied().unwrap_or(0.0);
    let numeric_rank = norms.iter().filter(|&&s| s > RANK_TOLERANCE * sigma1).count();
    let numeric_rank = if sigma1 == 0.0 { 0 } else { numeric_rank };

    Ok(SvdResult {
        left_vectors: cols_to_matrix(&u, m, n)?,
        singular_values: norms,
        right_vectors: cols_to_matrix(&v, n, n)?,
        numeric_rank,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64, len: usize) {
    for i in 0..len {
        let xp = cols[p][i];
        let xq = cols[q][i];
        cols[p][i] = c * xp - s * xq;
        cols[q][i] = s * xp + c * xq;
    }
}

/// Deterministic Gram-Schmidt completion: orthogonalize the standard basis
/// vector with the largest residual against the existing columns.
fn complete_orthonormal(existing: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..m {
        let mut cand = vec![0.0; m];
        cand[e] = 1.0;
        for col in existing {
            let norm_sq: f64 = col.iter().map(|x| x * x).sum();
            if norm_sq == 0.0 {
                continue;
            }
            let proj: f64 = col.iter().zip(&cand).map(|(a, b)| a * b).sum::<f64>() / norm_sq;
            for i in 0..m {
                cand[i] -= proj * col[i];
            }
        }
        let norm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
            best = Some((norm, cand));
        }
        if norm > 0.9 {
            break;
        }
    }
    let (norm, cand) = best.expect("m >= 1");
    cand.iter().map(|x| x / norm).collect()
}

fn cols_to_matrix(cols: &[Vec<f64>], rows: usize, ncols: usize) -> Result<DenseMatrix> {
    let mut m = DenseMatrix::zeros(rows, ncols)?;
    for (j, col) in cols.iter().enumerate() {
        for i in 0..rows {
            m.set(i, j, col[i]);
        }
    }
    Ok(m)
}

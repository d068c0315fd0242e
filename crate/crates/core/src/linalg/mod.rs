//! Dense real vectors and matrices, SVD, fundamental-subspace projectors
//! and the minimal-norm least-squares oracle.

mod svd;

pub use svd::{svd, SvdResult, RANK_TOLERANCE};

use crate::error::{Error, Result};

/// Dense real vector. Entries are validated finite on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyDimension);
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * c).collect())
    }

    /// self + c * other
    pub fn axpy(&self, c: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Dense real matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyDimension);
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vector]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDimension);
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged row lengths".into()));
        }
        let data = rows.iter().flat_map(|r| r.as_slice().iter().copied()).collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vector {
        Vector(self.data[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn col(&self, j: usize) -> Vector {
        Vector((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix {
            rows: self.cols,
            cols: self.rows,
            data: vec![0.0; self.data.len()],
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matvec(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec: {}x{} matrix with length-{} vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            out[i] = self.data[i * self.cols..(i + 1) * self.cols]
                .iter()
                .zip(x.as_slice())
                .map(|(a, b)| a * b)
                .sum();
        }
        Ok(Vector(out))
    }

    pub fn matvec_transpose(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "matvec_transpose: {}x{} matrix with length-{} vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for j in 0..self.cols {
                out[j] += self.get(i, j) * xi;
            }
        }
        Ok(Vector(out))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix {
            rows: self.rows,
            cols: other.cols,
            data: vec![0.0; self.rows * other.cols],
        };
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * out.cols + j] += aik * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Rank-one outer product v * v^T scaled by c.
    pub fn outer_scaled(v: &Vector, c: f64) -> DenseMatrix {
        let n = v.len();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(c * v[i] * v[j]);
            }
        }
        DenseMatrix {
            rows: n,
            cols: n,
            data,
        }
    }
}

/// The largest singular value sigma_1 of A.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(svd(a)?.singular_values[0])
}

/// Square root of the sum of squared entries.
pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.frobenius_norm()
}

/// The four fundamental subspaces of a matrix A.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    /// N(A), a subspace of R^n.
    Null,
    /// R(A^T), a subspace of R^n.
    RowSpace,
    /// N(A^T), a subspace of R^m.
    LeftNull,
    /// R(A), a subspace of R^m.
    ColumnSpace,
}

/// Orthogonal projector onto the requested fundamental subspace, built from
/// the SVD basis truncated at the numeric rank.
pub fn subspace_projector(a: &DenseMatrix, which: Subspace) -> Result<DenseMatrix> {
    let dec = svd(a)?;
    let r = dec.numeric_rank;
    match which {
        Subspace::RowSpace => basis_projector(&dec.right_vectors, r),
        Subspace::Null => {
            let p = basis_projector(&dec.right_vectors, r)?;
            DenseMatrix::identity(a.cols())?.sub(&p)
        }
        Subspace::ColumnSpace => basis_projector(&dec.left_vectors, r),
        Subspace::LeftNull => {
            let p = basis_projector(&dec.left_vectors, r)?;
            DenseMatrix::identity(a.rows())?.sub(&p)
        }
    }
}

/// U_r U_r^T for the first r columns of U.
fn basis_projector(u: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    let n = u.rows();
    let mut p = DenseMatrix::zeros(n, n)?;
    for k in 0..r {
        let uk = u.col(k);
        for i in 0..n {
            for j in 0..n {
                let v = p.get(i, j) + uk[i] * uk[j];
                p.set(i, j, v);
            }
        }
    }
    Ok(p)
}

/// Minimal-norm least-squares solution x_LS = A^+ b via the SVD, with
/// singular values below `RANK_TOLERANCE * sigma_1` treated as zero.
pub fn min_norm_solution(a: &DenseMatrix, b: &Vector) -> Result<Vector> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "min_norm_solution: {}x{} matrix with length-{} rhs",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let dec = svd(a)?;
    let mut x = Vector::zeros(a.cols())?;
    for k in 0..dec.numeric_rank {
        let coeff = dec.left_vectors.col(k).dot(b) / dec.singular_values[k];
        x = x.axpy(coeff, &dec.right_vectors.col(k));
    }
    Ok(x)
}

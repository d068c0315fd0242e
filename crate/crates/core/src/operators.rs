//! Explicit iteration matrices for projection sweeps. For a row-index
//! window gamma, one sweep of hyperplane projections equals
//! `x -> Q x + R b_gamma` where Q is the composed row-null projections
//! (first window entry applied first) and R maps the selected right-hand
//! side entries. `Qtilde = Q P_R(A_gamma^T)` is the contraction whose
//! spectral norm drives the convergence rates.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, subspace_projector, DenseMatrix, Subspace, Vector};

#[derive(Debug, Clone)]
pub struct IterationOperators {
    /// Linear part of the sweep (n x n for rows, m x m for columns).
    pub q: DenseMatrix,
    /// Right-hand-side map (n x Gamma); absent for the column sweep, whose
    /// underlying system is homogeneous.
    pub r: Option<DenseMatrix>,
    /// Restriction of `q` to the relevant row/column space.
    pub qtilde: DenseMatrix,
    /// The index window the operators were built for.
    pub gamma: Vec<usize>,
    /// Spectral norm of `qtilde`.
    pub norm_qtilde: f64,
    /// Whether `gamma` covers the full index set (required for the
    /// `norm_qtilde < 1` guarantee).
    pub covers: bool,
}

/// Build Q, R, Qtilde for the row window `gamma` (0-based indices).
pub fn build_row_operators(a: &DenseMatrix, gamma: &[usize]) -> Result<IterationOperators> {
    if gamma.is_empty() {
        return Err(Error::InvalidInput("empty index window".into()));
    }
    let (m, n) = (a.rows(), a.cols());
    for &i in gamma {
        if i >= m {
            return Err(Error::InvalidInput(format!("row index {} out of range", i)));
        }
        if a.row(i).norm_sq() == 0.0 {
            return Err(Error::ZeroRow(i));
        }
    }
    let width = gamma.len();

    // Q = P_{i_G} ... P_{i_1}, first window entry applied first.
    let mut q = DenseMatrix::identity(n)?;
    for &i in gamma {
        q = row_null_projector(a, i)?.matmul(&q)?;
    }

    // Column t of R: A_{i_t} / ||A_{i_t}||^2 pushed through the projections
    // of every later window entry.
    let mut r = DenseMatrix::zeros(n, width)?;
    for t in 0..width {
        let row = a.row(gamma[t]);
        let mut v = row.scale(1.0 / row.norm_sq());
        for &i in &gamma[t + 1..] {
            v = crate::projections::project_row_null(&a.row(i), &v)?;
        }
        for k in 0..n {
            r.set(k, t, v[k]);
        }
    }

    let a_gamma = submatrix_rows(a, gamma)?;
    let p_row = subspace_projector(&a_gamma, Subspace::RowSpace)?;
    let qtilde = q.matmul(&p_row)?;
    let norm_qtilde = spectral_norm(&qtilde)?;
    let covers = covers_all(gamma, m);

    Ok(IterationOperators {
        q,
        r: Some(r),
        qtilde,
        gamma: gamma.to_vec(),
        norm_qtilde,
        covers,
    })
}

/// Build Phi and Phitilde for the full column sweep of A.
pub fn build_column_operators(a: &DenseMatrix) -> Result<IterationOperators> {
    let (m, n) = (a.rows(), a.cols());
    let mut phi = DenseMatrix::identity(m)?;
    for j in 0..n {
        let c = a.col(j);
        if c.norm_sq() == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        let p = DenseMatrix::identity(m)?
            .sub(&DenseMatrix::outer_scaled(&c, 1.0 / c.norm_sq()))?;
        phi = p.matmul(&phi)?;
    }
    let p_range = subspace_projector(a, Subspace::ColumnSpace)?;
    let phitilde = phi.matmul(&p_range)?;
    let norm = spectral_norm(&phitilde)?;
    Ok(IterationOperators {
        q: phi,
        r: None,
        qtilde: phitilde,
        gamma: (0..n).collect(),
        norm_qtilde: norm,
        covers: true,
    })
}

/// Max of ||Qtilde||_2 over the complete windows realized in `history`.
/// Every window must cover the full row set.
pub fn realized_window_contraction(
    a: &DenseMatrix,
    history: &[usize],
    window: usize,
) -> Result<f64> {
    let m = a.rows();
    if window < m {
        return Err(Error::InvalidWindow(format!(
            "window {} cannot cover {} rows",
            window, m
        )));
    }
    if history.len() < window {
        return Err(Error::Contract("history shorter than one window".into()));
    }
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut worst = 0.0_f64;
    for chunk in history.chunks_exact(window) {
        if !covers_all(chunk, m) {
            return Err(Error::Contract(format!(
                "window {:?} does not cover all {} rows",
                chunk, m
            )));
        }
        let key = chunk.to_vec();
        let norm = match cache.get(&key) {
            Some(&v) => v,
            None => {
                let v = build_row_operators(a, chunk)?.norm_qtilde;
                cache.insert(key, v);
                v
            }
        };
        worst = worst.max(norm);
    }
    Ok(worst)
}

fn covers_all(gamma: &[usize], m: usize) -> bool {
    let mut seen = vec![false; m];
    for &i in gamma {
        if i < m {
            seen[i] = true;
        }
    }
    seen.into_iter().all(|s| s)
}

fn row_null_projector(a: &DenseMatrix, i: usize) -> Result<DenseMatrix> {
    let row = a.row(i);
    DenseMatrix::identity(a.cols())?.sub(&DenseMatrix::outer_scaled(&row, 1.0 / row.norm_sq()))
}

fn submatrix_rows(a: &DenseMatrix, gamma: &[usize]) -> Result<DenseMatrix> {
    let rows: Vec<Vector> = gamma.iter().map(|&i| a.row(i)).collect();
    DenseMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::{ControlKind, ControlState};
    use crate::projections::{sweep_columns, sweep_rows};
    use crate::rng::SplitMix64;

    fn random_matrix(seed: u64, m: usize, n: usize) -> DenseMatrix {
        let mut rng = SplitMix64::new(seed);
        DenseMatrix::new(m, n, (0..m * n).map(|_| rng.next_gaussian()).collect()).unwrap()
    }

    fn random_vector(rng: &mut SplitMix64, n: usize) -> Vector {
        Vector::new((0..n).map(|_| rng.next_gaussian()).collect()).unwrap()
    }

    #[test]
    fn identity_rows_annihilate() {
        let a = DenseMatrix::identity(2).unwrap();
        let ops = build_row_operators(&a, &[0, 1]).unwrap();
        assert!(spectral_norm(&ops.q).unwrap() < 1e-12);
        let r = ops.r.as_ref().unwrap();
        let diff = r.sub(&DenseMatrix::identity(2).unwrap()).unwrap();
        assert!(spectral_norm(&diff).unwrap() < 1e-12);
        assert!(ops.norm_qtilde < 1e-12);
    }

    #[test]
    fn q_plus_ra_is_identity() {
        let a = random_matrix(3, 3, 2);
        let ops = build_row_operators(&a, &[0, 1, 2]).unwrap();
        let r = ops.r.as_ref().unwrap();
        let ra = r.matmul(&a).unwrap();
        let sum = ops.q.add(&ra).unwrap();
        let err = sum.sub(&DenseMatrix::identity(2).unwrap()).unwrap();
        assert!(spectral_norm(&err).unwrap() < 1e-10);
    }

    #[test]
    fn sweep_matches_operator_form() {
        let mut rng = SplitMix64::new(17);
        let a = random_matrix(17, 3, 2);
        let xsol = random_vector(&mut rng, 2);
        let b = a.matvec(&xsol).unwrap();
        let ops = build_row_operators(&a, &[0, 1, 2]).unwrap();
        let r = ops.r.as_ref().unwrap();
        for _ in 0..50 {
            let x = random_vector(&mut rng, 2);
            let by_sweep = sweep_rows(&a, &b, &x).unwrap();
            let by_ops = ops.q.matvec(&x).unwrap().add(&r.matvec(&b).unwrap());
            assert!(by_sweep.sub(&by_ops).norm() < 1e-10 * x.norm().max(1.0));
        }
    }

    #[test]
    fn operator_invariants_on_general_windows() {
        let mut rng = SplitMix64::new(23);
        for trial in 0..10 {
            let m = 3 + (trial % 4);
            let n = 2 + (trial % 3);
            let a = random_matrix(100 + trial as u64, m, n);
            // window covering all rows plus repeats
            let mut gamma: Vec<usize> = (0..m).collect();
            gamma.push(rng.next_below(m));
            gamma.push(rng.next_below(m));
            rng.shuffle(&mut gamma);
            let ops = build_row_operators(&a, &gamma).unwrap();
            assert!(ops.covers);
            assert!(ops.norm_qtilde < 1.0, "norm {}", ops.norm_qtilde);

            let pn = subspace_projector(&a, Subspace::Null).unwrap();
            let decomp = ops.q.sub(&pn).unwrap().sub(&ops.qtilde).unwrap();
            assert!(spectral_norm(&decomp).unwrap() < 1e-10);

            // Qtilde annihilates the null space
            let qn = ops.qtilde.matmul(&pn).unwrap();
            assert!(spectral_norm(&qn).unwrap() < 1e-10);

            // fixed point of the affine map at any solution
            let xsol = random_vector(&mut rng, n);
            let b = a.matvec(&xsol).unwrap();
            let b_gamma =
                Vector::new(gamma.iter().map(|&i| b[i]).collect::<Vec<_>>()).unwrap();
            let r = ops.r.as_ref().unwrap();
            let fx = ops.q.matvec(&xsol).unwrap().add(&r.matvec(&b_gamma).unwrap());
            assert!(fx.sub(&xsol).norm() < 1e-10 * xsol.norm().max(1.0));
        }
    }

    #[test]
    fn column_operators_identity() {
        let a = DenseMatrix::identity(3).unwrap();
        let ops = build_column_operators(&a).unwrap();
        assert!(spectral_norm(&ops.q).unwrap() < 1e-12);
    }

    #[test]
    fn column_operator_decomposition() {
        let a = random_matrix(41, 4, 2);
        let ops = build_column_operators(&a).unwrap();
        let pln = subspace_projector(&a, Subspace::LeftNull).unwrap();
        let diff = ops.q.sub(&pln).unwrap().sub(&ops.qtilde).unwrap();
        assert!(spectral_norm(&diff).unwrap() < 1e-10);
        assert!(ops.norm_qtilde < 1.0);
    }

    #[test]
    fn column_sweep_matches_operator() {
        let mut rng = SplitMix64::new(55);
        let a = random_matrix(55, 4, 3);
        let ops = build_column_operators(&a).unwrap();
        for _ in 0..50 {
            let y = random_vector(&mut rng, 4);
            let by_sweep = sweep_columns(&a, &y).unwrap();
            let by_ops = ops.q.matvec(&y).unwrap();
            assert!(by_sweep.sub(&by_ops).norm() < 1e-10 * y.norm().max(1.0));
        }
    }

    #[test]
    fn realized_contraction_cyclic_single_window() {
        let a = random_matrix(61, 3, 2);
        let history = vec![0, 1, 2, 0, 1, 2, 0, 1, 2];
        let delta = realized_window_contraction(&a, &history, 3).unwrap();
        let full = build_row_operators(&a, &[0, 1, 2]).unwrap().norm_qtilde;
        assert!((delta - full).abs() < 1e-12);
        assert!(delta < 1.0);
    }

    #[test]
    fn realized_contraction_two_permutations() {
        let a = random_matrix(62, 3, 3);
        let history = vec![0, 1, 2, 2, 1, 0];
        let delta = realized_window_contraction(&a, &history, 3).unwrap();
        let n1 = build_row_operators(&a, &[0, 1, 2]).unwrap().norm_qtilde;
        let n2 = build_row_operators(&a, &[2, 1, 0]).unwrap().norm_qtilde;
        assert!((delta - n1.max(n2)).abs() < 1e-12);
    }

    #[test]
    fn realized_contraction_rejects_non_covering_window() {
        let a = random_matrix(63, 3, 2);
        assert!(realized_window_contraction(&a, &[0, 1, 1], 3).is_err());
        assert!(realized_window_contraction(&a, &[0, 1, 2], 2).is_err());
    }

    #[test]
    fn per_window_contraction_holds_on_ack_trace() {
        let mut rng = SplitMix64::new(64);
        let a = random_matrix(64, 4, 3);
        let xsol = random_vector(&mut rng, 3);
        let b = a.matvec(&xsol).unwrap();
        let window = 6;
        let mut control =
            ControlState::new(ControlKind::AlmostCyclic { window, seed: 2 }, 4).unwrap();
        let mut x = random_vector(&mut rng, 3);
        // project x* to the solution with x's null component
        let pn = subspace_projector(&a, Subspace::Null).unwrap();
        let xstar = xsol
            .sub(&pn.matvec(&xsol).unwrap())
            .add(&pn.matvec(&x).unwrap());
        let mut iterates = vec![x.clone()];
        for _ in 0..10 * window {
            let i = control.next_row_index(&a, None).unwrap();
            x = crate::projections::project_hyperplane(&a.row(i), b[i], &x).unwrap();
            iterates.push(x.clone());
        }
        let delta = realized_window_contraction(&a, control.history(), window).unwrap();
        assert!(delta < 1.0);
        for q in 0..10 {
            let before = iterates[q * window].sub(&xstar).norm();
            let after = iterates[(q + 1) * window].sub(&xstar).norm();
            assert!(after <= delta * before + 1e-10);
        }
    }

    #[test]
    fn empty_window_rejected() {
        let a = random_matrix(65, 2, 2);
        assert!(build_row_operators(&a, &[]).is_err());
    }
}

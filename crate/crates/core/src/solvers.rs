//! The four solver families: full-sweep Kaczmarz (KT), single-projection
//! Kaczmarz under any control, the extended full-sweep variant (EKT) and
//! the extended single-projection variant for inconsistent least squares.

use crate::controls::{ControlKind, ControlState};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};
use crate::projections::{project_column, project_hyperplane, sweep_columns, sweep_rows};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub row_control: ControlKind,
    /// Only used by the extended single-projection solver.
    pub column_control: Option<ControlKind>,
    /// When false only the initial and final iterates are kept.
    pub record_trace: bool,
    /// Stop when ||x_{k+1} - x_k|| falls below this; 0 disables.
    pub stop_tolerance: f64,
}

impl SolverConfig {
    pub fn new(max_iterations: usize, row_control: ControlKind) -> Result<Self> {
        if max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        Ok(Self {
            max_iterations,
            row_control,
            column_control: None,
            record_trace: true,
            stop_tolerance: 0.0,
        })
    }

    pub fn with_column_control(mut self, kind: ControlKind) -> Self {
        self.column_control = Some(kind);
        self
    }

    pub fn with_stop_tolerance(mut self, tol: f64) -> Self {
        self.stop_tolerance = tol;
        self
    }
}

/// Per-iteration record of a solver run. `xs[0]` is the initial iterate.
#[derive(Debug, Clone)]
pub struct IterateTrace {
    pub xs: Vec<Vector>,
    /// Extended solvers only; `ys[0]` is the perturbed right-hand side.
    pub ys: Option<Vec<Vector>>,
    /// Extended solvers only; entry k is `bhat - y^k`.
    pub corrected_rhs: Option<Vec<Vector>>,
    pub row_indices: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub iterations: usize,
}

impl IterateTrace {
    fn new(x0: Vector) -> Self {
        Self {
            xs: vec![x0],
            ys: None,
            corrected_rhs: None,
            row_indices: Vec::new(),
            col_indices: Vec::new(),
            iterations: 0,
        }
    }

    pub fn final_x(&self) -> &Vector {
        self.xs.last().expect("trace holds at least x0")
    }

    fn push_x(&mut self, x: Vector, record: bool) {
        if record || self.xs.len() == 1 {
            self.xs.push(x);
        } else {
            *self.xs.last_mut().expect("nonempty") = x;
        }
    }
}

fn check_dims(a: &DenseMatrix, b: &Vector, x0: &Vector) -> Result<()> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs {} rows",
            b.len(),
            a.rows()
        )));
    }
    if x0.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "x0 length {} vs {} cols",
            x0.len(),
            a.cols()
        )));
    }
    Ok(())
}

/// Full-sweep Kaczmarz iteration for a consistent system.
pub fn solve_kt(
    a: &DenseMatrix,
    b: &Vector,
    x0: &Vector,
    config: &SolverConfig,
) -> Result<IterateTrace> {
    check_dims(a, b, x0)?;
    let mut trace = IterateTrace::new(x0.clone());
    let mut x = x0.clone();
    for _ in 0..config.max_iterations {
        let next = sweep_rows(a, b, &x)?;
        let step = next.sub(&x).norm();
        x = next;
        trace.push_x(x.clone(), config.record_trace);
        trace.iterations += 1;
        if config.stop_tolerance > 0.0 && step <= config.stop_tolerance {
            break;
        }
    }
    Ok(trace)
}

/// Single-projection Kaczmarz under the configured row control.
pub fn solve_kaczmarz(
    a: &DenseMatrix,
    b: &Vector,
    x0: &Vector,
    config: &SolverConfig,
) -> Result<IterateTrace> {
    check_dims(a, b, x0)?;
    for i in 0..a.rows() {
        if a.row(i).norm_sq() == 0.0 {
            return Err(Error::ZeroRow(i));
        }
    }
    let mut control = ControlState::new(config.row_control, a.rows())?;
    let mut trace = IterateTrace::new(x0.clone());
    let mut x = x0.clone();
    for _ in 0..config.max_iterations {
        let residual = match config.row_control {
            ControlKind::MaximalResidual => Some(a.matvec(&x)?.sub(b)),
            _ => None,
        };
        let i = control.next_row_index(a, residual.as_ref())?;
        let next = project_hyperplane(&a.row(i), b[i], &x)?;
        let step = next.sub(&x).norm();
        x = next;
        trace.row_indices.push(i);
        trace.push_x(x.clone(), config.record_trace);
        trace.iterations += 1;
        if config.stop_tolerance > 0.0 && step <= config.stop_tolerance {
            break;
        }
    }
    Ok(trace)
}

/// Extended full-sweep iteration for inconsistent least squares:
/// a column sweep drives y toward the inconsistent component of bhat,
/// then a row sweep runs against the corrected right-hand side.
pub fn solve_ekt(
    a: &DenseMatrix,
    bhat: &Vector,
    x0: &Vector,
    config: &SolverConfig,
) -> Result<IterateTrace> {
    check_dims(a, bhat, x0)?;
    let mut trace = IterateTrace::new(x0.clone());
    let mut ys = vec![bhat.clone()];
    let mut bs = vec![bhat.sub(bhat)];
    let mut x = x0.clone();
    let mut y = bhat.clone();
    for _ in 0..config.max_iterations {
        y = sweep_columns(a, &y)?;
        let bk = bhat.sub(&y);
        let next = sweep_rows(a, &bk, &x)?;
        let step = next.sub(&x).norm();
        x = next;
        if config.record_trace {
            ys.push(y.clone());
            bs.push(bk.clone());
        }
        trace.push_x(x.clone(), config.record_trace);
        trace.iterations += 1;
        if config.stop_tolerance > 0.0 && step <= config.stop_tolerance {
            break;
        }
    }
    trace.ys = Some(ys);
    trace.corrected_rhs = Some(bs);
    Ok(trace)
}

/// Extended single-projection Kaczmarz: one column projection on y, right-
/// hand-side correction, then one row projection on x, per step. The y
/// update divides by the squared column norm so it is a true orthogonal
/// projection.
pub fn solve_extended_kaczmarz(
    a: &DenseMatrix,
    bhat: &Vector,
    x0: &Vector,
    config: &SolverConfig,
) -> Result<IterateTrace> {
    check_dims(a, bhat, x0)?;
    for i in 0..a.rows() {
        if a.row(i).norm_sq() == 0.0 {
            return Err(Error::ZeroRow(i));
        }
    }
    for j in 0..a.cols() {
        if a.col(j).norm_sq() == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
    }
    let col_kind = config
        .column_control
        .ok_or_else(|| Error::Contract("extended solver needs a column control".into()))?;
    let mut row_control = ControlState::new(config.row_control, a.rows())?;
    let mut col_control = ControlState::new(col_kind, a.cols())?;

    let mut trace = IterateTrace::new(x0.clone());
    let mut ys = vec![bhat.clone()];
    let mut bs = vec![bhat.sub(bhat)];
    let mut x = x0.clone();
    let mut y = bhat.clone();
    for _ in 0..config.max_iterations {
        let j = col_control.next_column_index(a, &y)?;
        y = project_column(&a.col(j), &y)?;
        let bk = bhat.sub(&y);
        let residual = match config.row_control {
            ControlKind::MaximalResidual => Some(a.matvec(&x)?.sub(&bk)),
            _ => None,
        };
        let i = row_control.next_row_index(a, residual.as_ref())?;
        let next = project_hyperplane(&a.row(i), bk[i], &x)?;
        let step = next.sub(&x).norm();
        x = next;
        trace.col_indices.push(j);
        trace.row_indices.push(i);
        if config.record_trace {
            ys.push(y.clone());
            bs.push(bk.clone());
        }
        trace.push_x(x.clone(), config.record_trace);
        trace.iterations += 1;
        if config.stop_tolerance > 0.0 && step <= config.stop_tolerance {
            break;
        }
    }
    trace.ys = Some(ys);
    trace.corrected_rhs = Some(bs);
    Ok(trace)
}

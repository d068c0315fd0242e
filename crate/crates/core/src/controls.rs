//! Index-selection strategies for rows and columns. Indices are 0-based:
//! the cyclic rule is `i_k = k mod m`. An almost-cyclic control emits
//! aligned windows of a fixed length, each covering every index at least
//! once; `verify_window_property` checks that coverage on a realized trace.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};
use crate::rng::SplitMix64;

/// Which selection rule a control state follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlKind {
    Cyclic,
    /// Aligned windows of `window` steps, each a shuffled cover of all
    /// indices. `window` must be at least the index-set size.
    AlmostCyclic { window: usize, seed: u64 },
    /// Greedy pick of the largest absolute residual entry, smallest index
    /// winning ties.
    MaximalResidual,
    /// Squared-norm weighted sampling via inverse CDF on a seeded stream.
    Random { seed: u64 },
}

/// Stateful index generator over `{0, .., count-1}`.
#[derive(Debug, Clone)]
pub struct ControlState {
    kind: ControlKind,
    count: usize,
    step: usize,
    rng: SplitMix64,
    window_buf: Vec<usize>,
    window_pos: usize,
    history: Vec<usize>,
}

impl ControlState {
    pub fn new(kind: ControlKind, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyDimension);
        }
        let seed = match kind {
            ControlKind::AlmostCyclic { window, seed } => {
                if window < count {
                    return Err(Error::InvalidWindow(format!(
                        "window {} shorter than index-set size {}",
                        window, count
                    )));
                }
                seed
            }
            ControlKind::Random { seed } => seed,
            _ => 0,
        };
        Ok(Self {
            kind,
            count,
            step: 0,
            rng: SplitMix64::new(seed),
            window_buf: Vec::new(),
            window_pos: 0,
            history: Vec::new(),
        })
    }

    pub fn kind(&self) -> ControlKind {
        self.kind
    }

    pub fn history(&self) -> &[usize] {
        &self.history
    }

    /// Select the next row index. `residual` carries <A_i, x> - b_i per row
    /// and is required for the maximal-residual rule.
    pub fn next_row_index(&mut self, a: &DenseMatrix, residual: Option<&Vector>) -> Result<usize> {
        if a.rows() != self.count {
            return Err(Error::Contract(format!(
                "control built for {} indices, matrix has {} rows",
                self.count,
                a.rows()
            )));
        }
        let scores = match self.kind {
            ControlKind::MaximalResidual => Some(
                residual
                    .ok_or_else(|| {
                        Error::Contract("maximal-residual control needs a residual".into())
                    })?
                    .as_slice()
                    .to_vec(),
            ),
            _ => None,
        };
        let weights = match self.kind {
            ControlKind::Random { .. } => {
                Some((0..a.rows()).map(|i| a.row(i).norm_sq()).collect::<Vec<_>>())
            }
            _ => None,
        };
        self.next_index(scores.as_deref(), weights.as_deref())
    }

    /// Select the next column index. For the maximal-residual rule the score
    /// of column j is <A^j, y>.
    pub fn next_column_index(&mut self, a: &DenseMatrix, y: &Vector) -> Result<usize> {
        if a.cols() != self.count {
            return Err(Error::Contract(format!(
                "control built for {} indices, matrix has {} columns",
                self.count,
                a.cols()
            )));
        }
        let scores = match self.kind {
            ControlKind::MaximalResidual => Some(a.matvec_transpose(y)?.as_slice().to_vec()),
            _ => None,
        };
        let weights = match self.kind {
            ControlKind::Random { .. } => {
                Some((0..a.cols()).map(|j| a.col(j).norm_sq()).collect::<Vec<_>>())
            }
            _ => None,
        };
        self.next_index(scores.as_deref(), weights.as_deref())
    }

    fn next_index(&mut self, scores: Option<&[f64]>, weights: Option<&[f64]>) -> Result<usize> {
        let idx = match self.kind {
            ControlKind::Cyclic => self.step % self.count,
            ControlKind::AlmostCyclic { window, .. } => {
                if self.window_pos == self.window_buf.len() {
                    self.fill_window(window);
                }
                let idx = self.window_buf[self.window_pos];
                self.window_pos += 1;
                idx
            }
            ControlKind::MaximalResidual => {
                let scores = scores.expect("scores supplied for MR");
                let mut best = 0usize;
                let mut best_val = scores[0].abs();
                for (i, s) in scores.iter().enumerate().skip(1) {
                    if s.abs() > best_val {
                        best = i;
                        best_val = s.abs();
                    }
                }
                best
            }
            ControlKind::Random { .. } => {
                let weights = weights.expect("weights supplied for Random");
                let total: f64 = weights.iter().sum();
                let u = self.rng.next_f64() * total;
                let mut acc = 0.0;
                let mut picked = self.count - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        picked = i;
                        break;
                    }
                }
                picked
            }
        };
        self.step += 1;
        self.history.push(idx);
        Ok(idx)
    }

    /// Next aligned window: a permutation of all indices plus `window - count`
    /// uniform extras, shuffled together.
    fn fill_window(&mut self, window: usize) {
        let mut buf: Vec<usize> = (0..self.count).collect();
        self.rng.shuffle(&mut buf);
        for _ in 0..(window - self.count) {
            buf.push(self.rng.next_below(self.count));
        }
        self.rng.shuffle(&mut buf);
        self.window_buf = buf;
        self.window_pos = 0;
    }
}

/// Row-norm-squared sampling distribution p_i = ||A_i||^2 / ||A||_F^2.
pub fn row_distribution(a: &DenseMatrix) -> Vec<f64> {
    let total: f64 = (0..a.rows()).map(|i| a.row(i).norm_sq()).sum();
    (0..a.rows()).map(|i| a.row(i).norm_sq() / total).collect()
}

/// Column-norm-squared sampling distribution q_j = ||A^j||^2 / ||A||_F^2.
pub fn column_distribution(a: &DenseMatrix) -> Vec<f64> {
    let total: f64 = (0..a.cols()).map(|j| a.col(j).norm_sq()).sum();
    (0..a.cols()).map(|j| a.col(j).norm_sq() / total).collect()
}

/// True iff every complete aligned window of length `window` in `history`
/// covers all of `{0, .., count-1}`. Incomplete trailing windows are ignored.
pub fn verify_window_property(history: &[usize], count: usize, window: usize) -> Result<bool> {
    if history.is_empty() {
        return Err(Error::Contract("empty index history".into()));
    }
    if window < count {
        return Err(Error::InvalidWindow(format!(
            "window {} cannot cover {} indices",
            window, count
        )));
    }
    let mut seen = vec![false; count];
    for chunk in history.chunks_exact(window) {
        seen.iter_mut().for_each(|s| *s = false);
        for &i in chunk {
            if i >= count {
                return Err(Error::Contract(format!("index {} out of range", i)));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Ok(false);
        }
    }
    Ok(true)
}

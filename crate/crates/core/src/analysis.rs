//! Error traces, theoretical-bound verification, empirical rate
//! classification and Monte Carlo expectation estimation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::controls::ControlKind;
use crate::error::{Error, Result};
use crate::linalg::{
    min_norm_solution, spectral_norm, subspace_projector, svd, DenseMatrix, Subspace, Vector,
};
use crate::operators::{realized_window_contraction, IterationOperators};
use crate::problems::LeastSquaresProblem;
use crate::solvers::{
    solve_extended_kaczmarz, solve_kaczmarz, IterateTrace, SolverConfig,
};

/// Errors below this are treated as round-off noise: they are excluded from
/// ratio statistics and absorb the absolute floor added to bound checks.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Relative slack allowed when checking a proved bound against a trace.
pub const BOUND_SLACK: f64 = 1e-8;

/// Absolute floor (relative to the sequence scale) below which a bound
/// comparison is moot: iterates stagnate at a round-off plateau the exact
/// arithmetic envelope keeps decaying through.
pub const BOUND_FLOOR: f64 = 1e-10;

/// Default tolerance for the rate classifier.
pub const CLASSIFY_TOLERANCE: f64 = 5e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "params")]
pub enum RateVerdict {
    Linear { mu: f64 },
    Sublinear,
    WindowedSublinear { delta: f64, window: usize },
    Superlinear,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateClassification {
    pub verdict: RateVerdict,
    /// The consecutive-ratio sequence the verdict was derived from.
    pub ratio_trace: Vec<f64>,
}

/// Outcome of replaying one theorem bound against a recorded trace.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub bound_name: String,
    /// (observed, bound) per recorded iteration.
    pub pairs: Vec<(f64, f64)>,
    pub satisfied: bool,
    /// Minimum of (bound - observed) / max(bound, floor) over all
    /// iterations; negative means a violation.
    pub worst_slack: f64,
    /// False when the theorem's hypotheses do not hold for the instance;
    /// `satisfied` is then vacuously true.
    pub applicable: bool,
    pub constants: BTreeMap<String, f64>,
}

impl BoundReport {
    fn from_pairs(
        name: &str,
        pairs: Vec<(f64, f64)>,
        constants: BTreeMap<String, f64>,
    ) -> Self {
        let floor = BOUND_FLOOR * pairs.first().map_or(1.0, |&(o, b)| o.max(b).max(1.0));
        let mut worst = f64::INFINITY;
        let mut satisfied = true;
        for &(observed, bound) in &pairs {
            let slack = (bound - observed) / bound.abs().max(floor);
            worst = worst.min(slack);
            if observed > bound * (1.0 + BOUND_SLACK) + floor {
                satisfied = false;
            }
        }
        BoundReport {
            bound_name: name.to_string(),
            pairs,
            satisfied,
            worst_slack: if worst.is_finite() { worst } else { 0.0 },
            applicable: true,
            constants,
        }
    }

    fn inapplicable(name: &str, constants: BTreeMap<String, f64>) -> Self {
        BoundReport {
            bound_name: name.to_string(),
            pairs: Vec::new(),
            satisfied: true,
            worst_slack: 0.0,
            applicable: false,
            constants,
        }
    }
}

/// The solution (or LS-solution) sharing the iterates' null-space
/// component: P_N(A)(x0) + x_LS of the consistent part of bhat.
pub fn reference_solution(a: &DenseMatrix, bhat: &Vector, x0: &Vector) -> Result<Vector> {
    let pn = subspace_projector(a, Subspace::Null)?;
    let pc = subspace_projector(a, Subspace::ColumnSpace)?;
    let xls = min_norm_solution(a, &pc.matvec(bhat)?)?;
    Ok(pn.matvec(x0)?.add(&xls))
}

/// Euclidean distance of every recorded iterate to the reference.
pub fn error_trace(trace: &IterateTrace, xstar: &Vector) -> Result<Vec<f64>> {
    trace
        .xs
        .iter()
        .map(|x| {
            if x.len() != xstar.len() {
                return Err(Error::DimensionMismatch(format!(
                    "iterate length {} vs reference length {}",
                    x.len(),
                    xstar.len()
                )));
            }
            Ok(x.sub(xstar).norm())
        })
        .collect()
}

/// Classify the decay of a positive bound/error sequence.
///
/// Ratios involving values at the round-off floor are excluded. Dips that
/// recur with a fixed period against an otherwise flat ratio trace are the
/// windowed-sublinear pattern; otherwise the tail (last half) of the
/// ratios decides between superlinear, sublinear and linear decay.
pub fn classify_rate(epsilons: &[f64], tolerance: f64) -> Result<RateClassification> {
    if epsilons.len() < 20 {
        return Err(Error::InvalidInput(format!(
            "need at least 20 values, got {}",
            epsilons.len()
        )));
    }
    if epsilons.iter().any(|&e| e < 0.0 || !e.is_finite()) {
        return Err(Error::InvalidInput(
            "epsilons must be nonnegative and finite".into(),
        ));
    }
    let scale = epsilons.iter().cloned().fold(0.0_f64, f64::max);
    let floor = ERROR_FLOOR.max(BOUND_FLOOR * scale);
    let ratios: Vec<f64> = epsilons
        .windows(2)
        .filter(|w| w[0] > floor && w[1] > floor)
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.len() < 4 {
        return Ok(RateClassification {
            verdict: RateVerdict::Inconclusive,
            ratio_trace: ratios,
        });
    }

    if let Some(verdict) = detect_windowed(&ratios, tolerance) {
        return Ok(RateClassification {
            verdict,
            ratio_trace: ratios,
        });
    }

    let tail = &ratios[ratios.len() / 2..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / tail.len() as f64;
    let std = var.sqrt();

    // superlinear needs the ratios themselves to keep falling; a flat ratio
    // trace is geometric decay no matter how fast
    let nonincreasing = tail.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let tail_last = *tail.last().unwrap();
    if nonincreasing
        && tail[0] - tail_last > tolerance
        && (tail_last < tolerance || tail_last <= 0.5 * tail[0])
    {
        return Ok(RateClassification {
            verdict: RateVerdict::Superlinear,
            ratio_trace: ratios,
        });
    }

    // Ratios hugging 1 throughout the tail.
    if (mean - 1.0).abs() <= tolerance && std <= tolerance {
        return Ok(RateClassification {
            verdict: RateVerdict::Sublinear,
            ratio_trace: ratios,
        });
    }

    // Ratios creeping up toward 1: the gap to 1 keeps shrinking, which a
    // geometric sequence never does.
    let nondecreasing = tail.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    let gap_first = 1.0 - tail[0];
    let gap_last = 1.0 - tail[tail.len() - 1];
    if nondecreasing
        && gap_first > 0.0
        && gap_last <= 0.8 * gap_first
        && gap_last <= 3.0 * tolerance
    {
        return Ok(RateClassification {
            verdict: RateVerdict::Sublinear,
            ratio_trace: ratios,
        });
    }

    if mean < 1.0 - tolerance && std < tolerance {
        return Ok(RateClassification {
            verdict: RateVerdict::Linear { mu: mean },
            ratio_trace: ratios,
        });
    }

    // ratios too noisy to read directly: fit log eps against k and accept a
    // geometric trend when the line explains almost all the variance
    let points: Vec<(f64, f64)> = epsilons
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > floor)
        .map(|(k, &e)| (k as f64, e.ln()))
        .collect();
    if points.len() >= 10 {
        let n_pts = points.len() as f64;
        let kbar = points.iter().map(|p| p.0).sum::<f64>() / n_pts;
        let ybar = points.iter().map(|p| p.1).sum::<f64>() / n_pts;
        let skk = points.iter().map(|p| (p.0 - kbar).powi(2)).sum::<f64>();
        let sky = points
            .iter()
            .map(|p| (p.0 - kbar) * (p.1 - ybar))
            .sum::<f64>();
        let syy = points.iter().map(|p| (p.1 - ybar).powi(2)).sum::<f64>();
        if skk > 0.0 && syy > 0.0 {
            let slope = sky / skk;
            let r2 = (sky * sky) / (skk * syy);
            let mu = slope.exp();
            if r2 >= 0.95 && mu < 1.0 - tolerance {
                return Ok(RateClassification {
                    verdict: RateVerdict::Linear { mu },
                    ratio_trace: ratios,
                });
            }
        }
    }

    Ok(RateClassification {
        verdict: RateVerdict::Inconclusive,
        ratio_trace: ratios,
    })
}

/// Periodic dips below an otherwise flat (ratio = 1) trace.
fn detect_windowed(ratios: &[f64], tolerance: f64) -> Option<RateVerdict> {
    let dips: Vec<usize> = ratios
        .iter()
        .enumerate()
        .filter(|(_, &r)| (r - 1.0).abs() > tolerance)
        .map(|(i, _)| i)
        .collect();
    // a windowed pattern needs flat stretches between the dips
    if dips.len() < 2 || dips.len() * 2 > ratios.len() {
        return None;
    }
    let period = dips[1] - dips[0];
    if period < 2 || !dips.windows(2).all(|w| w[1] - w[0] == period) {
        return None;
    }
    let dip_vals: Vec<f64> = dips.iter().map(|&i| ratios[i]).collect();
    let delta = dip_vals.iter().sum::<f64>() / dip_vals.len() as f64;
    if delta >= 1.0 - tolerance || delta < 0.0 {
        return None;
    }
    if !dip_vals.iter().all(|&v| (v - delta).abs() <= tolerance) {
        return None;
    }
    Some(RateVerdict::WindowedSublinear {
        delta,
        window: period,
    })
}

/// `||x^k - x*|| <= ||Qtilde||^k ||x^0 - x*||` for a full-sweep trace.
pub fn check_kt_bound(
    trace: &IterateTrace,
    xstar: &Vector,
    operators: &IterationOperators,
) -> Result<BoundReport> {
    if trace.xs.is_empty() || trace.xs[0].len() != operators.q.rows() {
        return Err(Error::Contract("trace does not match operators".into()));
    }
    let errors = error_trace(trace, xstar)?;
    let q = operators.norm_qtilde;
    let e0 = errors[0];
    let pairs = errors
        .iter()
        .enumerate()
        .map(|(k, &e)| (e, q.powi(k as i32) * e0))
        .collect();
    let mut constants = BTreeMap::new();
    constants.insert("norm_qtilde".into(), q);
    constants.insert("e0".into(), e0);
    Ok(BoundReport::from_pairs("kt", pairs, constants))
}

/// `||x^k - x*|| <= C delta^{m_k}` with `k = Gamma m_k + q_k`, delta the
/// worst realized-window contraction and C the first-window error maximum.
pub fn check_ack_bound(
    a: &DenseMatrix,
    trace: &IterateTrace,
    xstar: &Vector,
    window: usize,
) -> Result<BoundReport> {
    let errors = error_trace(trace, xstar)?;
    if trace.row_indices.len() < window {
        return Err(Error::Contract("trace shorter than one window".into()));
    }
    let complete = (trace.row_indices.len() / window) * window;
    let delta = realized_window_contraction(a, &trace.row_indices[..complete], window)?;
    let c = errors[..window.min(errors.len())]
        .iter()
        .fold(0.0_f64, |acc, &e| acc.max(e));
    let pairs = errors
        .iter()
        .take(complete + 1)
        .enumerate()
        .map(|(k, &e)| (e, c * delta.powi((k / window) as i32)))
        .collect();
    let mut constants = BTreeMap::new();
    constants.insert("delta".into(), delta);
    constants.insert("C".into(), c);
    constants.insert("window".into(), window as f64);
    Ok(BoundReport::from_pairs("ack", pairs, constants))
}

/// Monotone per-step contraction for the maximal-residual control. The
/// theorem's constant is existential, so the check asserts non-increase and
/// reports the worst observed per-step factor.
pub fn check_mrk_contraction(trace: &IterateTrace, xstar: &Vector) -> Result<BoundReport> {
    let errors = error_trace(trace, xstar)?;
    let mut factor = 0.0_f64;
    let mut pairs = Vec::with_capacity(errors.len());
    pairs.push((errors[0], errors[0]));
    for w in errors.windows(2) {
        // bound for step k+1 is the previous error (non-increase)
        pairs.push((w[1], w[0].max(ERROR_FLOOR)));
        if w[0] > ERROR_FLOOR {
            factor = factor.max(w[1] / w[0]);
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("empirical_factor".into(), factor);
    let mut report = BoundReport::from_pairs("mrk", pairs, constants);
    if factor > 1.0 - 1e-12 {
        report.satisfied = false;
    }
    Ok(report)
}

/// `||e^k|| <= delta^k (k+1) ||R||_2 ||bhat|| + delta^k ||e^0||` with
/// `delta = max(||Qtilde||_2, ||Phitilde||_2)` for the extended full sweep.
pub fn check_ekt_bound(
    trace: &IterateTrace,
    xstar: &Vector,
    operators_rows: &IterationOperators,
    operators_cols: &IterationOperators,
) -> Result<BoundReport> {
    let r = operators_rows
        .r
        .as_ref()
        .ok_or_else(|| Error::Contract("row operators carry no rhs map".into()))?;
    let bhat = trace
        .ys
        .as_ref()
        .and_then(|ys| ys.first())
        .ok_or_else(|| Error::Contract("not an extended trace".into()))?;
    let errors = error_trace(trace, xstar)?;
    let delta = operators_rows.norm_qtilde.max(operators_cols.norm_qtilde);
    let r_norm = spectral_norm(r)?;
    let e0 = errors[0];
    let bhat_norm = bhat.norm();
    let pairs = errors
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let d = delta.powi(k as i32);
            (e, d * (k as f64 + 1.0) * r_norm * bhat_norm + d * e0)
        })
        .collect();
    let mut constants = BTreeMap::new();
    constants.insert("delta".into(), delta);
    constants.insert("r_norm".into(), r_norm);
    constants.insert("bhat_norm".into(), bhat_norm);
    Ok(BoundReport::from_pairs("ekt", pairs, constants))
}

/// `||x^k - x||^2 <= nu^k (||x^0 - x||^2 + C k)` for the maximal-residual
/// extended solver; gated on the derivation's implicit hypotheses
/// `alpha, beta in [0, 1)`.
pub fn check_mrek_bound(
    a: &DenseMatrix,
    trace: &IterateTrace,
    xstar: &Vector,
) -> Result<BoundReport> {
    let ys = trace
        .ys
        .as_ref()
        .ok_or_else(|| Error::Contract("not an extended trace".into()))?;
    let n = a.cols() as f64;
    let dec = svd(a)?;
    let delta = dec.singular_values[..dec.numeric_rank]
        .last()
        .copied()
        .unwrap_or(0.0);
    let row_norms_sq: Vec<f64> = (0..a.rows()).map(|i| a.row(i).norm_sq()).collect();
    let m_max = row_norms_sq.iter().cloned().fold(0.0, f64::max);
    let mu_min = row_norms_sq.iter().cloned().fold(f64::INFINITY, f64::min);
    let alpha = 1.0 - delta * delta / (n * m_max);
    let beta = 1.0 - delta * delta / n;
    let mut constants = BTreeMap::new();
    constants.insert("alpha".into(), alpha);
    constants.insert("beta".into(), beta);
    constants.insert("delta_min_singular".into(), delta);
    if !(0.0..1.0).contains(&alpha) || !(0.0..1.0).contains(&beta) {
        return Ok(BoundReport::inapplicable("mrek", constants));
    }
    let nu = alpha.max(beta);
    let pln = subspace_projector(a, Subspace::LeftNull)?;
    let r = pln.matvec(&ys[0])?;
    let y0_gap = ys[0].sub(&r).norm_sq();
    let c = if n > 1.0 {
        (1.0 / mu_min) * (1.0 - 1.0 / n) * y0_gap
    } else {
        0.0
    };
    constants.insert("nu".into(), nu);
    constants.insert("C".into(), c);
    let errors = error_trace(trace, xstar)?;
    let e0_sq = errors[0] * errors[0];
    let pairs = errors
        .iter()
        .enumerate()
        .map(|(k, &e)| (e * e, nu.powi(k as i32) * (e0_sq + c * k as f64)))
        .collect();
    Ok(BoundReport::from_pairs("mrek", pairs, constants))
}

/// `||x^k - x|| <= mu^{q_k} alpha + Gamma^2 M mu^{q_k - 1}` for the
/// almost-cyclic extended solver, with delta from the realized row windows
/// and (gamma, M) the tightest geometric envelope of `||y^k - r||` per
/// window.
pub fn check_acek_bound(
    a: &DenseMatrix,
    trace: &IterateTrace,
    xstar: &Vector,
    window: usize,
) -> Result<BoundReport> {
    let ys = trace
        .ys
        .as_ref()
        .ok_or_else(|| Error::Contract("not an extended trace".into()))?;
    if trace.row_indices.len() < 2 * window {
        return Err(Error::Contract("need at least two complete windows".into()));
    }
    let complete = (trace.row_indices.len() / window) * window;
    let delta = realized_window_contraction(a, &trace.row_indices[..complete], window)?;

    let pln = subspace_projector(a, Subspace::LeftNull)?;
    let r = pln.matvec(&ys[0])?;
    let gaps: Vec<f64> = ys.iter().map(|y| y.sub(&r).norm()).collect();
    // per-window sup of the y-gap
    let n_windows = complete / window;
    let w_sup: Vec<f64> = (0..n_windows)
        .map(|q| {
            gaps[q * window..(q + 1) * window]
                .iter()
                .fold(0.0_f64, |acc, &g| acc.max(g))
        })
        .collect();
    // tightest geometric envelope w_q <= M * gamma^q
    let w0 = w_sup[0].max(ERROR_FLOOR);
    let mut gamma = 0.0_f64;
    for (q, &w) in w_sup.iter().enumerate().skip(1) {
        if w > ERROR_FLOOR {
            gamma = gamma.max((w / w0).powf(1.0 / q as f64));
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("delta".into(), delta);
    constants.insert("gamma".into(), gamma);
    constants.insert("window".into(), window as f64);
    if gamma >= 1.0 {
        return Ok(BoundReport::inapplicable("acek", constants));
    }
    let mut envelope_m = 0.0_f64;
    for (q, &w) in w_sup.iter().enumerate() {
        let g = gamma.powi(q as i32);
        if g > 0.0 {
            envelope_m = envelope_m.max(w / g);
        }
    }
    let mu = delta.max(gamma);
    constants.insert("mu".into(), mu);
    constants.insert("M".into(), envelope_m);

    let errors = error_trace(trace, xstar)?;
    let alpha = errors[..window.min(errors.len())]
        .iter()
        .fold(0.0_f64, |acc, &e| acc.max(e));
    constants.insert("alpha".into(), alpha);
    let g2m = (window * window) as f64 * envelope_m;
    let pairs = errors
        .iter()
        .take(complete + 1)
        .enumerate()
        .map(|(k, &e)| {
            let q = k / window;
            let bound = if q == 0 {
                alpha + g2m
            } else {
                mu.powi(q as i32) * alpha + g2m * mu.powi(q as i32 - 1)
            };
            (e, bound)
        })
        .collect();
    Ok(BoundReport::from_pairs("acek", pairs, constants))
}

/// Which randomized solver a Monte Carlo run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McSolver {
    RandomKaczmarz,
    RandomExtendedKaczmarz,
}

/// Sample mean of `||x^k - x_LS||^2` per iteration over independently
/// seeded trials (seed = base_seed + trial index). Trials run in parallel;
/// the reduction is in trial order, so the output is deterministic.
pub fn monte_carlo_expected_error(
    problem: &LeastSquaresProblem,
    solver: McSolver,
    trials: usize,
    k_max: usize,
    base_seed: u64,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    let x0 = Vector::zeros(problem.a.cols())?;
    let per_trial: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = base_seed.wrapping_add(t as u64);
            let trace = match solver {
                McSolver::RandomKaczmarz => {
                    let cfg = SolverConfig::new(k_max, ControlKind::Random { seed })?;
                    solve_kaczmarz(&problem.a, &problem.bhat, &x0, &cfg)?
                }
                McSolver::RandomExtendedKaczmarz => {
                    let cfg = SolverConfig::new(k_max, ControlKind::Random { seed })?
                        .with_column_control(ControlKind::Random {
                            seed: seed ^ 0x9E37_79B9_7F4A_7C15,
                        });
                    solve_extended_kaczmarz(&problem.a, &problem.bhat, &x0, &cfg)?
                }
            };
            Ok(trace
                .xs
                .iter()
                .map(|x| x.sub(&problem.x_ls).norm_sq())
                .collect())
        })
        .collect();
    let mut mean = vec![0.0; k_max + 1];
    for trial in per_trial {
        let errs = trial?;
        for (m, e) in mean.iter_mut().zip(&errs) {
            *m += e;
        }
    }
    for m in &mut mean {
        *m /= trials as f64;
    }
    Ok(mean)
}

/// Expectation bound for the random row control on full-column-rank
/// systems, with the existential constant instantiated as
/// `M = ||A||_F / sigma_min`. Checked with multiplicative slack since a
/// sample mean fluctuates around the true expectation.
pub fn check_rk_expectation(
    problem: &LeastSquaresProblem,
    means: &[f64],
    slack: f64,
) -> Result<BoundReport> {
    let dec = svd(&problem.a)?;
    if dec.numeric_rank < problem.a.cols() {
        return Err(Error::Contract("rk bound needs full column rank".into()));
    }
    let sigma_min = dec.singular_values[dec.numeric_rank - 1];
    let m_const = problem.a.frobenius_norm() / sigma_min;
    let rate = 1.0 - 1.0 / (m_const * m_const);
    let e0 = problem.x_ls.norm_sq();
    let pairs = means
        .iter()
        .enumerate()
        .map(|(k, &mval)| (mval, slack * rate.powi(k as i32) * e0))
        .collect();
    let mut constants = BTreeMap::new();
    constants.insert("M".into(), m_const);
    constants.insert("rate".into(), rate);
    constants.insert("slack".into(), slack);
    Ok(BoundReport::from_pairs("rk", pairs, constants))
}

/// Expectation bound for the random extended solver:
/// `(1 - 1/khat^2)^{floor(k/2)} (1 + 2 kappa^2) ||x_LS||^2` with
/// `khat = ||A^+||_2 ||A||_F` and `kappa = sigma_1 / sigma_rho`.
pub fn check_rek_expectation(
    problem: &LeastSquaresProblem,
    means: &[f64],
    slack: f64,
) -> Result<BoundReport> {
    let dec = svd(&problem.a)?;
    let rho = dec.numeric_rank;
    if rho == 0 {
        return Err(Error::Contract("zero matrix".into()));
    }
    let sigma_min = dec.singular_values[rho - 1];
    let kappa = dec.singular_values[0] / sigma_min;
    let khat = problem.a.frobenius_norm() / sigma_min;
    let rate = 1.0 - 1.0 / (khat * khat);
    let scale = (1.0 + 2.0 * kappa * kappa) * problem.x_ls.norm_sq();
    let pairs = means
        .iter()
        .enumerate()
        .map(|(k, &mval)| (mval, slack * rate.powi((k / 2) as i32) * scale))
        .collect();
    let mut constants = BTreeMap::new();
    constants.insert("khat".into(), khat);
    constants.insert("kappa".into(), kappa);
    constants.insert("rate".into(), rate);
    constants.insert("slack".into(), slack);
    Ok(BoundReport::from_pairs("rek", pairs, constants))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{build_column_operators, build_row_operators};
    use crate::problems::generate;
    use crate::rng::SplitMix64;
    use crate::solvers::{solve_ekt, solve_kt};

    fn random_vector(rng: &mut SplitMix64, n: usize) -> Vector {
        Vector::new((0..n).map(|_| rng.next_gaussian()).collect()).unwrap()
    }

    #[test]
    fn reference_solution_basics() {
        let p = generate(6, 4, 3, 0.5, 10.0, 2).unwrap();
        let x0 = Vector::zeros(4).unwrap();
        let xstar = reference_solution(&p.a, &p.bhat, &x0).unwrap();
        assert!(xstar.sub(&p.x_ls).norm() < 1e-8);

        // random x0: A x* is the range projection of bhat, x* - x0 has the
        // same null component as x0
        let mut rng = SplitMix64::new(3);
        let x0 = random_vector(&mut rng, 4);
        let xstar = reference_solution(&p.a, &p.bhat, &x0).unwrap();
        let ax = p.a.matvec(&xstar).unwrap();
        assert!(ax.sub(&p.b).norm() < 1e-8);
        let pn = subspace_projector(&p.a, Subspace::Null).unwrap();
        let n0 = pn.matvec(&x0).unwrap();
        let ns = pn.matvec(&xstar).unwrap();
        assert!(ns.sub(&n0).norm() < 1e-10);
    }

    #[test]
    fn reference_solution_identity() {
        let a = DenseMatrix::identity(3).unwrap();
        let bhat = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let x0 = Vector::zeros(3).unwrap();
        let xstar = reference_solution(&a, &bhat, &x0).unwrap();
        assert!(xstar.sub(&bhat).norm() < 1e-10);
    }

    #[test]
    fn error_trace_recomputation() {
        let mut rng = SplitMix64::new(5);
        let xs: Vec<Vector> = (0..5).map(|_| random_vector(&mut rng, 3)).collect();
        let xstar = random_vector(&mut rng, 3);
        let trace = IterateTrace {
            xs: xs.clone(),
            ys: None,
            corrected_rhs: None,
            row_indices: vec![],
            col_indices: vec![],
            iterations: 4,
        };
        let errs = error_trace(&trace, &xstar).unwrap();
        for (e, x) in errs.iter().zip(&xs) {
            assert_eq!(*e, x.sub(&xstar).norm());
        }
        // at x*: all zeros
        let at_star = IterateTrace {
            xs: vec![xstar.clone(), xstar.clone()],
            ys: None,
            corrected_rhs: None,
            row_indices: vec![],
            col_indices: vec![],
            iterations: 1,
        };
        assert!(error_trace(&at_star, &xstar).unwrap().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn classify_exact_geometric_is_linear() {
        let eps: Vec<f64> = (0..40).map(|k| 0.5_f64.powi(k)).collect();
        let c = classify_rate(&eps, CLASSIFY_TOLERANCE).unwrap();
        match c.verdict {
            RateVerdict::Linear { mu } => assert!((mu - 0.5).abs() < 1e-9),
            other => panic!("expected Linear, got {other:?}"),
        }
    }

    #[test]
    fn classify_harmonic_is_sublinear() {
        let eps: Vec<f64> = (0..20).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let c = classify_rate(&eps, CLASSIFY_TOLERANCE).unwrap();
        assert_eq!(c.verdict, RateVerdict::Sublinear);
        let eps: Vec<f64> = (0..200).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let c = classify_rate(&eps, CLASSIFY_TOLERANCE).unwrap();
        assert_eq!(c.verdict, RateVerdict::Sublinear);
    }

    #[test]
    fn classify_windowed_pattern() {
        // ratios 1,1,delta repeating: eps drops by 0.3 every third step
        let mut eps = vec![1.0];
        for k in 0..30 {
            let r = if k % 3 == 2 { 0.3 } else { 1.0 };
            let last = *eps.last().unwrap();
            eps.push(last * r);
        }
        let c = classify_rate(&eps, CLASSIFY_TOLERANCE).unwrap();
        match c.verdict {
            RateVerdict::WindowedSublinear { delta, window } => {
                assert!((delta - 0.3).abs() < 1e-9);
                assert_eq!(window, 3);
            }
            other => panic!("expected WindowedSublinear, got {other:?}"),
        }
    }

    #[test]
    fn classify_superlinear() {
        // eps = (0.5)^{k^2 / 10}: ratios shrink toward zero
        let eps: Vec<f64> = (0..30)
            .map(|k| 0.5_f64.powf((k * k) as f64 / 10.0))
            .collect();
        let c = classify_rate(&eps, CLASSIFY_TOLERANCE).unwrap();
        assert_eq!(c.verdict, RateVerdict::Superlinear);
    }

    #[test]
    fn classify_is_scale_invariant() {
        let eps: Vec<f64> = (0..40).map(|k| 0.7_f64.powi(k)).collect();
        let scaled: Vec<f64> = eps.iter().map(|e| e * 123.0).collect();
        let c1 = classify_rate(&eps, CLASSIFY_TOLERANCE).unwrap();
        let c2 = classify_rate(&scaled, CLASSIFY_TOLERANCE).unwrap();
        match (c1.verdict, c2.verdict) {
            (RateVerdict::Linear { mu: m1 }, RateVerdict::Linear { mu: m2 }) => {
                assert!((m1 - m2).abs() < 1e-12)
            }
            other => panic!("expected matching Linear verdicts, got {other:?}"),
        }
    }

    #[test]
    fn classify_rejects_bad_input() {
        assert!(classify_rate(&[1.0; 5], 0.05).is_err());
        let mut eps = vec![1.0; 25];
        eps[3] = -1.0;
        assert!(classify_rate(&eps, 0.05).is_err());
    }

    #[test]
    fn kt_bound_check_on_random_problem() {
        let p = generate(10, 6, 6, 0.0, 10.0, 21).unwrap();
        let x0 = Vector::zeros(6).unwrap();
        let cfg = SolverConfig::new(100, ControlKind::Cyclic).unwrap();
        let trace = solve_kt(&p.a, &p.b, &x0, &cfg).unwrap();
        let ops = build_row_operators(&p.a, &(0..10).collect::<Vec<_>>()).unwrap();
        let report = check_kt_bound(&trace, &p.x_ls, &ops).unwrap();
        assert!(report.satisfied, "worst slack {}", report.worst_slack);
        assert!(report.worst_slack >= -BOUND_SLACK);
        // the bound sequence classifies linear at the operator norm
        let eps: Vec<f64> = report.pairs.iter().map(|&(_, b)| b).collect();
        let c = classify_rate(&eps, CLASSIFY_TOLERANCE).unwrap();
        match c.verdict {
            RateVerdict::Linear { mu } => assert!((mu - ops.norm_qtilde).abs() < CLASSIFY_TOLERANCE),
            other => panic!("expected Linear, got {other:?}"),
        }
    }

    #[test]
    fn euclidean_division_in_ack_bound() {
        // k = 7, window 3 -> m_k = 2
        let p = generate(4, 3, 3, 0.0, 5.0, 30).unwrap();
        let x0 = Vector::zeros(3).unwrap();
        let cfg = SolverConfig::new(
            24,
            ControlKind::AlmostCyclic { window: 4, seed: 1 },
        )
        .unwrap();
        let trace = solve_kaczmarz(&p.a, &p.b, &x0, &cfg).unwrap();
        let report = check_ack_bound(&p.a, &trace, &p.x_ls, 4).unwrap();
        assert!(report.satisfied);
        let delta = report.constants["delta"];
        let c = report.constants["C"];
        // spot-check the Euclidean-division exponent at k = 7 (m_k = 1) and k = 9 (m_k = 2)
        assert!((report.pairs[7].1 - c * delta).abs() < 1e-12);
        assert!((report.pairs[9].1 - c * delta * delta).abs() < 1e-12);
    }

    #[test]
    fn mrk_contraction_on_random_problem() {
        let p = generate(8, 5, 5, 0.0, 5.0, 33).unwrap();
        let x0 = Vector::zeros(5).unwrap();
        let cfg = SolverConfig::new(200, ControlKind::MaximalResidual).unwrap();
        let trace = solve_kaczmarz(&p.a, &p.b, &x0, &cfg).unwrap();
        let report = check_mrk_contraction(&trace, &p.x_ls).unwrap();
        assert!(report.satisfied);
        assert!(report.constants["empirical_factor"] < 1.0);
    }

    #[test]
    fn ekt_bound_on_inconsistent_problem() {
        let p = generate(10, 6, 6, 0.5, 10.0, 40).unwrap();
        let x0 = Vector::zeros(6).unwrap();
        let cfg = SolverConfig::new(200, ControlKind::Cyclic).unwrap();
        let trace = solve_ekt(&p.a, &p.bhat, &x0, &cfg).unwrap();
        let row_ops = build_row_operators(&p.a, &(0..10).collect::<Vec<_>>()).unwrap();
        let col_ops = build_column_operators(&p.a).unwrap();
        let report = check_ekt_bound(&trace, &p.x_ls, &row_ops, &col_ops).unwrap();
        assert!(report.satisfied, "worst slack {}", report.worst_slack);
    }

    #[test]
    fn mrek_bound_and_applicability_gate() {
        let p = generate(8, 5, 5, 0.5, 10.0, 44).unwrap();
        let x0 = Vector::zeros(5).unwrap();
        let cfg = SolverConfig::new(200, ControlKind::MaximalResidual)
            .unwrap()
            .with_column_control(ControlKind::MaximalResidual);
        let trace = solve_extended_kaczmarz(&p.a, &p.bhat, &x0, &cfg).unwrap();
        let report = check_mrek_bound(&p.a, &trace, &p.x_ls).unwrap();
        assert!(report.applicable);
        assert!(report.satisfied, "worst slack {}", report.worst_slack);

        // scaling A pushes delta^2 past n: gate reports inapplicable
        let scaled = p.a.scale(100.0);
        let bhat_s = p.bhat.scale(100.0);
        let trace_s = solve_extended_kaczmarz(&scaled, &bhat_s, &x0, &cfg).unwrap();
        let report_s = check_mrek_bound(&scaled, &trace_s, &p.x_ls).unwrap();
        assert!(!report_s.applicable);
        assert!(report_s.satisfied);
    }

    #[test]
    fn monte_carlo_deterministic_and_single_row_case() {
        let p = generate(6, 4, 4, 0.0, 5.0, 50).unwrap();
        let m1 = monte_carlo_expected_error(&p, McSolver::RandomKaczmarz, 100, 30, 7).unwrap();
        let m2 = monte_carlo_expected_error(&p, McSolver::RandomKaczmarz, 100, 30, 7).unwrap();
        assert_eq!(m1, m2);

        // m = 1: every trial is identical to a single deterministic trace
        let single = generate(1, 3, 1, 0.0, 1.0, 51).unwrap();
        let means =
            monte_carlo_expected_error(&single, McSolver::RandomKaczmarz, 50, 5, 3).unwrap();
        let x0 = Vector::zeros(3).unwrap();
        let cfg = SolverConfig::new(5, ControlKind::Random { seed: 3 }).unwrap();
        let trace = solve_kaczmarz(&single.a, &single.bhat, &x0, &cfg).unwrap();
        for (k, xk) in trace.xs.iter().enumerate() {
            assert!((means[k] - xk.sub(&single.x_ls).norm_sq()).abs() < 1e-12);
        }
    }

    #[test]
    fn rk_expectation_identity_bound() {
        // A = I_4: M^2 = m, bound (1 - 1/m)^k ||x_LS||^2
        let a = DenseMatrix::identity(4).unwrap();
        let bhat = Vector::new(vec![1.0, -2.0, 0.5, 1.5]).unwrap();
        let x_ls = bhat.clone();
        let p = LeastSquaresProblem {
            a,
            bhat: bhat.clone(),
            b: bhat.clone(),
            r: Vector::zeros(4).unwrap(),
            x_ls,
            rank: 4,
            seed: 0,
        };
        let means = monte_carlo_expected_error(&p, McSolver::RandomKaczmarz, 2000, 40, 9).unwrap();
        let report = check_rk_expectation(&p, &means, 1.1).unwrap();
        assert!(report.satisfied, "worst slack {}", report.worst_slack);
        assert!((report.constants["M"] * report.constants["M"] - 4.0).abs() < 1e-9);
    }
}

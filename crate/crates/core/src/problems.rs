//! Deterministic generation of consistent and inconsistent test problems
//! with known singular spectrum and ground-truth minimal-norm solution,
//! plus the line-oriented `.kzp` file format.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{min_norm_solution, DenseMatrix, Vector};
use crate::rng::SplitMix64;

/// An inconsistent (or consistent) least-squares instance with its exact
/// decomposition `bhat = b + r`, `b` in R(A), `r` in N(A^T).
#[derive(Debug, Clone)]
pub struct LeastSquaresProblem {
    pub a: DenseMatrix,
    pub bhat: Vector,
    pub b: Vector,
    pub r: Vector,
    pub x_ls: Vector,
    pub rank: usize,
    pub seed: u64,
}

/// Build a random m x n problem of the given rank. The singular spectrum is
/// log-uniform in [1/condition_cap, 1] (so the spectral norm is 1), the
/// noise is a N(A^T) vector of norm `noise_ratio * ||b||`, and any draw
/// producing a near-zero row or column is resampled.
pub fn generate(
    m: usize,
    n: usize,
    rank: usize,
    noise_ratio: f64,
    condition_cap: f64,
    seed: u64,
) -> Result<LeastSquaresProblem> {
    if m == 0 || n == 0 {
        return Err(Error::EmptyDimension);
    }
    if rank == 0 || rank > m.min(n) {
        return Err(Error::InvalidInput(format!(
            "rank {} outside 1..=min({}, {})",
            rank, m, n
        )));
    }
    if noise_ratio < 0.0 || !noise_ratio.is_finite() {
        return Err(Error::InvalidInput("noise_ratio must be >= 0".into()));
    }
    if condition_cap < 1.0 {
        return Err(Error::InvalidInput("condition_cap must be >= 1".into()));
    }
    if noise_ratio > 0.0 && rank == m {
        return Err(Error::InvalidInput(
            "N(A^T) is trivial when rank = m; no noise vector exists".into(),
        ));
    }

    let mut rng = SplitMix64::new(seed);
    let a = loop {
        let u = random_orthonormal(&mut rng, m, rank)?;
        let v = random_orthonormal(&mut rng, n, rank)?;
        let sigma = log_uniform_spectrum(&mut rng, rank, condition_cap);
        let mut a = DenseMatrix::zeros(m, n)?;
        for i in 0..m {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..rank {
                    s += u.get(i, k) * sigma[k] * v.get(j, k);
                }
                a.set(i, j, s);
            }
        }
        let min_row = (0..m).map(|i| a.row(i).norm()).fold(f64::INFINITY, f64::min);
        let min_col = (0..n).map(|j| a.col(j).norm()).fold(f64::INFINITY, f64::min);
        if min_row >= 1e-8 && min_col >= 1e-8 {
            break a;
        }
    };

    let x_true = Vector::new((0..n).map(|_| rng.next_gaussian()).collect())?;
    let b_raw = a.matvec(&x_true)?;
    // Strip any numerical N(A^T) leak so that b is in R(A) exactly up to
    // the projector accuracy.
    let pc = crate::linalg::subspace_projector(&a, crate::linalg::Subspace::ColumnSpace)?;
    let b = pc.matvec(&b_raw)?;

    let r = if noise_ratio > 0.0 {
        let pln = crate::linalg::subspace_projector(&a, crate::linalg::Subspace::LeftNull)?;
        loop {
            let g = Vector::new((0..m).map(|_| rng.next_gaussian()).collect())?;
            let cand = pln.matvec(&g)?;
            if cand.norm() > 1e-8 {
                break cand.scale(noise_ratio * b.norm() / cand.norm());
            }
        }
    } else {
        Vector::zeros(m)?
    };
    let bhat = b.add(&r);
    let x_ls = min_norm_solution(&a, &b)?;

    Ok(LeastSquaresProblem {
        a,
        bhat,
        b,
        r,
        x_ls,
        rank,
        seed,
    })
}

fn random_orthonormal(rng: &mut SplitMix64, dim: usize, cols: usize) -> Result<DenseMatrix> {
    // Modified Gram-Schmidt on Gaussian columns; redraw on near-dependence.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut cand: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
        for col in &basis {
            let proj: f64 = col.iter().zip(&cand).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                cand[i] -= proj * col[i];
            }
        }
        let norm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(cand.iter().map(|x| x / norm).collect());
        }
    }
    let mut q = DenseMatrix::zeros(dim, cols)?;
    for (j, col) in basis.iter().enumerate() {
        for i in 0..dim {
            q.set(i, j, col[i]);
        }
    }
    Ok(q)
}

fn log_uniform_spectrum(rng: &mut SplitMix64, rank: usize, condition_cap: f64) -> Vec<f64> {
    let lo = -(condition_cap.ln());
    let mut sigma: Vec<f64> = (0..rank).map(|_| (rng.next_f64() * lo).exp()).collect();
    // pin the extremes so the cap is attained exactly for rank >= 2
    sigma[0] = 1.0;
    if rank > 1 {
        sigma[rank - 1] = 1.0 / condition_cap;
    }
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sigma
}

/// Render a problem in the `.kzp` text format. Scalars use Rust's shortest
/// round-trip decimal rendering, so load(save(p)) is bit-exact.
pub fn problem_to_string(p: &LeastSquaresProblem) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "kaczmarz-problem v1 {} {} {} {}",
        p.a.rows(),
        p.a.cols(),
        p.rank,
        p.seed
    )
    .unwrap();
    out.push_str("A:\n");
    for i in 0..p.a.rows() {
        let row = p.a.row(i);
        let line: Vec<String> = row.as_slice().iter().map(|x| format!("{x}")).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    for (name, v) in [
        ("bhat", &p.bhat),
        ("b", &p.b),
        ("r", &p.r),
        ("x_ls", &p.x_ls),
    ] {
        writeln!(out, "{name}:").unwrap();
        let line: Vec<String> = v.as_slice().iter().map(|x| format!("{x}")).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}

pub fn problem_from_string(text: &str) -> Result<LeastSquaresProblem> {
    let mut lines = text.lines().enumerate();
    let (lineno, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 6 || parts[0] != "kaczmarz-problem" || parts[1] != "v1" {
        return Err(Error::Parse {
            line: lineno + 1,
            msg: "expected header `kaczmarz-problem v1 m n rank seed`".into(),
        });
    }
    let m: usize = parse_field(parts[2], lineno + 1, "m")?;
    let n: usize = parse_field(parts[3], lineno + 1, "n")?;
    let rank: usize = parse_field(parts[4], lineno + 1, "rank")?;
    let seed: u64 = parse_field(parts[5], lineno + 1, "seed")?;

    expect_section(&mut lines, "A:")?;
    let mut data = Vec::with_capacity(m * n);
    for _ in 0..m {
        let (lineno, line) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "truncated matrix section".into(),
        })?;
        let row = parse_scalars(line, lineno + 1)?;
        if row.len() != n {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected {} entries, found {}", n, row.len()),
            });
        }
        data.extend(row);
    }
    let a = DenseMatrix::new(m, n, data)?;

    let bhat = read_vector_section(&mut lines, "bhat:", m)?;
    let b = read_vector_section(&mut lines, "b:", m)?;
    let r = read_vector_section(&mut lines, "r:", m)?;
    let x_ls = read_vector_section(&mut lines, "x_ls:", n)?;

    Ok(LeastSquaresProblem {
        a,
        bhat,
        b,
        r,
        x_ls,
        rank,
        seed,
    })
}

pub fn save_problem(p: &LeastSquaresProblem, path: &Path) -> Result<()> {
    std::fs::write(path, problem_to_string(p))?;
    Ok(())
}

pub fn load_problem(path: &Path) -> Result<LeastSquaresProblem> {
    let text = std::fs::read_to_string(path)?;
    problem_from_string(&text)
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, name: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {name} from `{s}`"),
    })
}

fn parse_scalars(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid scalar `{tok}`"),
            })
        })
        .collect()
}

fn expect_section<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    tag: &str,
) -> Result<()> {
    match lines.next() {
        Some((_, line)) if line.trim() == tag => Ok(()),
        Some((lineno, line)) => Err(Error::Parse {
            line: lineno + 1,
            msg: format!("expected `{tag}`, found `{line}`"),
        }),
        None => Err(Error::Parse {
            line: 0,
            msg: format!("missing `{tag}` section"),
        }),
    }
}

fn read_vector_section<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    tag: &str,
    len: usize,
) -> Result<Vector> {
    expect_section(lines, tag)?;
    let (lineno, line) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: format!("truncated `{tag}` section"),
    })?;
    let vals = parse_scalars(line, lineno + 1)?;
    if vals.len() != len {
        return Err(Error::Parse {
            line: lineno + 1,
            msg: format!("expected {} entries, found {}", len, vals.len()),
        });
    }
    Vector::new(vals)
}

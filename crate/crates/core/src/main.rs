use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kaczmarz_lab::{
    build_column_operators, build_row_operators, check_ack_bound, check_acek_bound,
    check_ekt_bound, check_kt_bound, check_mrek_bound, check_mrk_contraction,
    check_rek_expectation, check_rk_expectation, classify_rate, error_trace, generate,
    load_problem, monte_carlo_expected_error, reference_solution, save_problem, solve_ekt,
    solve_extended_kaczmarz, solve_kaczmarz, solve_kt, svd, BoundReport, ControlKind, Error,
    IterateTrace, McSolver, RateClassification, RateVerdict, SolverConfig, Vector,
};

#[derive(Parser)]
#[command(name = "kaczmarz-lab", version, about = "Row-action least-squares solver lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic least-squares problem file.
    Generate(GenerateArgs),
    /// Run a solver and write a per-iteration CSV trace.
    Solve(SolveArgs),
    /// Replay a convergence bound against a fresh run and emit a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 10.0)]
    cond: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SolverName {
    Kt,
    Kaczmarz,
    Ekt,
    Ek,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ControlName {
    Cyclic,
    AlmostCyclic,
    Mr,
    Random,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_enum)]
    solver: SolverName,
    #[arg(long, value_enum, default_value = "cyclic")]
    control: ControlName,
    #[arg(long, value_enum)]
    col_control: Option<ControlName>,
    /// Window length for the almost-cyclic control.
    #[arg(long)]
    gamma: Option<usize>,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Starting point; only `zero` is supported.
    #[arg(long, default_value = "zero")]
    x0: String,
    #[arg(long)]
    trace_out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum BoundName {
    Kt,
    Ack,
    Mrk,
    Ekt,
    Mrek,
    Acek,
    Rk,
    Rek,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_enum)]
    bound: BoundName,
    #[arg(long)]
    gamma: Option<usize>,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long)]
    report: PathBuf,
    /// Exit 0 when the bound's hypotheses do not hold for this instance.
    #[arg(long)]
    allow_inapplicable: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    #[serde(flatten)]
    bound: BoundReport,
    classification: Option<ClassificationJson>,
}

#[derive(Serialize)]
struct ClassificationJson {
    verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_or_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
}

impl From<&RateClassification> for ClassificationJson {
    fn from(c: &RateClassification) -> Self {
        let (verdict, mu_or_delta, window) = match c.verdict {
            RateVerdict::Linear { mu } => ("Linear", Some(mu), None),
            RateVerdict::Sublinear => ("Sublinear", None, None),
            RateVerdict::WindowedSublinear { delta, window } => {
                ("WindowedSublinear", Some(delta), Some(window))
            }
            RateVerdict::Superlinear => ("Superlinear", None, None),
            RateVerdict::Inconclusive => ("Inconclusive", None, None),
        };
        ClassificationJson {
            verdict: verdict.to_string(),
            mu_or_delta,
            window,
        }
    }
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("KACZMARZ_LAB_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, Error> {
    let problem = generate(args.m, args.n, args.rank, args.noise, args.cond, args.seed)?;
    save_problem(&problem, &args.out)?;
    let dec = svd(&problem.a)?;
    let sigma_max = dec.singular_values[0];
    let sigma_min = dec.singular_values[dec.numeric_rank - 1];
    println!(
        "wrote {} ({}x{}, rank {}): sigma_max={sigma_max:.6e} sigma_min={sigma_min:.6e} |r|={:.6e}",
        args.out.display(),
        args.m,
        args.n,
        problem.rank,
        problem.r.norm()
    );
    Ok(ExitCode::SUCCESS)
}

fn make_control(
    name: ControlName,
    gamma: Option<usize>,
    count: usize,
    seed: u64,
) -> Result<ControlKind, Error> {
    Ok(match name {
        ControlName::Cyclic => ControlKind::Cyclic,
        ControlName::AlmostCyclic => {
            let window = gamma.ok_or_else(|| {
                Error::InvalidInput("--gamma is required for the almost-cyclic control".into())
            })?;
            if window < count {
                return Err(Error::InvalidWindow(format!(
                    "window {window} shorter than index count {count}"
                )));
            }
            ControlKind::AlmostCyclic { window, seed }
        }
        ControlName::Mr => ControlKind::MaximalResidual,
        ControlName::Random => ControlKind::Random { seed },
    })
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, Error> {
    if args.x0 != "zero" {
        return Err(Error::InvalidInput(format!(
            "unsupported starting point '{}'",
            args.x0
        )));
    }
    let extended = matches!(args.solver, SolverName::Ekt | SolverName::Ek);
    if args.col_control.is_some() && !extended {
        return Err(Error::InvalidInput(
            "--col-control only applies to the extended solvers".into(),
        ));
    }
    let problem = load_problem(&args.problem)?;
    let m = problem.a.rows();
    let n = problem.a.cols();
    let x0 = Vector::zeros(n)?;
    let row_control = make_control(args.control, args.gamma, m, args.seed)?;
    let mut cfg = SolverConfig::new(args.iters, row_control)?;
    if extended {
        let col = make_control(
            args.col_control.unwrap_or(ControlName::Cyclic),
            args.gamma,
            n,
            args.seed ^ 0x9E37_79B9_7F4A_7C15,
        )?;
        cfg = cfg.with_column_control(col);
    }
    let trace = match args.solver {
        SolverName::Kt => solve_kt(&problem.a, &problem.bhat, &x0, &cfg)?,
        SolverName::Kaczmarz => solve_kaczmarz(&problem.a, &problem.bhat, &x0, &cfg)?,
        SolverName::Ekt => solve_ekt(&problem.a, &problem.bhat, &x0, &cfg)?,
        SolverName::Ek => solve_extended_kaczmarz(&problem.a, &problem.bhat, &x0, &cfg)?,
    };
    let xstar = reference_solution(&problem.a, &problem.bhat, &x0)?;
    let csv = trace_to_csv(&trace, &xstar, &problem.r)?;
    std::fs::write(&args.trace_out, csv)?;
    println!(
        "wrote {} ({} iterations, final err {:.6e})",
        args.trace_out.display(),
        trace.iterations,
        trace.final_x().sub(&xstar).norm()
    );
    Ok(ExitCode::SUCCESS)
}

fn trace_to_csv(trace: &IterateTrace, xstar: &Vector, r: &Vector) -> Result<String, Error> {
    let errors = error_trace(trace, xstar)?;
    let mut out = String::from("k,row_index,col_index,err,err_sq,y_err\n");
    for (k, err) in errors.iter().enumerate() {
        let row = trace
            .row_indices
            .get(k.wrapping_sub(1))
            .filter(|_| k > 0)
            .map_or(String::new(), |i| i.to_string());
        let col = trace
            .col_indices
            .get(k.wrapping_sub(1))
            .filter(|_| k > 0)
            .map_or(String::new(), |j| j.to_string());
        let y_err = match &trace.ys {
            Some(ys) => format!("{}", ys[k].sub(r).norm()),
            None => String::new(),
        };
        writeln!(out, "{k},{row},{col},{err},{},{y_err}", err * err)
            .expect("string write cannot fail");
    }
    Ok(out)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    let problem = load_problem(&args.problem)?;
    let m = problem.a.rows();
    let n = problem.a.cols();
    let x0 = Vector::zeros(n)?;
    let xstar = reference_solution(&problem.a, &problem.bhat, &x0)?;
    let seed = args.seed;

    let gamma_for = |count: usize| -> Result<usize, Error> {
        let g = args.gamma.unwrap_or(count);
        if g < count {
            return Err(Error::InvalidWindow(format!(
                "window {g} shorter than index count {count}"
            )));
        }
        Ok(g)
    };

    let (bound, epsilons): (BoundReport, Vec<f64>) = match args.bound {
        BoundName::Kt => {
            let cfg = SolverConfig::new(args.iters, ControlKind::Cyclic)?;
            let trace = solve_kt(&problem.a, &problem.bhat, &x0, &cfg)?;
            let ops = build_row_operators(&problem.a, &(0..m).collect::<Vec<_>>())?;
            let report = check_kt_bound(&trace, &xstar, &ops)?;
            let eps = report.pairs.iter().map(|&(_, b)| b).collect();
            (report, eps)
        }
        BoundName::Ack => {
            let window = gamma_for(m)?;
            let cfg = SolverConfig::new(
                args.iters,
                ControlKind::AlmostCyclic { window, seed },
            )?;
            let trace = solve_kaczmarz(&problem.a, &problem.bhat, &x0, &cfg)?;
            let report = check_ack_bound(&problem.a, &trace, &xstar, window)?;
            let eps = report.pairs.iter().map(|&(_, b)| b).collect();
            (report, eps)
        }
        BoundName::Mrk => {
            let cfg = SolverConfig::new(args.iters, ControlKind::MaximalResidual)?;
            let trace = solve_kaczmarz(&problem.a, &problem.bhat, &x0, &cfg)?;
            let report = check_mrk_contraction(&trace, &xstar)?;
            let eps = error_trace(&trace, &xstar)?;
            (report, eps)
        }
        BoundName::Ekt => {
            let cfg = SolverConfig::new(args.iters, ControlKind::Cyclic)?;
            let trace = solve_ekt(&problem.a, &problem.bhat, &x0, &cfg)?;
            let row_ops = build_row_operators(&problem.a, &(0..m).collect::<Vec<_>>())?;
            let col_ops = build_column_operators(&problem.a)?;
            let report = check_ekt_bound(&trace, &xstar, &row_ops, &col_ops)?;
            let eps = report.pairs.iter().map(|&(_, b)| b).collect();
            (report, eps)
        }
        BoundName::Mrek => {
            let cfg = SolverConfig::new(args.iters, ControlKind::MaximalResidual)?
                .with_column_control(ControlKind::MaximalResidual);
            let trace = solve_extended_kaczmarz(&problem.a, &problem.bhat, &x0, &cfg)?;
            let report = check_mrek_bound(&problem.a, &trace, &xstar)?;
            let eps = error_trace(&trace, &xstar)?;
            (report, eps)
        }
        BoundName::Acek => {
            let window = gamma_for(m)?;
            let cfg = SolverConfig::new(
                args.iters,
                ControlKind::AlmostCyclic { window, seed },
            )?
            .with_column_control(ControlKind::AlmostCyclic {
                window: window.max(n),
                seed: seed ^ 0x9E37_79B9_7F4A_7C15,
            });
            let trace = solve_extended_kaczmarz(&problem.a, &problem.bhat, &x0, &cfg)?;
            let report = check_acek_bound(&problem.a, &trace, &xstar, window)?;
            let eps = error_trace(&trace, &xstar)?;
            (report, eps)
        }
        BoundName::Rk => {
            let means = monte_carlo_expected_error(
                &problem,
                McSolver::RandomKaczmarz,
                args.trials,
                args.iters,
                seed,
            )?;
            let report = check_rk_expectation(&problem, &means, 1.1)?;
            (report, means)
        }
        BoundName::Rek => {
            let means = monte_carlo_expected_error(
                &problem,
                McSolver::RandomExtendedKaczmarz,
                args.trials,
                args.iters,
                seed,
            )?;
            let report = check_rek_expectation(&problem, &means, 1.1)?;
            (report, means)
        }
    };

    let classification = classify_rate(&epsilons, kaczmarz_lab::analysis::CLASSIFY_TOLERANCE).ok();
    let verdict_desc = classification
        .as_ref()
        .map_or("n/a".to_string(), |c| match &c.verdict {
            RateVerdict::Linear { mu } => format!("linear(mu={mu:.4})"),
            RateVerdict::Sublinear => "sublinear".into(),
            RateVerdict::WindowedSublinear { delta, window } =>
                format!("windowed-sublinear(delta={delta:.4}, window={window})"),
            RateVerdict::Superlinear => "superlinear".into(),
            RateVerdict::Inconclusive => "inconclusive".into(),
        });
    let satisfied = bound.satisfied;
    let applicable = bound.applicable;
    let report = VerifyReport {
        bound,
        classification: classification.as_ref().map(ClassificationJson::from),
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Contract(format!("serialization failed: {e}")))?;
    std::fs::write(&args.report, json)?;
    println!(
        "wrote {} (satisfied={satisfied}, applicable={applicable}, verdict={verdict_desc})",
        args.report.display()
    );
    if !applicable && !args.allow_inapplicable {
        return Ok(ExitCode::from(1));
    }
    if satisfied {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

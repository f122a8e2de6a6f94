//! Command-line driver: generate instance files, solve them with any of the
//! five solvers, run directory-level benchmarks, and cross-check small
//! instances against the enumeration oracle.
//!
//! Exit codes: 0 solved to tolerance, 2 iteration limit hit, 3 bad input.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use blockqp::gen::{
    gen_cta, gen_mcf, gen_random, random_linear_costs, random_mcf, McfObjective, RandKind,
};
use blockqp::{
    check_theorem1, palm_solve, BlockAngularProblem, MajorizerKind, PalmParams, PalmVariant,
    PrimalDualIterate, ProximalMajorizer, SgsAdmmParams, SolveReport, Termination,
};

use blockqp_cli::io::{read_problem, write_problem};
use blockqp_cli::oracle::oracle_solve;

#[derive(Parser)]
#[command(name = "blockqp", version, about = "solvers for block-angular convex QPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file
    Gen(GenArgs),
    /// Solve an instance file and print a summary
    Solve(SolveArgs),
    /// Solve every instance in a directory with one or more solvers
    Bench(BenchArgs),
    /// Solve a small instance and verify it against the enumeration oracle
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    RandT1,
    RandT2,
    Cta,
    McfLinear,
    McfQuad,
    McfKleinrock,
    McfBpr,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    SgsAdmm,
    Spalm,
    SpalmB,
    Dqa,
    Iapg,
}

impl SolverKind {
    fn name(self) -> &'static str {
        match self {
            SolverKind::SgsAdmm => "sgs-admm",
            SolverKind::Spalm => "spalm",
            SolverKind::SpalmB => "spalm-b",
            SolverKind::Dqa => "dqa",
            SolverKind::Iapg => "iapg",
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// output path
    #[arg(short, long)]
    output: PathBuf,
    /// number of blocks (rand and cta families; mcf uses --commodities)
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    /// local rows per block (rand families)
    #[arg(long, default_value_t = 4)]
    mi: usize,
    /// variables per block (rand families)
    #[arg(long, default_value_t = 10)]
    ni: usize,
    /// table rows (cta)
    #[arg(long, default_value_t = 6)]
    rows: usize,
    /// table columns (cta)
    #[arg(long, default_value_t = 8)]
    cols: usize,
    #[arg(long, default_value_t = 12)]
    nodes: usize,
    #[arg(long, default_value_t = 30)]
    arcs: usize,
    #[arg(long, default_value_t = 4)]
    commodities: usize,
    /// diagonal weight for mcf-quad
    #[arg(long, default_value_t = 1.0)]
    quad_weight: f64,
    #[arg(long, default_value_t = 0.15)]
    bpr_b: f64,
    #[arg(long, default_value_t = 4.0)]
    bpr_beta: f64,
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverKind::SgsAdmm)]
    solver: SolverKind,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// multiplier step length (defaults: 1.618 for sgs-admm, 1.9 otherwise)
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    /// rayon worker count (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// write the full solve report as JSON
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// directory of instance files
    #[arg(long)]
    dir: PathBuf,
    /// comma-separated solver list
    #[arg(long, value_delimiter = ',', default_value = "sgs-admm")]
    solvers: Vec<SolverKind>,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long)]
    threads: Option<usize>,
    /// output stem; writes <out>.md and <out>.json
    #[arg(long, default_value = "bench-report")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverKind::SgsAdmm)]
    solver: SolverKind,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

fn build_instance(args: &GenArgs) -> Result<BlockAngularProblem, blockqp::Error> {
    match args.family {
        Family::RandT1 => gen_random(args.mi, args.ni, args.blocks, RandKind::T1, args.seed),
        Family::RandT2 => gen_random(args.mi, args.ni, args.blocks, RandKind::T2, args.seed),
        Family::Cta => gen_cta(args.rows, args.cols, args.blocks, args.seed),
        Family::McfLinear | Family::McfQuad | Family::McfKleinrock | Family::McfBpr => {
            let (graph, commodities) =
                random_mcf(args.nodes, args.arcs, args.commodities, args.seed)?;
            let objective = match args.family {
                Family::McfLinear => {
                    McfObjective::Linear(random_linear_costs(graph.arcs.len(), args.seed ^ 0x9e37))
                }
                Family::McfQuad => McfObjective::Quad(args.quad_weight),
                Family::McfKleinrock => McfObjective::Kleinrock,
                _ => McfObjective::Bpr { b: args.bpr_b, beta: args.bpr_beta },
            };
            let mut p = gen_mcf(&graph, &commodities, &objective)?;
            p.meta.seed = args.seed;
            Ok(p)
        }
    }
}

fn run_solver(
    problem: &BlockAngularProblem,
    solver: SolverKind,
    tol: f64,
    tau: Option<f64>,
    sigma: f64,
    max_iter: Option<usize>,
) -> Result<(PrimalDualIterate, SolveReport), blockqp::Error> {
    match solver {
        SolverKind::SgsAdmm => {
            let mut params = SgsAdmmParams { tol, sigma0: sigma, ..Default::default() };
            if let Some(t) = tau {
                params.tau = t;
            }
            if let Some(mi) = max_iter {
                params.max_iter = mi;
            }
            blockqp::sgs::solve(problem, params)
        }
        _ => {
            let variant = match solver {
                SolverKind::Spalm => PalmVariant::Spalm,
                SolverKind::SpalmB => PalmVariant::SpalmB,
                SolverKind::Dqa => PalmVariant::Dqa,
                SolverKind::Iapg => PalmVariant::Iapg,
                SolverKind::SgsAdmm => unreachable!(),
            };
            let mut params = PalmParams { variant, tol, sigma, ..Default::default() };
            if let Some(t) = tau {
                params.tau = t;
            }
            if let Some(mi) = max_iter {
                params.max_outer = mi;
            }
            let out = palm_solve(problem, &params)?;
            Ok((out.iterate, out.report))
        }
    }
}

fn with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool")
            .install(f),
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(3)
}

fn print_summary(report: &SolveReport, n: usize) {
    let r = &report.final_residuals;
    println!(
        "{}: {} vars, {} iterations ({} inner), {:.3}s",
        report.solver, n, report.iterations, report.inner_iterations, report.wall_time_s
    );
    println!(
        "  objective {:.10e}   eta {:.3e} (P {:.1e} D {:.1e} Q {:.1e} K {:.1e} S {:.1e})",
        r.primal_obj, r.eta, r.eta_p, r.eta_d, r.eta_q, r.eta_k, r.eta_s
    );
    match &report.termination {
        Termination::Converged => println!("  converged"),
        Termination::MaxIterations => println!("  iteration limit reached"),
        Termination::Failed(m) => println!("  failed: {m}"),
    }
}

fn cmd_gen(args: &GenArgs) -> ExitCode {
    let problem = match build_instance(args) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    if let Err(e) = write_problem(&problem, &args.output) {
        return fail(e);
    }
    println!(
        "wrote {} ({} blocks, {} vars, {} coupling rows)",
        args.output.display(),
        problem.blocks.len(),
        problem.total_dim(),
        problem.m0()
    );
    ExitCode::SUCCESS
}

fn cmd_solve(args: &SolveArgs) -> ExitCode {
    let problem = match read_problem(&args.input) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let result = with_threads(args.threads, || {
        run_solver(&problem, args.solver, args.tol, args.tau, args.sigma, args.max_iter)
    });
    let (_it, report) = match result {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    print_summary(&report, problem.total_dim());
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        if let Err(e) = std::fs::write(path, json) {
            return fail(e);
        }
    }
    match report.termination {
        Termination::Converged => ExitCode::SUCCESS,
        Termination::MaxIterations => ExitCode::from(2),
        Termination::Failed(_) => ExitCode::from(3),
    }
}

#[derive(Serialize)]
struct BenchRow {
    instance: String,
    solver: String,
    vars: usize,
    iterations: usize,
    inner_iterations: usize,
    time_s: f64,
    eta: f64,
    objective: f64,
    converged: bool,
}

fn cmd_bench(args: &BenchArgs) -> ExitCode {
    let mut files: Vec<PathBuf> = match std::fs::read_dir(&args.dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "bap"))
            .collect(),
        Err(e) => return fail(format!("{}: {e}", args.dir.display())),
    };
    files.sort();
    if files.is_empty() {
        return fail(format!("no .bap files in {}", args.dir.display()));
    }
    let mut rows: Vec<BenchRow> = Vec::new();
    for file in &files {
        let problem = match read_problem(file) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        let stem = file.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        for &solver in &args.solvers {
            let start = Instant::now();
            let outcome = with_threads(args.threads, || {
                run_solver(&problem, solver, args.tol, None, 1.0, None)
            });
            match outcome {
                Ok((_, report)) => {
                    println!(
                        "{stem} / {}: {} iterations, {:.3}s, eta {:.2e}",
                        solver.name(),
                        report.iterations,
                        report.wall_time_s,
                        report.final_residuals.eta
                    );
                    rows.push(BenchRow {
                        instance: stem.clone(),
                        solver: solver.name().into(),
                        vars: problem.total_dim(),
                        iterations: report.iterations,
                        inner_iterations: report.inner_iterations,
                        time_s: report.wall_time_s,
                        eta: report.final_residuals.eta,
                        objective: report.final_residuals.primal_obj,
                        converged: report.converged(),
                    });
                }
                Err(e) => {
                    eprintln!("{stem} / {}: failed after {:.3}s: {e}", solver.name(), start.elapsed().as_secs_f64());
                    rows.push(BenchRow {
                        instance: stem.clone(),
                        solver: solver.name().into(),
                        vars: problem.total_dim(),
                        iterations: 0,
                        inner_iterations: 0,
                        time_s: start.elapsed().as_secs_f64(),
                        eta: f64::INFINITY,
                        objective: f64::NAN,
                        converged: false,
                    });
                }
            }
        }
    }
    let json_path = args.out.with_extension("json");
    let md_path = args.out.with_extension("md");
    if let Err(e) =
        std::fs::write(&json_path, serde_json::to_string_pretty(&rows).expect("rows serialize"))
    {
        return fail(e);
    }
    let mut md = String::from("| Data | Solver | Vars | Iter | Time (s) | eta | Objective |\n");
    md.push_str("|---|---|---:|---:|---:|---:|---:|\n");
    for r in &rows {
        md.push_str(&format!(
            "| {} | {} | {} | {} | {:.3} | {:.2e} | {:.8e} |\n",
            r.instance, r.solver, r.vars, r.iterations, r.time_s, r.eta, r.objective
        ));
    }
    if let Err(e) = std::fs::write(&md_path, md) {
        return fail(e);
    }
    println!("wrote {} and {}", md_path.display(), json_path.display());
    if rows.iter().all(|r| r.converged) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn cmd_check(args: &CheckArgs) -> ExitCode {
    let problem = match read_problem(&args.input) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let (it, report) =
        match run_solver(&problem, args.solver, args.tol, None, 1.0, None) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
    print_summary(&report, problem.total_dim());
    if !report.converged() {
        return ExitCode::from(2);
    }
    let oracle = match oracle_solve(&problem) {
        Ok(s) => s,
        Err(e) => return fail(format!("oracle: {e}")),
    };
    let obj = report.final_residuals.primal_obj;
    let obj_gap = (obj - oracle.objective).abs() / (1.0 + oracle.objective.abs());
    let flat = it.x.concat();
    let x_gap = flat
        .iter()
        .zip(&oracle.x)
        .fold(0.0f64, |a, (s, o)| a.max((s - o).abs()))
        / (1.0 + oracle.x.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    println!(
        "oracle: objective {:.10e} over {} activity cells",
        oracle.objective, oracle.cells_checked
    );
    println!("  relative objective gap {obj_gap:.3e}, scaled max solution gap {x_gap:.3e}");
    if obj_gap > 1e-4 || x_gap > 1e-4 {
        eprintln!("error: solver disagrees with oracle");
        return ExitCode::from(3);
    }
    // descent certificate: replay a proximal ALM run and verify its Lyapunov
    // decrease against the oracle's optimum as reference point
    let cert_params = PalmParams {
        variant: PalmVariant::Spalm,
        tau: 1.0,
        tol: 1e-7,
        max_outer: 500,
        record_trace: true,
        ..Default::default()
    };
    let outcome = match palm_solve(&problem, &cert_params) {
        Ok(o) => o,
        Err(e) => return fail(format!("certificate run: {e}")),
    };
    let trace = outcome.trace.expect("trace was requested");
    let x_ref = match problem.split_blocks(&oracle.x) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let y0_ref = &oracle.multipliers[..problem.m0()];
    let maj = ProximalMajorizer::build(&problem, MajorizerKind::CrossNorm);
    let cert = check_theorem1(&problem, &maj, 1.0, 1.0, &trace, &x_ref, y0_ref, 1e-8);
    println!(
        "certificate: {} over {} transitions (min normalized slack {:.3e})",
        if cert.passed { "nonincreasing" } else { "VIOLATED" },
        cert.slacks.len(),
        cert.min_slack
    );
    if cert.passed {
        println!("  check passed");
        ExitCode::SUCCESS
    } else {
        eprintln!("error: descent certificate violated");
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Check(args) => cmd_check(args),
    }
}

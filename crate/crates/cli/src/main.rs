//! The `wtm` binary: solve linear SPD ODE systems by waveform transmission.
//!
//! Subcommands:
//! - `run <problem>`: solve a problem file, writing `solution.csv`,
//!   `convergence.csv` and `twins.csv` into the output directory
//! - `demo`: materialize the bundled capacity-resistor demo and run it with
//!   reference tracking on
//! - `validate <problem>`: report SPD, partition and subgraph checks
//!
//! Exit codes: 0 converged, 1 usage/parse/validation error, 2 not
//! converged within the sweep budget, 3 diverged.

mod demo;
mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use wtm_core::{
    orchestrator, validate_spd, validate_system, CheckOutcome, Error, ImpedanceDirective,
    ImpedanceSpec, ParsedProblem, RunConfig, Solution, TimeGrid,
};

#[derive(Parser)]
#[command(
    name = "wtm",
    version,
    about = "Waveform transmission solver for SPD ODE systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and write the solution and convergence CSVs
    Run {
        /// Problem file path
        problem: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Materialize the built-in capacity-resistor demo and run it
    Demo {
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Check a problem file: SPD system, partition legality, subgraph SNND
    Validate {
        /// Problem file path
        problem: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SolveOpts {
    /// Stopping tolerance on the successive-iterate max difference
    #[arg(long)]
    tol: Option<f64>,
    /// Sweep budget
    #[arg(long = "max-sweeps")]
    max_sweeps: Option<usize>,
    /// Time-step override (the window stays as configured)
    #[arg(long)]
    h: Option<f64>,
    /// Constant characteristic impedance override
    #[arg(long, allow_negative_numbers = true)]
    z: Option<f64>,
    /// Transmission delay in sweep units
    #[arg(long)]
    rho: Option<usize>,
    /// Worker threads for the per-sweep solves
    #[arg(long)]
    workers: Option<usize>,
    /// Track per-twin error against the monolithic reference solution
    #[arg(long = "with-reference")]
    with_reference: bool,
    /// Output directory (default: $WTM_OUT, else the current directory)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolveOpts {
    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os("WTM_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match cli.command {
        Command::Run { problem, opts } => cmd_run(&problem, &opts),
        Command::Demo { opts } => cmd_demo(&opts),
        Command::Validate { problem } => cmd_validate(&problem),
    };
    std::process::exit(code);
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Diverged { .. } => 3,
        _ => 1,
    }
}

fn fail(e: Error) -> i32 {
    eprintln!("wtm: {e}");
    exit_code(&e)
}

fn cmd_run(problem: &Path, opts: &SolveOpts) -> i32 {
    match solve_problem(problem, opts) {
        Ok(outcome) => outcome,
        Err(e) => fail(e),
    }
}

fn cmd_demo(opts: &SolveOpts) -> i32 {
    let out_dir = opts.out_dir();
    if let Err(e) = fs::create_dir_all(&out_dir) {
        return fail(e.into());
    }
    let problem_path = out_dir.join("demo.problem");
    if let Err(e) = fs::write(&problem_path, demo::demo_problem_text()) {
        return fail(e.into());
    }
    println!("demo problem written to {}", problem_path.display());
    // the demo always tracks the reference; its output is the error curve
    let mut demo_opts = opts.clone();
    demo_opts.with_reference = true;
    demo_opts.out = Some(out_dir);
    match solve_problem(&problem_path, &demo_opts) {
        Ok(outcome) => outcome,
        Err(e) => fail(e),
    }
}

/// Parses, applies flag overrides, runs, writes artifacts. Returns the
/// process exit code for a completed run.
fn solve_problem(problem: &Path, opts: &SolveOpts) -> Result<i32, Error> {
    let text = fs::read_to_string(problem)
        .map_err(|e| Error::Io(format!("{}: {e}", problem.display())))?;
    let parsed = wtm_core::parse_problem(&text)?;
    let cfg = build_config(problem, &parsed, opts)?;

    let reference = if opts.with_reference {
        Some(orchestrator::reference_solve(&parsed.system, &cfg.grid)?)
    } else {
        None
    };
    let solution = orchestrator::run_with_reference(
        &parsed.system,
        &parsed.partition,
        &cfg,
        reference.as_deref(),
    )?;

    let out_dir = opts.out_dir();
    fs::create_dir_all(&out_dir).map_err(Error::from)?;
    write_artifacts(&out_dir, &cfg.grid, &solution)?;
    let last = solution
        .error_curve
        .last()
        .map(|r| r.successive_diff)
        .unwrap_or(0.0);
    if solution.converged {
        println!(
            "converged after {} sweeps (successive diff {:.3e} <= tol {:.3e})",
            solution.sweeps_used, last, cfg.tol
        );
        Ok(0)
    } else {
        println!(
            "not converged after {} sweeps (successive diff {:.3e} > tol {:.3e})",
            solution.sweeps_used, last, cfg.tol
        );
        Ok(2)
    }
}

fn build_config(
    problem: &Path,
    parsed: &ParsedProblem,
    opts: &SolveOpts,
) -> Result<RunConfig, Error> {
    let grid = match opts.h {
        Some(h) => TimeGrid::new(parsed.grid.t_start(), parsed.grid.t_end(), h)?,
        None => parsed.grid.clone(),
    };
    let impedance = match (&opts.z, &parsed.impedance) {
        (Some(z), _) => ImpedanceSpec::Constant(*z),
        (None, ImpedanceDirective::Constant(z)) => ImpedanceSpec::Constant(*z),
        (None, ImpedanceDirective::SamplesFile(rel)) => {
            let path = problem.parent().unwrap_or(Path::new(".")).join(rel);
            let csv = fs::read_to_string(&path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            // samples must match the effective grid, including -h overrides
            let mut for_grid = parsed.clone();
            for_grid.grid = grid.clone();
            for_grid.impedance_from_csv(&csv)?
        }
    };
    let mut cfg = parsed.config_with(impedance);
    cfg.grid = grid;
    if let Some(tol) = opts.tol {
        cfg.tol = tol;
    }
    if let Some(max_sweeps) = opts.max_sweeps {
        cfg.max_sweeps = max_sweeps;
    }
    if let Some(rho) = opts.rho {
        cfg.delay = rho;
    }
    if let Some(workers) = opts.workers {
        cfg.workers = workers;
    }
    Ok(cfg)
}

fn write_artifacts(out_dir: &Path, grid: &TimeGrid, solution: &Solution) -> Result<(), Error> {
    let solution_path = out_dir.join("solution.csv");
    output::write_solution_csv(&solution_path, grid, solution)?;
    let convergence_path = out_dir.join("convergence.csv");
    output::write_convergence_csv(&convergence_path, solution)?;
    let twins_path = out_dir.join("twins.csv");
    output::write_twins_csv(&twins_path, solution)?;
    println!(
        "wrote {}, {}, {}",
        solution_path.display(),
        convergence_path.display(),
        twins_path.display()
    );
    Ok(())
}

fn cmd_validate(problem: &Path) -> i32 {
    let text = match fs::read_to_string(problem) {
        Ok(t) => t,
        Err(e) => return fail(Error::Io(format!("{}: {e}", problem.display()))),
    };
    let parsed = match wtm_core::parse_problem(&text) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let sys = &parsed.system;
    println!(
        "system: n={}, window [{}, {}] h={}",
        sys.n,
        parsed.grid.t_start(),
        parsed.grid.t_end(),
        parsed.grid.step()
    );

    let mut first_failure: Option<String> = None;
    let mut record = |name: &str, outcome: Option<String>| match outcome {
        None => println!("check {name}: ok"),
        Some(reason) => {
            println!("check {name}: FAIL: {reason}");
            if first_failure.is_none() {
                first_failure = Some(name.to_string());
            }
        }
    };

    let report = validate_system(sys);
    record(
        "system dimensions",
        report.failures.iter().find(|f| !f.contains("SPD")).cloned(),
    );
    record(
        "C SPD",
        match validate_spd(&sys.c) {
            CheckOutcome::Pass => None,
            CheckOutcome::Fail(r) => Some(r),
        },
    );
    record(
        "A SPD",
        match validate_spd(&sys.a) {
            CheckOutcome::Pass => None,
            CheckOutcome::Fail(r) => Some(r),
        },
    );

    for b in &parsed.partition.boundary {
        println!(
            "boundary vertex {}: parts {}|{}, fractions fC={:.6} fA={:.6} fb={:.6}",
            b.vertex, b.part_a, b.part_b, b.fractions.c, b.fractions.a, b.fractions.b
        );
    }
    match wtm_core::split(sys, &parsed.partition) {
        Ok((subs, twins)) => {
            record("partition legality", None);
            println!(
                "partition: {} parts, {} transmission line(s)",
                subs.len(),
                twins.len()
            );
            // split() already enforced SNND; report it per part
            for sub in &subs {
                record(&format!("part {} C SNND", sub.label), None);
                record(&format!("part {} A SNND", sub.label), None);
            }
        }
        Err(e @ Error::SubgraphNotSnnd { .. }) => {
            record("partition legality", None);
            record("subgraph SNND", Some(e.to_string()));
        }
        Err(e) => {
            record("partition legality", Some(e.to_string()));
        }
    }

    match first_failure {
        None => {
            println!("result: all checks passed");
            0
        }
        Some(name) => {
            eprintln!("wtm: validation failed at check `{name}`");
            1
        }
    }
}

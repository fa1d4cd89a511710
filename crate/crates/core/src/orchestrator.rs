//! The distributed iteration: Jacobi sweeps over all subproblems with
//! waveform exchanges at the end-of-sweep barrier.
//!
//! Within a sweep every subproblem reads only sweep `k - delay` data, so the
//! solves are independent and may run on any number of workers; the outputs
//! are committed to the line histories in one barrier step. Results are
//! bit-identical regardless of worker count or scheduling.

use std::sync::Arc;

use rayon::prelude::*;

use crate::config::{ImpedanceSpec, RunConfig};
use crate::error::{Error, Result};
use crate::evs::{self, PartitionSpec, PortSide, Subproblem, TwinMismatch, TwinPair};
use crate::graph::{validate_system, OdeSystem};
use crate::subsolver::{self, LocalSolveInput, LocalSolveOutput};
use crate::waveform::{self, TimeGrid, Waveform};
use crate::wtl::{ImpedanceWaveform, Wtl};

/// Max-abs error of one twin potential against the reference row.
#[derive(Debug, Clone)]
pub struct TwinRefError {
    pub wtl: usize,
    pub vertex: usize,
    /// Part id (as labelled in the partition) owning this twin.
    pub part: usize,
    pub err: f64,
}

/// One row of the convergence history.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub sweep: usize,
    pub successive_diff: f64,
    /// Present only when a reference solution is being tracked.
    pub reference_errors: Vec<TwinRefError>,
}

/// Mutable state of the iteration: completed sweep counter, last outputs,
/// line histories and the recorded error curve.
#[derive(Debug)]
pub struct SweepState {
    pub grid: Arc<TimeGrid>,
    /// Last completed sweep; 0 means only initial waveforms exist.
    pub sweep: i64,
    /// Outputs of the last completed sweep, one per subproblem.
    pub outputs: Vec<LocalSolveOutput>,
    pub wtls: Vec<Wtl>,
    pub error_curve: Vec<SweepRecord>,
}

impl SweepState {
    pub fn new(grid: Arc<TimeGrid>, wtls: Vec<Wtl>) -> Self {
        SweepState {
            grid,
            sweep: 0,
            outputs: Vec::new(),
            wtls,
            error_curve: Vec::new(),
        }
    }
}

/// Final result of a run.
#[derive(Debug, Clone)]
pub struct Solution {
    /// One waveform per original vertex (twins averaged).
    pub merged: Vec<Waveform>,
    /// Per-twin waveforms and their mismatch.
    pub twins: Vec<TwinMismatch>,
    pub sweeps_used: usize,
    pub converged: bool,
    pub error_curve: Vec<SweepRecord>,
}

/// Runs the subproblem solves of one sweep, sequentially or on a pool.
/// Outputs keep subproblem order; the first failure by subproblem order wins.
pub fn parallel_execute(
    inputs: &[LocalSolveInput<'_>],
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<LocalSolveOutput>> {
    let results: Vec<Result<LocalSolveOutput>> = match pool {
        None => inputs.iter().map(subsolver::local_solve).collect(),
        Some(p) => p.install(|| inputs.par_iter().map(subsolver::local_solve).collect()),
    };
    let mut outputs = Vec::with_capacity(results.len());
    for r in results {
        outputs.push(r?);
    }
    Ok(outputs)
}

/// Advances the state by one sweep: exchange, solve everywhere, barrier
/// commit, then record the successive-iterate difference.
pub fn sweep(
    state: &mut SweepState,
    subs: &[Subproblem],
    pool: Option<&rayon::ThreadPool>,
    divergence_cap: f64,
    reference: Option<&[Waveform]>,
    part_labels: &[usize],
) -> Result<f64> {
    let k = state.sweep + 1;

    // incident waves for both sides of every line, from sweep k - delay
    let exchanged: Vec<(Waveform, Waveform)> = state
        .wtls
        .iter()
        .map(|w| w.exchange(k))
        .collect::<Result<_>>()?;

    let inputs: Vec<LocalSolveInput<'_>> = subs
        .iter()
        .map(|sub| {
            let incident = sub
                .ports
                .iter()
                .map(|p| match p.side {
                    PortSide::One => exchanged[p.wtl].0.clone(),
                    PortSide::Two => exchanged[p.wtl].1.clone(),
                })
                .collect();
            let z = sub
                .ports
                .iter()
                .map(|p| state.wtls[p.wtl].impedance().clone())
                .collect();
            LocalSolveInput {
                sub,
                incident,
                z,
                grid: state.grid.clone(),
            }
        })
        .collect();
    let outputs = parallel_execute(&inputs, pool)?;
    drop(inputs);

    for out in &outputs {
        for w in out
            .x
            .iter()
            .chain(out.ports.iter().flat_map(|p| [&p.u, &p.i]))
        {
            let mag = w.max_abs();
            if mag > divergence_cap {
                return Err(Error::Diverged {
                    sweep: k as usize,
                    magnitude: mag,
                });
            }
        }
    }

    // barrier: commit all port states for sweep k
    let routing = route_ports(subs, state.wtls.len());
    for (wtl_idx, wtl) in state.wtls.iter_mut().enumerate() {
        let (s1, s2) = routing[wtl_idx];
        let p1 = outputs[s1.0].ports[s1.1].clone();
        let p2 = outputs[s2.0].ports[s2.1].clone();
        wtl.push_history(k, p1, p2)?;
    }

    // Successive-iterate difference. Sweep k was computed from sweep
    // k - delay, its predecessor in the delay chain; adjacent sweeps belong
    // to different chains when delay > 1. With delay 1 this is u^k vs u^{k-1}.
    let mut successive = 0.0f64;
    for wtl in &state.wtls {
        let lag = wtl.delay() as i64;
        for side in [PortSide::One, PortSide::Two] {
            let now = wtl.port_state(side, k).expect("state just pushed");
            let before = wtl.port_state(side, k - lag).ok_or(Error::MissingHistory {
                wtl: wtl.id,
                sweep: k - lag,
            })?;
            successive = successive.max(waveform::max_abs_diff(&now.u, &before.u)?);
        }
    }

    state.sweep = k;
    state.outputs = outputs;
    let reference_errors = match reference {
        Some(r) => error_curve_vs_reference(state, r, part_labels)?,
        None => Vec::new(),
    };
    state.error_curve.push(SweepRecord {
        sweep: k as usize,
        successive_diff: successive,
        reference_errors,
    });
    Ok(successive)
}

/// (subproblem index, port position) of each side of every line.
fn route_ports(subs: &[Subproblem], n_wtls: usize) -> Vec<((usize, usize), (usize, usize))> {
    let mut routing = vec![((usize::MAX, 0), (usize::MAX, 0)); n_wtls];
    for (si, sub) in subs.iter().enumerate() {
        for (pi, port) in sub.ports.iter().enumerate() {
            match port.side {
                PortSide::One => routing[port.wtl].0 = (si, pi),
                PortSide::Two => routing[port.wtl].1 = (si, pi),
            }
        }
    }
    routing
}

/// Max-abs error of every twin potential of the current sweep against the
/// reference rows; the data behind a convergence-curve plot.
pub fn error_curve_vs_reference(
    state: &SweepState,
    reference: &[Waveform],
    part_labels: &[usize],
) -> Result<Vec<TwinRefError>> {
    let mut rows = Vec::with_capacity(state.wtls.len() * 2);
    for wtl in &state.wtls {
        let vertex = wtl.twin.vertex;
        let r = reference.get(vertex).ok_or_else(|| {
            Error::Dimension(format!("reference has no waveform for vertex {vertex}"))
        })?;
        for (side, part) in [
            (PortSide::One, wtl.twin.port1.part),
            (PortSide::Two, wtl.twin.port2.part),
        ] {
            let st = wtl
                .port_state(side, state.sweep)
                .ok_or(Error::MissingHistory {
                    wtl: wtl.id,
                    sweep: state.sweep,
                })?;
            rows.push(TwinRefError {
                wtl: wtl.id,
                vertex,
                part: part_labels.get(part).copied().unwrap_or(part),
                err: waveform::max_abs_diff(&st.u, r)?,
            });
        }
    }
    Ok(rows)
}

/// Backward-Euler solution of the undecomposed system on the same grid and
/// scheme as the subproblem solves; the reference the error curves compare
/// against.
pub fn reference_solve(sys: &OdeSystem, grid: &TimeGrid) -> Result<Vec<Waveform>> {
    let report = validate_system(sys);
    if !report.is_pass() {
        return Err(Error::InvalidSystem(report.failures.join("; ")));
    }
    let n = sys.n;
    let h = grid.step();
    let mut m = sys.a.dense();
    m += sys.c.dense() * (1.0 / h);
    let chol = nalgebra::Cholesky::new(m)
        .ok_or_else(|| Error::NotSpd(format!("{n}x{n} reference step matrix")))?;
    let c_dense = sys.c.dense();
    let shared = Arc::new(grid.clone());
    let n_points = grid.n_points();
    let mut columns: Vec<Vec<f64>> = (0..n).map(|_| Vec::with_capacity(n_points)).collect();
    let mut prev = nalgebra::DVector::from_iterator(n, sys.x0.iter().copied());
    for (row, v) in prev.iter().enumerate() {
        columns[row].push(*v);
    }
    for _ in 1..n_points {
        let mut rhs = &c_dense * &prev;
        rhs *= 1.0 / h;
        for row in 0..n {
            rhs[row] += sys.b[row];
        }
        let x = chol.solve(&rhs);
        for (row, v) in x.iter().enumerate() {
            columns[row].push(*v);
        }
        prev = x;
    }
    columns
        .into_iter()
        .map(|s| Waveform::from_samples(shared.clone(), s))
        .collect()
}

/// Pieces shared by `run` and the validation command: the split system with
/// its lines ready to iterate.
pub struct Prepared {
    pub grid: Arc<TimeGrid>,
    pub subs: Vec<Subproblem>,
    pub twins: Vec<TwinPair>,
    pub wtls: Vec<Wtl>,
    pub part_labels: Vec<usize>,
}

/// Validates, splits and wires up the transmission lines with initialized
/// histories. Fails before any iteration on an invalid system, partition or
/// impedance.
pub fn prepare(sys: &OdeSystem, p: &PartitionSpec, cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let report = validate_system(sys);
    if !report.is_pass() {
        return Err(Error::InvalidSystem(report.failures.join("; ")));
    }
    let grid = Arc::new(cfg.grid.clone());
    let z = match &cfg.impedance {
        ImpedanceSpec::Constant(v) => ImpedanceWaveform::constant(grid.clone(), *v)?,
        ImpedanceSpec::Samples(w) => {
            if w.grid().as_ref() != grid.as_ref() {
                return Err(Error::GridMismatch {
                    context: "impedance samples vs run grid",
                });
            }
            ImpedanceWaveform::new(Waveform::from_samples(grid.clone(), w.samples().to_vec())?)?
        }
    };
    let (subs, twins) = evs::split(sys, p)?;
    let part_labels: Vec<usize> = subs.iter().map(|s| s.label).collect();
    let mut wtls = Vec::with_capacity(twins.len());
    for twin in &twins {
        let mut wtl = Wtl::new(twin.wtl, twin.clone(), z.clone(), cfg.delay)?;
        wtl.init_history(cfg.init_policy, sys.x0[twin.vertex], &grid);
        wtls.push(wtl);
    }
    Ok(Prepared {
        grid,
        subs,
        twins,
        wtls,
        part_labels,
    })
}

/// Runs the full distributed iteration until the successive-iterate
/// difference drops to `tol`, the sweep budget runs out, or a waveform
/// exceeds the divergence cap.
pub fn run(sys: &OdeSystem, p: &PartitionSpec, cfg: &RunConfig) -> Result<Solution> {
    run_with_reference(sys, p, cfg, None)
}

/// Like [`run`], additionally recording per-twin errors against a reference
/// solution (same grid) at every sweep.
pub fn run_with_reference(
    sys: &OdeSystem,
    p: &PartitionSpec,
    cfg: &RunConfig,
    reference: Option<&[Waveform]>,
) -> Result<Solution> {
    let prepared = prepare(sys, p, cfg)?;
    let pool = if cfg.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| Error::Io(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let mut state = SweepState::new(prepared.grid.clone(), prepared.wtls);
    let mut converged = false;
    for _ in 0..cfg.max_sweeps {
        let successive = sweep(
            &mut state,
            &prepared.subs,
            pool.as_ref(),
            cfg.divergence_cap,
            reference,
            &prepared.part_labels,
        )?;
        if successive <= cfg.tol {
            converged = true;
            break;
        }
    }

    let waves: Vec<Vec<Waveform>> = state.outputs.iter().map(|o| o.x.clone()).collect();
    let merged = evs::merge_solution(sys.n, &prepared.subs, &prepared.twins, &waves)?;
    Ok(Solution {
        merged: merged.global,
        twins: merged.twins,
        sweeps_used: state.sweep as usize,
        converged,
        error_curve: state.error_curve,
    })
}

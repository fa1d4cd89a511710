//! Waveform Transmission Method solver for linear SPD ODE systems.
//!
//! Solves `C dx/dt + A x = b`, `x(0) = x0` with symmetric positive definite
//! `C` and `A` by splitting the system's electric graph along a vertex
//! boundary, coupling the parts with virtual waveform transmission lines,
//! and iterating whole-window waveform exchanges until the distributed
//! solution matches the monolithic one.
//!
//! The crate is organized along the pipeline:
//!
//! - [`waveform`]: uniform-grid waveforms and their arithmetic
//! - [`graph`]: the ODE system model and SPD/SNND validation
//! - [`parse`]: the problem-file format
//! - [`evs`]: electric vertex splitting into subproblems with twin ports
//! - [`wtl`]: waveform transmission lines (impedance, history, exchange)
//! - [`subsolver`]: per-sweep backward-Euler solve of one subproblem
//! - [`orchestrator`]: the Jacobi sweep loop, reference solve, parallelism
//!
//! ```
//! use wtm_core::{
//!     BoundaryVertex, ImpedanceSpec, OdeSystem, PartitionSpec, RunConfig,
//!     SplitFractions, SymMatrix, TimeGrid,
//! };
//!
//! // one RC vertex, C = 3, G = 1.5, driven by b = 3
//! let mut c = SymMatrix::new(1);
//! c.insert(0, 0, 3.0).unwrap();
//! let mut a = SymMatrix::new(1);
//! a.insert(0, 0, 1.5).unwrap();
//! let sys = OdeSystem::new(1, c, a, vec![3.0], vec![0.0]).unwrap();
//!
//! // split the vertex between two parts, one third to part 1
//! let partition = PartitionSpec {
//!     interior: Default::default(),
//!     boundary: vec![BoundaryVertex {
//!         vertex: 0,
//!         part_a: 1,
//!         part_b: 2,
//!         fractions: SplitFractions::uniform(1.0 / 3.0),
//!     }],
//! };
//!
//! let mut cfg = RunConfig::new(TimeGrid::new(0.0, 1.0, 0.01).unwrap());
//! cfg.impedance = ImpedanceSpec::Constant(1.5);
//! cfg.max_sweeps = 3000;
//! let solution = wtm_core::run(&sys, &partition, &cfg).unwrap();
//! assert!(solution.converged);
//! ```

pub mod config;
pub mod error;
pub mod evs;
pub mod graph;
pub mod orchestrator;
pub mod parse;
pub mod subsolver;
pub mod waveform;
pub mod wtl;

pub use config::{ImpedanceSpec, InitialWaveformPolicy, RunConfig};
pub use error::{Error, Result};
pub use evs::{
    default_fractions, merge_solution, split, BoundaryVertex, MergedSolution, PartitionSpec,
    PortRef, PortSide, SplitFractions, SubPort, Subproblem, TwinMismatch, TwinPair,
};
pub use graph::{
    validate_snnd, validate_spd, validate_system, CheckOutcome, OdeSystem, SymMatrix,
    ValidationReport,
};
pub use orchestrator::{
    error_curve_vs_reference, parallel_execute, prepare, reference_solve, run, run_with_reference,
    sweep, Prepared, Solution, SweepRecord, SweepState, TwinRefError,
};
pub use parse::{parse_problem, ImpedanceDirective, ParsedProblem};
pub use subsolver::{
    assemble_step_matrix, linear_solve, local_solve, LocalSolveInput, LocalSolveOutput,
};
pub use waveform::{axpy, max_abs_diff, pointwise_div, TimeGrid, Waveform};
pub use wtl::{incident_wave, ImpedanceWaveform, PortState, Wtl};

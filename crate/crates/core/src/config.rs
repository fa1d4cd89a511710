//! Run configuration: time window, stopping controls, impedance and
//! initial-waveform policies.

use crate::error::{Error, Result};
use crate::waveform::{TimeGrid, Waveform};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_SWEEPS: usize = 500;
pub const DEFAULT_DELAY: usize = 1;
pub const DEFAULT_DIVERGENCE_CAP: f64 = 1e12;

/// How every transmission line's characteristic impedance is specified.
/// The sampled form must live on the run grid; no interpolation.
#[derive(Debug, Clone)]
pub enum ImpedanceSpec {
    Constant(f64),
    Samples(Waveform),
}

/// Values used to fill port histories before the first sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialWaveformPolicy {
    /// u = 0, i = 0.
    Zero,
    /// u = x0 of the split vertex (constant), i = 0.
    FlatX0,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: TimeGrid,
    /// Stopping threshold on the successive-iterate max difference.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Transmission delay in sweep units, uniform across all lines.
    pub delay: usize,
    pub impedance: ImpedanceSpec,
    pub init_policy: InitialWaveformPolicy,
    /// Any waveform sample beyond this magnitude aborts the run.
    pub divergence_cap: f64,
    /// Worker threads for the per-sweep subproblem solves.
    pub workers: usize,
}

impl RunConfig {
    pub fn new(grid: TimeGrid) -> Self {
        RunConfig {
            grid,
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            delay: DEFAULT_DELAY,
            impedance: ImpedanceSpec::Constant(1.0),
            init_policy: InitialWaveformPolicy::Zero,
            divergence_cap: DEFAULT_DIVERGENCE_CAP,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Dimension(format!("tol {} must be > 0", self.tol)));
        }
        if self.max_sweeps < 1 {
            return Err(Error::Dimension("max_sweeps must be >= 1".into()));
        }
        if self.delay < 1 {
            return Err(Error::Dimension("delay must be >= 1 sweep".into()));
        }
        if self.divergence_cap.is_nan() || self.divergence_cap <= 0.0 {
            return Err(Error::Dimension(format!(
                "divergence_cap {} must be > 0",
                self.divergence_cap
            )));
        }
        if self.workers < 1 {
            return Err(Error::Dimension("workers must be >= 1".into()));
        }
        Ok(())
    }
}

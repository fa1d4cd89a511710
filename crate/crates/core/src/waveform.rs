//! Uniform-grid waveforms over the time window [T1, T2].
//!
//! Every quantity the solver iterates on (port potentials, outflow currents,
//! characteristic impedances, per-vertex solutions) is a [`Waveform`]: a real
//! sample per grid point of one shared [`TimeGrid`]. Waveforms are immutable
//! once built, so they can be shared between worker threads freely.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative tolerance for the step/span consistency check.
const GRID_REL_TOL: f64 = 1e-12;

/// Uniform sampling of the window [t_start, t_end] with step `h`.
///
/// Sample `m` lies at `t_start + m * h`; the last sample index is
/// `n_points - 1` and must land on `t_end` up to 1e-12 relative.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    step: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, step: f64) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() || !step.is_finite() {
            return Err(Error::InvalidGrid("nonfinite bounds or step".into()));
        }
        if t_end <= t_start {
            return Err(Error::InvalidGrid(format!(
                "window end {t_end} must exceed start {t_start}"
            )));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step {step} must be > 0")));
        }
        let span = t_end - t_start;
        let intervals = (span / step).round();
        if intervals < 1.0 {
            return Err(Error::InvalidGrid(format!(
                "step {step} exceeds the window span {span}"
            )));
        }
        if ((intervals * step) - span).abs() > GRID_REL_TOL * span {
            return Err(Error::InvalidGrid(format!(
                "step {step} does not divide the window span {span}"
            )));
        }
        Ok(TimeGrid {
            t_start,
            t_end,
            step,
            n_points: intervals as usize + 1,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Physical time of sample `m`.
    pub fn time(&self, m: usize) -> f64 {
        self.t_start + m as f64 * self.step
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|m| self.time(m))
    }
}

/// A sampled real-valued function of physical time on a shared [`TimeGrid`].
#[derive(Debug, Clone)]
pub struct Waveform {
    grid: Arc<TimeGrid>,
    samples: Vec<f64>,
}

impl Waveform {
    /// Constant waveform: every sample equals `value`.
    pub fn constant(grid: Arc<TimeGrid>, value: f64) -> Self {
        debug_assert!(value.is_finite());
        let n = grid.n_points();
        Waveform {
            grid,
            samples: vec![value; n],
        }
    }

    pub fn zero(grid: Arc<TimeGrid>) -> Self {
        Waveform::constant(grid, 0.0)
    }

    pub fn from_samples(grid: Arc<TimeGrid>, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::Dimension(format!(
                "waveform has {} samples, grid has {} points",
                samples.len(),
                grid.n_points()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "sample {i} (t = {}) is not finite",
                grid.time(i)
            )));
        }
        Ok(Waveform { grid, samples })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Writes the `t,value` CSV representation with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "t,value")?;
        for (t, v) in self.grid.times().zip(&self.samples) {
            writeln!(out, "{t:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    /// Reads a two-column CSV (`t,<name>` header) whose time column must
    /// match `grid` sample for sample; no interpolation is performed.
    pub fn read_csv<R: BufRead>(grid: Arc<TimeGrid>, input: R) -> Result<Self> {
        let mut samples = Vec::with_capacity(grid.n_points());
        let mut lines = input.lines().enumerate();
        match lines.next() {
            Some((_, Ok(header))) if header.trim_start().starts_with('t') => {}
            Some((_, Ok(_))) | None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "expected a CSV header starting with `t`".into(),
                })
            }
            Some((_, Err(e))) => return Err(e.into()),
        }
        for (idx, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let m = samples.len();
            let mut cols = line.split(',');
            let (t_txt, v_txt) = match (cols.next(), cols.next(), cols.next()) {
                (Some(t), Some(v), None) => (t, v),
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: "expected exactly two comma-separated columns".into(),
                    })
                }
            };
            let t: f64 = t_txt.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad time value `{t_txt}`"),
            })?;
            let v: f64 = v_txt.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad sample value `{v_txt}`"),
            })?;
            if m >= grid.n_points() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("more rows than the {} grid points", grid.n_points()),
                });
            }
            let expected = grid.time(m);
            if (t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("time {t} does not match grid point {expected}"),
                });
            }
            samples.push(v);
        }
        if samples.len() != grid.n_points() {
            return Err(Error::Parse {
                line: grid.n_points(),
                msg: format!(
                    "{} rows for a grid of {} points",
                    samples.len(),
                    grid.n_points()
                ),
            });
        }
        Waveform::from_samples(grid, samples)
    }
}

pub(crate) fn same_grid(a: &Waveform, b: &Waveform, context: &'static str) -> Result<()> {
    if Arc::ptr_eq(a.grid(), b.grid()) || a.grid().as_ref() == b.grid().as_ref() {
        Ok(())
    } else {
        Err(Error::GridMismatch { context })
    }
}

/// Samplewise `a * x + y`.
pub fn axpy(a: f64, x: &Waveform, y: &Waveform) -> Result<Waveform> {
    same_grid(x, y, "axpy")?;
    let samples = x
        .samples
        .iter()
        .zip(&y.samples)
        .map(|(xv, yv)| a * xv + yv)
        .collect();
    Waveform::from_samples(x.grid.clone(), samples)
}

/// Samplewise `x / z`; every divisor sample must be strictly positive.
pub fn pointwise_div(x: &Waveform, z: &Waveform) -> Result<Waveform> {
    same_grid(x, z, "pointwise_div")?;
    if let Some(i) = z.samples.iter().position(|v| *v <= 0.0 || !v.is_finite()) {
        return Err(Error::NonpositiveDivisor {
            index: i,
            time: z.grid.time(i),
            value: z.samples[i],
        });
    }
    let samples = x
        .samples
        .iter()
        .zip(&z.samples)
        .map(|(xv, zv)| xv / zv)
        .collect();
    Waveform::from_samples(x.grid.clone(), samples)
}

/// `max_t |a(t) - b(t)|` over the shared grid.
pub fn max_abs_diff(a: &Waveform, b: &Waveform) -> Result<f64> {
    same_grid(a, b, "max_abs_diff")?;
    Ok(a.samples
        .iter()
        .zip(&b.samples)
        .fold(0.0f64, |m, (av, bv)| m.max((av - bv).abs())))
}

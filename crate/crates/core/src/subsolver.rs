//! Per-sweep subproblem solver.
//!
//! Eliminating the port currents turns one subgraph plus its transmission
//! lines into `C_i du/dt + (A_i + D(t)) u = b_i + Z^{-1}(t) w(t)` where `D`
//! boosts each port row's diagonal by `Z^{-1}(t)` and `w` is the incident
//! wave. A backward-Euler march then solves
//! `(C_i/h + A_i + D(t_m)) x_m = (C_i/h) x_{m-1} + b_i + r(t_m)` per step.
//! The port current follows as `i = Z^{-1} (w - u)`.
//!
//! With constant impedances the step matrix is factored once for the whole
//! window; a time-varying impedance re-factors per step.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::evs::Subproblem;
use crate::waveform::{TimeGrid, Waveform};
use crate::wtl::{ImpedanceWaveform, PortState};

/// Everything one sweep's solve of one subproblem consumes. `incident` and
/// `z` are aligned with `sub.ports`.
#[derive(Debug, Clone)]
pub struct LocalSolveInput<'a> {
    pub sub: &'a Subproblem,
    pub incident: Vec<Waveform>,
    pub z: Vec<ImpedanceWaveform>,
    pub grid: Arc<TimeGrid>,
}

/// Solution waveforms of one subproblem for one sweep.
#[derive(Debug, Clone)]
pub struct LocalSolveOutput {
    /// Per-local-vertex potential waveforms.
    pub x: Vec<Waveform>,
    /// Port states aligned with `sub.ports`; `u` equals the port row of `x`.
    pub ports: Vec<PortState>,
}

/// Backward-Euler step matrix `C_i/h + A_i + D` with `D` adding `1/z` to the
/// diagonal of each port row.
pub fn assemble_step_matrix(sub: &Subproblem, z_at_t: &[f64], h: f64) -> DMatrix<f64> {
    debug_assert!(h > 0.0);
    debug_assert_eq!(z_at_t.len(), sub.ports.len());
    let mut m = sub.a.dense();
    m += sub.c.dense() * (1.0 / h);
    for (port, &z) in sub.ports.iter().zip(z_at_t) {
        debug_assert!(z > 0.0);
        m[(port.local, port.local)] += 1.0 / z;
    }
    m
}

/// Dense SPD solve via Cholesky.
pub fn linear_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::NotSpd(format!("{}x{} step matrix", m.nrows(), m.ncols())))?;
    Ok(chol.solve(rhs))
}

fn factor(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let n = m.nrows();
    Cholesky::new(m).ok_or_else(|| {
        Error::NotSpd(format!(
            "{n}x{n} step matrix; check the split and impedance signs"
        ))
    })
}

/// Solves one subproblem over the whole window for one sweep.
pub fn local_solve(input: &LocalSolveInput) -> Result<LocalSolveOutput> {
    let sub = input.sub;
    let n_ports = sub.ports.len();
    if input.incident.len() != n_ports || input.z.len() != n_ports {
        return Err(Error::PortMismatch(format!(
            "part {}: {} incident waves and {} impedances for {} ports",
            sub.label,
            input.incident.len(),
            input.z.len(),
            n_ports
        )));
    }
    for w in &input.incident {
        if w.grid().as_ref() != input.grid.as_ref() {
            return Err(Error::GridMismatch {
                context: "local solve incident wave",
            });
        }
    }
    for z in &input.z {
        if z.waveform().grid().as_ref() != input.grid.as_ref() {
            return Err(Error::GridMismatch {
                context: "local solve impedance",
            });
        }
    }

    march(input, input.z.iter().all(ImpedanceWaveform::is_constant))
}

/// The backward-Euler march; `reuse_factor` keeps one factorization for the
/// whole window, valid only when every impedance is constant in time.
fn march(input: &LocalSolveInput, reuse_factor: bool) -> Result<LocalSolveOutput> {
    let sub = input.sub;
    let n = sub.n();
    let grid = &input.grid;
    let n_points = grid.n_points();
    let h = grid.step();
    let c_dense = sub.c.dense();

    let fixed_factor = if reuse_factor {
        let z0: Vec<f64> = input.z.iter().map(|z| z.samples()[0]).collect();
        Some(factor(assemble_step_matrix(sub, &z0, h))?)
    } else {
        None
    };

    let mut xs: Vec<Vec<f64>> = (0..n).map(|_| Vec::with_capacity(n_points)).collect();
    let mut prev = DVector::from_iterator(n, sub.x0.iter().copied());
    for (row, v) in prev.iter().enumerate() {
        xs[row].push(*v);
    }

    for m in 1..n_points {
        let mut rhs = &c_dense * &prev;
        rhs *= 1.0 / h;
        for row in 0..n {
            rhs[row] += sub.b[row];
        }
        for (p, port) in sub.ports.iter().enumerate() {
            rhs[port.local] += input.incident[p].samples()[m] / input.z[p].samples()[m];
        }
        let x = match &fixed_factor {
            Some(chol) => chol.solve(&rhs),
            None => {
                let z_now: Vec<f64> = input.z.iter().map(|z| z.samples()[m]).collect();
                factor(assemble_step_matrix(sub, &z_now, h))?.solve(&rhs)
            }
        };
        for (row, v) in x.iter().enumerate() {
            xs[row].push(*v);
        }
        prev = x;
    }

    let x_waves = xs
        .into_iter()
        .enumerate()
        .map(|(row, samples)| {
            Waveform::from_samples(grid.clone(), samples).map_err(|_| {
                Error::NonFinite(format!(
                    "part {}: local vertex {row} produced nonfinite samples",
                    sub.label
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ports = sub
        .ports
        .iter()
        .enumerate()
        .map(|(p, port)| {
            let u = x_waves[port.local].clone();
            let i_samples: Vec<f64> = (0..n_points)
                .map(|m| {
                    (input.incident[p].samples()[m] - u.samples()[m]) / input.z[p].samples()[m]
                })
                .collect();
            let i = Waveform::from_samples(grid.clone(), i_samples).map_err(|_| {
                Error::NonFinite(format!(
                    "part {}: port current at local row {} nonfinite",
                    sub.label, port.local
                ))
            })?;
            PortState::new(u, i)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(LocalSolveOutput { x: x_waves, ports })
}

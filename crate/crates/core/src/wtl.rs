//! The Waveform Transmission Line: impedance waveform, per-port state
//! history, and the delayed exchange rule.
//!
//! At sweep `k` each port receives the incident wave
//! `w = u_far - Z * i_far` built from the far port's state at sweep `k - rho`.
//! Histories are written only at the end-of-sweep barrier; between barriers
//! all line state is read-only.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::config::InitialWaveformPolicy;
use crate::error::{Error, Result};
use crate::evs::{PortSide, TwinPair};
use crate::waveform::{self, TimeGrid, Waveform};

/// Characteristic impedance waveform; every sample strictly positive.
#[derive(Debug, Clone)]
pub struct ImpedanceWaveform {
    z: Waveform,
}

impl ImpedanceWaveform {
    pub fn new(z: Waveform) -> Result<Self> {
        if let Some(i) = z.samples().iter().position(|v| *v <= 0.0) {
            return Err(Error::NonpositiveImpedance {
                index: i,
                time: z.grid().time(i),
                value: z.samples()[i],
            });
        }
        Ok(ImpedanceWaveform { z })
    }

    pub fn constant(grid: Arc<TimeGrid>, value: f64) -> Result<Self> {
        ImpedanceWaveform::new(Waveform::constant(grid, value))
    }

    pub fn waveform(&self) -> &Waveform {
        &self.z
    }

    pub fn samples(&self) -> &[f64] {
        self.z.samples()
    }

    /// True when every sample equals the first; lets solvers factor the
    /// step matrix once for the whole window.
    pub fn is_constant(&self) -> bool {
        let s = self.z.samples();
        s.windows(2).all(|w| w[0] == w[1])
    }
}

/// Potential and outflow current waveforms of one port at one sweep.
#[derive(Debug, Clone)]
pub struct PortState {
    pub u: Waveform,
    pub i: Waveform,
}

impl PortState {
    pub fn new(u: Waveform, i: Waveform) -> Result<Self> {
        waveform::same_grid(&u, &i, "port state")?;
        Ok(PortState { u, i })
    }

    pub fn zero(grid: Arc<TimeGrid>) -> Self {
        PortState {
            u: Waveform::zero(grid.clone()),
            i: Waveform::zero(grid),
        }
    }
}

/// Incident wave of the far port: `u_far - Z * i_far` samplewise.
pub fn incident_wave(far: &PortState, z: &ImpedanceWaveform) -> Result<Waveform> {
    waveform::same_grid(&far.u, z.waveform(), "incident wave")?;
    waveform::same_grid(&far.u, &far.i, "incident wave")?;
    let samples = far
        .u
        .samples()
        .iter()
        .zip(far.i.samples())
        .zip(z.samples())
        .map(|((u, i), z)| u - z * i)
        .collect();
    Waveform::from_samples(far.u.grid().clone(), samples)
}

/// Ring of the last `capacity` sweeps' port states, keyed by sweep index.
#[derive(Debug, Clone)]
struct HistoryRing {
    capacity: usize,
    entries: VecDeque<(i64, PortState)>,
}

impl HistoryRing {
    fn new(capacity: usize) -> Self {
        HistoryRing {
            capacity,
            entries: VecDeque::with_capacity(capacity + 1),
        }
    }

    fn get(&self, sweep: i64) -> Option<&PortState> {
        self.entries
            .iter()
            .find(|(k, _)| *k == sweep)
            .map(|(_, s)| s)
    }

    fn last_sweep(&self) -> Option<i64> {
        self.entries.back().map(|(k, _)| *k)
    }

    fn push(&mut self, sweep: i64, state: PortState) {
        self.entries.push_back((sweep, state));
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }
}

/// One transmission line between a pair of twin vertices.
#[derive(Debug, Clone)]
pub struct Wtl {
    pub id: usize,
    pub twin: TwinPair,
    z: ImpedanceWaveform,
    delay: usize,
    port1: HistoryRing,
    port2: HistoryRing,
}

impl Wtl {
    pub fn new(id: usize, twin: TwinPair, z: ImpedanceWaveform, delay: usize) -> Result<Self> {
        if delay < 1 {
            return Err(Error::Dimension(format!(
                "wtl {id}: delay {delay} must be >= 1 sweep"
            )));
        }
        let capacity = delay + 1;
        Ok(Wtl {
            id,
            twin,
            z,
            delay,
            port1: HistoryRing::new(capacity),
            port2: HistoryRing::new(capacity),
        })
    }

    pub fn impedance(&self) -> &ImpedanceWaveform {
        &self.z
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    /// Fills sweeps `1 - delay ..= 0` with the policy's start-up waveforms,
    /// so the first computed sweep (k = 1) finds its delayed data.
    pub fn init_history(
        &mut self,
        policy: InitialWaveformPolicy,
        x0_value: f64,
        grid: &Arc<TimeGrid>,
    ) {
        self.port1.entries.clear();
        self.port2.entries.clear();
        let u = match policy {
            InitialWaveformPolicy::Zero => Waveform::zero(grid.clone()),
            InitialWaveformPolicy::FlatX0 => Waveform::constant(grid.clone(), x0_value),
        };
        let i = Waveform::zero(grid.clone());
        for k in (1 - self.delay as i64)..=0 {
            self.port1.push(
                k,
                PortState {
                    u: u.clone(),
                    i: i.clone(),
                },
            );
            self.port2.push(
                k,
                PortState {
                    u: u.clone(),
                    i: i.clone(),
                },
            );
        }
    }

    /// Incident waves for sweep `k`, built from the far-side states of sweep
    /// `k - delay`. Stored history is left untouched.
    pub fn exchange(&self, k: i64) -> Result<(Waveform, Waveform)> {
        let source = k - self.delay as i64;
        let far2 = self.port2.get(source).ok_or(Error::MissingHistory {
            wtl: self.id,
            sweep: source,
        })?;
        let far1 = self.port1.get(source).ok_or(Error::MissingHistory {
            wtl: self.id,
            sweep: source,
        })?;
        let to_port1 = incident_wave(far2, &self.z)?;
        let to_port2 = incident_wave(far1, &self.z)?;
        Ok((to_port1, to_port2))
    }

    /// Stores both port states for sweep `k` at the end-of-sweep barrier.
    pub fn push_history(&mut self, k: i64, port1: PortState, port2: PortState) -> Result<()> {
        match self.port1.last_sweep() {
            Some(last) if k <= last => {
                return Err(Error::HistoryPush {
                    wtl: self.id,
                    sweep: k,
                    msg: "already stored",
                })
            }
            Some(last) if k != last + 1 => {
                return Err(Error::HistoryPush {
                    wtl: self.id,
                    sweep: k,
                    msg: "sweeps must be pushed in order",
                })
            }
            _ => {}
        }
        self.port1.push(k, port1);
        self.port2.push(k, port2);
        Ok(())
    }

    pub fn port_state(&self, side: PortSide, sweep: i64) -> Option<&PortState> {
        match side {
            PortSide::One => self.port1.get(sweep),
            PortSide::Two => self.port2.get(sweep),
        }
    }
}

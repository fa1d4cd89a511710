//! Line-oriented problem files.
//!
//! ```text
//! system n=<int>
//! C <i> <j> <value>        # i <= j, 0-based, symmetric storage
//! A <i> <j> <value>
//! b <i> <value>            # unlisted entries are 0
//! x0 <i> <value>
//! part <i> <partId>
//! boundary <i> <partA> <partB> [fC fA fb]
//! window <T1> <T2> <h>
//! impedance const <Z> | impedance samples <file.csv>
//! delay <rho>
//! tol <real>
//! max_sweeps <int>
//! ```
//!
//! Blank lines and `#` comments are ignored. Boundary fractions default to
//! the proportional heuristic of the splitting module when omitted.

use std::collections::BTreeMap;

use crate::config::{ImpedanceSpec, RunConfig};
use crate::error::{Error, Result};
use crate::evs::{default_fractions, BoundaryVertex, PartitionSpec, SplitFractions};
use crate::graph::{OdeSystem, SymMatrix};
use crate::waveform::{TimeGrid, Waveform};

/// Impedance as written in the file; a samples file still needs loading.
#[derive(Debug, Clone, PartialEq)]
pub enum ImpedanceDirective {
    Constant(f64),
    SamplesFile(String),
}

/// Everything a problem file describes.
#[derive(Debug, Clone)]
pub struct ParsedProblem {
    pub system: OdeSystem,
    pub partition: PartitionSpec,
    pub grid: TimeGrid,
    pub impedance: ImpedanceDirective,
    pub delay: usize,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl ParsedProblem {
    /// Builds the run configuration. Sampled impedances must be resolved by
    /// the caller (they live outside the problem file).
    pub fn run_config(&self) -> Result<RunConfig> {
        match &self.impedance {
            ImpedanceDirective::Constant(z) => Ok(self.config_with(ImpedanceSpec::Constant(*z))),
            ImpedanceDirective::SamplesFile(path) => Err(Error::Io(format!(
                "impedance samples file `{path}` has not been loaded"
            ))),
        }
    }

    pub fn config_with(&self, impedance: ImpedanceSpec) -> RunConfig {
        let mut cfg = RunConfig::new(self.grid.clone());
        cfg.tol = self.tol;
        cfg.max_sweeps = self.max_sweeps;
        cfg.delay = self.delay;
        cfg.impedance = impedance;
        cfg
    }

    /// Loads an `t,Z` samples file (already read into a string) against the
    /// problem's grid.
    pub fn impedance_from_csv(&self, text: &str) -> Result<ImpedanceSpec> {
        let grid = std::sync::Arc::new(self.grid.clone());
        let w = Waveform::read_csv(grid, std::io::Cursor::new(text))?;
        Ok(ImpedanceSpec::Samples(w))
    }
}

struct LineCtx {
    no: usize,
}

impl LineCtx {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.no,
            msg: msg.into(),
        }
    }

    fn parse_num<T: std::str::FromStr>(&self, tok: &str, what: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| self.err(format!("bad {what} `{tok}`")))
    }
}

struct RawBoundary {
    line: usize,
    vertex: usize,
    part_a: usize,
    part_b: usize,
    fractions: Option<SplitFractions>,
}

/// Parses a whole problem file.
pub fn parse_problem(text: &str) -> Result<ParsedProblem> {
    let mut n: Option<usize> = None;
    let mut c: Option<SymMatrix> = None;
    let mut a: Option<SymMatrix> = None;
    let mut b_entries: BTreeMap<usize, f64> = BTreeMap::new();
    let mut x0_entries: BTreeMap<usize, f64> = BTreeMap::new();
    let mut interior: BTreeMap<usize, usize> = BTreeMap::new();
    let mut raw_boundary: Vec<RawBoundary> = Vec::new();
    let mut assigned: BTreeMap<usize, usize> = BTreeMap::new(); // vertex -> line
    let mut window: Option<(usize, TimeGrid)> = None;
    let mut impedance: Option<ImpedanceDirective> = None;
    let mut delay: Option<usize> = None;
    let mut tol: Option<f64> = None;
    let mut max_sweeps: Option<usize> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let ctx = LineCtx { no: idx + 1 };
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let directive = toks[0];
        let args = &toks[1..];
        match directive {
            "system" => {
                if n.is_some() {
                    return Err(ctx.err("duplicate system line"));
                }
                let spec = args
                    .first()
                    .and_then(|t| t.strip_prefix("n="))
                    .ok_or_else(|| ctx.err("expected `system n=<int>`"))?;
                let count: usize = ctx.parse_num(spec, "vertex count")?;
                if count == 0 {
                    return Err(ctx.err("system must have at least one vertex"));
                }
                n = Some(count);
                c = Some(SymMatrix::new(count));
                a = Some(SymMatrix::new(count));
            }
            "C" | "A" => {
                let count = n.ok_or_else(|| ctx.err("matrix entry before the system line"))?;
                if args.len() != 3 {
                    return Err(ctx.err(format!("expected `{directive} <i> <j> <value>`")));
                }
                let i: usize = ctx.parse_num(args[0], "row index")?;
                let j: usize = ctx.parse_num(args[1], "column index")?;
                let v: f64 = ctx.parse_num(args[2], "value")?;
                if i > j {
                    return Err(
                        ctx.err(format!("symmetric storage requires i <= j, got ({i}, {j})"))
                    );
                }
                if i >= count || j >= count {
                    return Err(ctx.err(format!("entry ({i}, {j}) out of range for n={count}")));
                }
                let m = if directive == "C" {
                    c.as_mut().unwrap()
                } else {
                    a.as_mut().unwrap()
                };
                m.insert(i, j, v).map_err(|e| ctx.err(e.to_string()))?;
            }
            "b" | "x0" => {
                let count = n.ok_or_else(|| ctx.err("vector entry before the system line"))?;
                if args.len() != 2 {
                    return Err(ctx.err(format!("expected `{directive} <i> <value>`")));
                }
                let i: usize = ctx.parse_num(args[0], "index")?;
                let v: f64 = ctx.parse_num(args[1], "value")?;
                if i >= count {
                    return Err(ctx.err(format!("index {i} out of range for n={count}")));
                }
                let target = if directive == "b" {
                    &mut b_entries
                } else {
                    &mut x0_entries
                };
                if target.insert(i, v).is_some() {
                    return Err(ctx.err(format!("duplicate {directive} entry for vertex {i}")));
                }
            }
            "part" => {
                let count = n.ok_or_else(|| ctx.err("part line before the system line"))?;
                if args.len() != 2 {
                    return Err(ctx.err("expected `part <i> <partId>`"));
                }
                let v: usize = ctx.parse_num(args[0], "vertex")?;
                let p: usize = ctx.parse_num(args[1], "part id")?;
                if v >= count {
                    return Err(ctx.err(format!("vertex {v} out of range for n={count}")));
                }
                if assigned.insert(v, ctx.no).is_some() {
                    return Err(ctx.err(format!("vertex {v} already assigned to a part")));
                }
                interior.insert(v, p);
            }
            "boundary" => {
                let count = n.ok_or_else(|| ctx.err("boundary line before the system line"))?;
                if args.len() != 3 && args.len() != 6 {
                    return Err(ctx.err("expected `boundary <i> <partA> <partB> [fC fA fb]`"));
                }
                let v: usize = ctx.parse_num(args[0], "vertex")?;
                let pa: usize = ctx.parse_num(args[1], "part id")?;
                let pb: usize = ctx.parse_num(args[2], "part id")?;
                if v >= count {
                    return Err(ctx.err(format!("vertex {v} out of range for n={count}")));
                }
                if assigned.insert(v, ctx.no).is_some() {
                    return Err(ctx.err(format!("vertex {v} already assigned to a part")));
                }
                let fractions = if args.len() == 6 {
                    let fc: f64 = ctx.parse_num(args[3], "fC")?;
                    let fa: f64 = ctx.parse_num(args[4], "fA")?;
                    let fb: f64 = ctx.parse_num(args[5], "fb")?;
                    for f in [fc, fa, fb] {
                        if !(0.0..=1.0).contains(&f) {
                            return Err(ctx.err(format!("fraction {f} outside [0, 1]")));
                        }
                    }
                    Some(SplitFractions {
                        c: fc,
                        a: fa,
                        b: fb,
                    })
                } else {
                    None
                };
                raw_boundary.push(RawBoundary {
                    line: ctx.no,
                    vertex: v,
                    part_a: pa,
                    part_b: pb,
                    fractions,
                });
            }
            "window" => {
                if window.is_some() {
                    return Err(ctx.err("duplicate window line"));
                }
                if args.len() != 3 {
                    return Err(ctx.err("expected `window <T1> <T2> <h>`"));
                }
                let t1: f64 = ctx.parse_num(args[0], "T1")?;
                let t2: f64 = ctx.parse_num(args[1], "T2")?;
                let h: f64 = ctx.parse_num(args[2], "step")?;
                let grid = TimeGrid::new(t1, t2, h).map_err(|e| ctx.err(e.to_string()))?;
                window = Some((ctx.no, grid));
            }
            "impedance" => {
                if impedance.is_some() {
                    return Err(ctx.err("duplicate impedance line"));
                }
                match args {
                    ["const", z] => {
                        let z: f64 = ctx.parse_num(z, "impedance")?;
                        impedance = Some(ImpedanceDirective::Constant(z));
                    }
                    ["samples", path] => {
                        impedance = Some(ImpedanceDirective::SamplesFile(path.to_string()));
                    }
                    _ => {
                        return Err(
                            ctx.err("expected `impedance const <Z>` or `impedance samples <file>`")
                        )
                    }
                }
            }
            "delay" => {
                if delay.is_some() {
                    return Err(ctx.err("duplicate delay line"));
                }
                let rho: usize = ctx.parse_num(
                    args.first()
                        .ok_or_else(|| ctx.err("expected `delay <rho>`"))?,
                    "delay",
                )?;
                if rho < 1 {
                    return Err(ctx.err("delay must be >= 1 sweep"));
                }
                delay = Some(rho);
            }
            "tol" => {
                if tol.is_some() {
                    return Err(ctx.err("duplicate tol line"));
                }
                let t: f64 = ctx.parse_num(
                    args.first()
                        .ok_or_else(|| ctx.err("expected `tol <real>`"))?,
                    "tolerance",
                )?;
                if t.is_nan() || t <= 0.0 {
                    return Err(ctx.err("tol must be > 0"));
                }
                tol = Some(t);
            }
            "max_sweeps" => {
                if max_sweeps.is_some() {
                    return Err(ctx.err("duplicate max_sweeps line"));
                }
                let m: usize = ctx.parse_num(
                    args.first()
                        .ok_or_else(|| ctx.err("expected `max_sweeps <int>`"))?,
                    "sweep count",
                )?;
                if m < 1 {
                    return Err(ctx.err("max_sweeps must be >= 1"));
                }
                max_sweeps = Some(m);
            }
            other => {
                return Err(ctx.err(format!("unknown directive `{other}`")));
            }
        }
    }

    let n = n.ok_or(Error::Parse {
        line: 1,
        msg: "missing `system n=<int>` line".into(),
    })?;
    let c = c.unwrap();
    let a = a.unwrap();
    if c.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "matrix C has no entries".into(),
        });
    }
    if a.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "matrix A has no entries".into(),
        });
    }
    let mut b = vec![0.0; n];
    for (i, v) in b_entries {
        b[i] = v;
    }
    let mut x0 = vec![0.0; n];
    for (i, v) in x0_entries {
        x0[i] = v;
    }
    let system = OdeSystem::new(n, c, a, b, x0)?;

    let boundary = raw_boundary
        .into_iter()
        .map(|raw| {
            if raw.part_a == raw.part_b {
                return Err(Error::Parse {
                    line: raw.line,
                    msg: format!("boundary vertex {} needs two distinct parts", raw.vertex),
                });
            }
            let fractions = raw.fractions.unwrap_or_else(|| {
                default_fractions(&system, &interior, raw.vertex, raw.part_a, raw.part_b)
            });
            Ok(BoundaryVertex {
                vertex: raw.vertex,
                part_a: raw.part_a,
                part_b: raw.part_b,
                fractions,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (_, grid) = window.ok_or(Error::Parse {
        line: 1,
        msg: "missing `window <T1> <T2> <h>` line".into(),
    })?;

    Ok(ParsedProblem {
        system,
        partition: PartitionSpec { interior, boundary },
        grid,
        impedance: impedance.unwrap_or(ImpedanceDirective::Constant(1.0)),
        delay: delay.unwrap_or(crate::config::DEFAULT_DELAY),
        tol: tol.unwrap_or(crate::config::DEFAULT_TOL),
        max_sweeps: max_sweeps.unwrap_or(crate::config::DEFAULT_MAX_SWEEPS),
    })
}

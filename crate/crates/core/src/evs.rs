//! Electric Vertex Splitting: partition the electric graph along a vertex
//! boundary into subproblems with twin ports.
//!
//! Each boundary vertex is duplicated into a pair of twin vertices, one per
//! side. Its diagonal C/A contributions and source entry are split by the
//! configured fractions; every off-diagonal entry follows its interior
//! endpoint. Summing the twin rows back together reproduces the original
//! C, A and b exactly, which is what the conservation tests pin down.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{validate_snnd, CheckOutcome, OdeSystem, SymMatrix};
use crate::waveform::{self, Waveform};

/// Fractions of a boundary vertex's diagonal/source assigned to part A;
/// part B receives the complements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

impl SplitFractions {
    pub fn uniform(f: f64) -> Self {
        SplitFractions { c: f, a: f, b: f }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryVertex {
    pub vertex: usize,
    pub part_a: usize,
    pub part_b: usize,
    pub fractions: SplitFractions,
}

/// Vertex-to-part assignment: interior vertices belong to one part, boundary
/// vertices are split between exactly two parts.
#[derive(Debug, Clone, Default)]
pub struct PartitionSpec {
    pub interior: BTreeMap<usize, usize>,
    pub boundary: Vec<BoundaryVertex>,
}

impl PartitionSpec {
    /// All part labels mentioned anywhere in the partition, sorted.
    pub fn part_labels(&self) -> Vec<usize> {
        let mut labels: Vec<usize> = self
            .interior
            .values()
            .copied()
            .chain(self.boundary.iter().flat_map(|b| [b.part_a, b.part_b]))
            .collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }
}

/// Which end of a transmission line a port is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortSide {
    One,
    Two,
}

/// A local row of some subproblem, identified by (dense part index, local row).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortRef {
    pub part: usize,
    pub local: usize,
}

/// The twin-vertex pair created from one boundary vertex; port 1 lives in the
/// part named first on the boundary line.
#[derive(Debug, Clone)]
pub struct TwinPair {
    pub wtl: usize,
    pub port1: PortRef,
    pub port2: PortRef,
    pub vertex: usize,
}

/// A port row of a subproblem and the line/side it connects to.
#[derive(Debug, Clone, Copy)]
pub struct SubPort {
    pub local: usize,
    pub wtl: usize,
    pub side: PortSide,
}

/// One subgraph after splitting: local matrices, sources, initial state and
/// the ports where transmission lines attach.
#[derive(Debug, Clone)]
pub struct Subproblem {
    /// Dense index of this part within the split output.
    pub part: usize,
    /// Part id as written in the partition spec.
    pub label: usize,
    /// Local row -> original global vertex.
    pub globals: Vec<usize>,
    /// Global vertex -> local row.
    pub local_index: BTreeMap<usize, usize>,
    pub c: SymMatrix,
    pub a: SymMatrix,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
    pub ports: Vec<SubPort>,
}

impl Subproblem {
    pub fn n(&self) -> usize {
        self.globals.len()
    }
}

/// Classification used while validating edges against the partition.
enum VertexKind {
    Interior(usize),
    Boundary(usize), // index into PartitionSpec::boundary
}

/// Proportional fraction heuristic: weight of |A| off-diagonals from `v`
/// into part A over the total, clamped to [0.1, 0.9]; 0.5 when the vertex
/// has no off-diagonal neighbors.
pub fn default_fractions(
    sys: &OdeSystem,
    interior: &BTreeMap<usize, usize>,
    v: usize,
    part_a: usize,
    part_b: usize,
) -> SplitFractions {
    let mut into_a = 0.0;
    let mut into_b = 0.0;
    for (i, j, value) in sys.a.iter() {
        if i == j {
            continue;
        }
        let other = if i == v {
            j
        } else if j == v {
            i
        } else {
            continue;
        };
        match interior.get(&other) {
            Some(&p) if p == part_a => into_a += value.abs(),
            Some(&p) if p == part_b => into_b += value.abs(),
            _ => {}
        }
    }
    let total = into_a + into_b;
    let f = if total == 0.0 {
        0.5
    } else {
        (into_a / total).clamp(0.1, 0.9)
    };
    SplitFractions::uniform(f)
}

fn classify(p: &PartitionSpec, n: usize) -> Result<Vec<VertexKind>> {
    let mut kinds: Vec<Option<VertexKind>> = (0..n).map(|_| None).collect();
    for (&v, &part) in &p.interior {
        if v >= n {
            return Err(Error::Partition(format!(
                "interior vertex {v} out of range"
            )));
        }
        if kinds[v].is_some() {
            return Err(Error::Partition(format!(
                "vertex {v} assigned more than once"
            )));
        }
        kinds[v] = Some(VertexKind::Interior(part));
    }
    for (idx, b) in p.boundary.iter().enumerate() {
        if b.vertex >= n {
            return Err(Error::Partition(format!(
                "boundary vertex {} out of range",
                b.vertex
            )));
        }
        if kinds[b.vertex].is_some() {
            return Err(Error::Partition(format!(
                "vertex {} assigned more than once",
                b.vertex
            )));
        }
        if b.part_a == b.part_b {
            return Err(Error::Partition(format!(
                "boundary vertex {} must separate two distinct parts",
                b.vertex
            )));
        }
        for f in [b.fractions.c, b.fractions.a, b.fractions.b] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Partition(format!(
                    "fraction {f} for vertex {} outside [0, 1]",
                    b.vertex
                )));
            }
        }
        kinds[b.vertex] = Some(VertexKind::Boundary(idx));
    }
    kinds
        .into_iter()
        .enumerate()
        .map(|(v, k)| {
            k.ok_or_else(|| Error::Partition(format!("vertex {v} not assigned to any part")))
        })
        .collect()
}

fn check_edges(m: &SymMatrix, which: char, p: &PartitionSpec, kinds: &[VertexKind]) -> Result<()> {
    for (i, j, _) in m.iter() {
        if i == j {
            continue;
        }
        match (&kinds[i], &kinds[j]) {
            (VertexKind::Interior(pi), VertexKind::Interior(pj)) => {
                if pi != pj {
                    return Err(Error::Partition(format!(
                        "{which} edge ({i}, {j}) connects interior vertices of parts {pi} and {pj}"
                    )));
                }
            }
            (VertexKind::Boundary(_), VertexKind::Boundary(_)) => {
                return Err(Error::Partition(format!(
                    "{which} edge ({i}, {j}) connects two boundary vertices"
                )));
            }
            (VertexKind::Interior(pi), VertexKind::Boundary(bi))
            | (VertexKind::Boundary(bi), VertexKind::Interior(pi)) => {
                let b = &p.boundary[*bi];
                if *pi != b.part_a && *pi != b.part_b {
                    return Err(Error::Partition(format!(
                        "{which} edge ({i}, {j}) reaches part {pi}, but vertex {} only separates parts {} and {}",
                        b.vertex, b.part_a, b.part_b
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Performs the vertex splitting. Returns one subproblem per part plus the
/// twin pairs, one transmission line per boundary vertex.
pub fn split(sys: &OdeSystem, p: &PartitionSpec) -> Result<(Vec<Subproblem>, Vec<TwinPair>)> {
    let kinds = classify(p, sys.n)?;
    let labels = p.part_labels();
    if labels.len() < 2 {
        return Err(Error::Partition(
            "a split needs at least two parts; all but one are empty of vertices".into(),
        ));
    }
    check_edges(&sys.c, 'C', p, &kinds)?;
    check_edges(&sys.a, 'A', p, &kinds)?;

    let part_index: BTreeMap<usize, usize> =
        labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();

    // Boundary vertices in ascending vertex order fix the wtl numbering.
    let mut boundary_sorted: Vec<usize> = (0..p.boundary.len()).collect();
    boundary_sorted.sort_by_key(|&bi| p.boundary[bi].vertex);

    // Rows per part: interior vertices plus one twin per adjacent boundary
    // vertex, in ascending global order.
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); labels.len()];
    for (v, kind) in kinds.iter().enumerate() {
        match kind {
            VertexKind::Interior(part) => rows[part_index[part]].push(v),
            VertexKind::Boundary(bi) => {
                let b = &p.boundary[*bi];
                rows[part_index[&b.part_a]].push(v);
                rows[part_index[&b.part_b]].push(v);
            }
        }
    }
    if let Some(empty) = rows.iter().position(|r| r.is_empty()) {
        return Err(Error::Partition(format!(
            "part {} is empty of vertices",
            labels[empty]
        )));
    }

    let mut subs: Vec<Subproblem> = labels
        .iter()
        .enumerate()
        .map(|(idx, &label)| {
            let globals = rows[idx].clone();
            let local_index = globals
                .iter()
                .enumerate()
                .map(|(l, &g)| (g, l))
                .collect::<BTreeMap<_, _>>();
            let n_local = globals.len();
            Subproblem {
                part: idx,
                label,
                globals,
                local_index,
                c: SymMatrix::new(n_local),
                a: SymMatrix::new(n_local),
                b: vec![0.0; n_local],
                x0: vec![0.0; n_local],
                ports: Vec::new(),
            }
        })
        .collect();

    // Diagonals, sources and initial state.
    for (v, kind) in kinds.iter().enumerate() {
        match kind {
            VertexKind::Interior(part) => {
                let sub = &mut subs[part_index[part]];
                let l = sub.local_index[&v];
                let cv = sys.c.get(v, v);
                if cv != 0.0 {
                    sub.c.add(l, l, cv);
                }
                let av = sys.a.get(v, v);
                if av != 0.0 {
                    sub.a.add(l, l, av);
                }
                sub.b[l] = sys.b[v];
                sub.x0[l] = sys.x0[v];
            }
            VertexKind::Boundary(bi) => {
                let b = &p.boundary[*bi];
                let f = b.fractions;
                let cv = sys.c.get(v, v);
                let av = sys.a.get(v, v);
                for (label, fc, fa, fb) in [
                    (b.part_a, f.c, f.a, f.b),
                    (b.part_b, 1.0 - f.c, 1.0 - f.a, 1.0 - f.b),
                ] {
                    let sub = &mut subs[part_index[&label]];
                    let l = sub.local_index[&v];
                    sub.c.add(l, l, fc * cv);
                    sub.a.add(l, l, fa * av);
                    sub.b[l] = fb * sys.b[v];
                    sub.x0[l] = sys.x0[v];
                }
            }
        }
    }

    // Off-diagonals follow the part of their interior endpoint; edge
    // legality above guarantees that part contains a row for both ends.
    for (matrix_sel, sys_m) in [(0usize, &sys.c), (1usize, &sys.a)] {
        for (i, j, value) in sys_m.iter() {
            if i == j {
                continue;
            }
            let part = match (&kinds[i], &kinds[j]) {
                (VertexKind::Interior(pi), _) => *pi,
                (_, VertexKind::Interior(pj)) => *pj,
                _ => unreachable!("boundary-boundary edges rejected above"),
            };
            let sub = &mut subs[part_index[&part]];
            let (li, lj) = (sub.local_index[&i], sub.local_index[&j]);
            if matrix_sel == 0 {
                sub.c.add(li, lj, value);
            } else {
                sub.a.add(li, lj, value);
            }
        }
    }

    // One transmission line per boundary vertex.
    let mut twins = Vec::with_capacity(boundary_sorted.len());
    for (wtl, &bi) in boundary_sorted.iter().enumerate() {
        let b = &p.boundary[bi];
        let pa = part_index[&b.part_a];
        let pb = part_index[&b.part_b];
        let la = subs[pa].local_index[&b.vertex];
        let lb = subs[pb].local_index[&b.vertex];
        subs[pa].ports.push(SubPort {
            local: la,
            wtl,
            side: PortSide::One,
        });
        subs[pb].ports.push(SubPort {
            local: lb,
            wtl,
            side: PortSide::Two,
        });
        twins.push(TwinPair {
            wtl,
            port1: PortRef {
                part: pa,
                local: la,
            },
            port2: PortRef {
                part: pb,
                local: lb,
            },
            vertex: b.vertex,
        });
    }

    // Every produced subgraph must stay non-negative definite.
    for sub in &subs {
        if let CheckOutcome::Fail(detail) = validate_snnd(&sub.c) {
            return Err(Error::SubgraphNotSnnd {
                part: sub.label,
                matrix: 'C',
                detail,
            });
        }
        if let CheckOutcome::Fail(detail) = validate_snnd(&sub.a) {
            return Err(Error::SubgraphNotSnnd {
                part: sub.label,
                matrix: 'A',
                detail,
            });
        }
    }

    Ok((subs, twins))
}

/// Per-twin mismatch report produced when merging a distributed solution.
#[derive(Debug, Clone)]
pub struct TwinMismatch {
    pub wtl: usize,
    pub vertex: usize,
    /// Part labels owning each twin, as written in the partition spec.
    pub part1: usize,
    pub part2: usize,
    pub u1: Waveform,
    pub u2: Waveform,
    pub mismatch: f64,
}

#[derive(Debug, Clone)]
pub struct MergedSolution {
    /// One waveform per original global vertex; split vertices carry the
    /// average of their twins.
    pub global: Vec<Waveform>,
    pub twins: Vec<TwinMismatch>,
}

/// Maps per-subproblem waveforms back onto the original vertices.
pub fn merge_solution(
    n: usize,
    subs: &[Subproblem],
    twins: &[TwinPair],
    waves: &[Vec<Waveform>],
) -> Result<MergedSolution> {
    if waves.len() != subs.len() {
        return Err(Error::Dimension(format!(
            "{} waveform sets for {} subproblems",
            waves.len(),
            subs.len()
        )));
    }
    for (sub, w) in subs.iter().zip(waves) {
        if w.len() != sub.n() {
            return Err(Error::Dimension(format!(
                "part {}: {} waveforms for {} local vertices",
                sub.label,
                w.len(),
                sub.n()
            )));
        }
    }
    let mut global: Vec<Option<Waveform>> = vec![None; n];
    let mut reports = Vec::with_capacity(twins.len());
    for pair in twins {
        let u1 = waves[pair.port1.part][pair.port1.local].clone();
        let u2 = waves[pair.port2.part][pair.port2.local].clone();
        let mismatch = waveform::max_abs_diff(&u1, &u2)?;
        let avg_samples: Vec<f64> = u1
            .samples()
            .iter()
            .zip(u2.samples())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        global[pair.vertex] = Some(Waveform::from_samples(u1.grid().clone(), avg_samples)?);
        reports.push(TwinMismatch {
            wtl: pair.wtl,
            vertex: pair.vertex,
            part1: subs[pair.port1.part].label,
            part2: subs[pair.port2.part].label,
            u1,
            u2,
            mismatch,
        });
    }
    for sub in subs {
        let twin_rows: Vec<usize> = sub.ports.iter().map(|p| p.local).collect();
        for (local, &g) in sub.globals.iter().enumerate() {
            if twin_rows.contains(&local) {
                continue;
            }
            global[g] = Some(waves[sub.part][local].clone());
        }
    }
    let global = global
        .into_iter()
        .enumerate()
        .map(|(v, w)| w.ok_or_else(|| Error::Dimension(format!("no waveform for vertex {v}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(MergedSolution {
        global,
        twins: reports,
    })
}

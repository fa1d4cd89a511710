//! Electric-graph data model: the SPD ODE system `C dx/dt + A x = b` and its
//! validity checks.
//!
//! Matrices are stored as symmetric halves (keys with `i <= j`); dense
//! expansion happens only inside the validators and step-matrix assembly.
//! The solver targets desk-scale systems, not production sparse scale.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Symmetric sparse matrix in coordinate form; entry (i, j) with `i <= j`
/// logically represents both (i, j) and (j, i).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SymMatrix {
    pub fn new(n: usize) -> Self {
        SymMatrix {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Inserts one symmetric entry; indices in either order. Duplicate keys
    /// are rejected so problem files cannot silently overwrite values.
    pub fn insert(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::Matrix(format!(
                "entry ({i}, {j}) out of bounds for dimension {}",
                self.n
            )));
        }
        if !value.is_finite() {
            return Err(Error::Matrix(format!("entry ({i}, {j}) is not finite")));
        }
        let key = (i.min(j), i.max(j));
        if self.entries.contains_key(&key) {
            return Err(Error::Matrix(format!(
                "duplicate entry ({}, {})",
                key.0, key.1
            )));
        }
        self.entries.insert(key, value);
        Ok(())
    }

    /// Adds to an entry, creating it if absent. Used by the splitter where
    /// accumulation is the intended semantics.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.n && j < self.n);
        let key = (i.min(j), i.max(j));
        *self.entries.entry(key).or_insert(0.0) += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    /// Stored (upper-half) entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_diag_abs(&self) -> f64 {
        (0..self.n).fold(0.0f64, |m, i| m.max(self.get(i, i).abs()))
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (&(i, j), &v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }
}

/// The linear system `C dx/dt + A x = b`, `x(0) = x0` on an electric graph
/// of `n` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSystem {
    pub n: usize,
    pub c: SymMatrix,
    pub a: SymMatrix,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
}

impl OdeSystem {
    pub fn new(n: usize, c: SymMatrix, a: SymMatrix, b: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        if c.n() != n {
            let m = c.n();
            return Err(Error::Dimension(format!("C is {m}x{m}, system has n={n}")));
        }
        if a.n() != n {
            let m = a.n();
            return Err(Error::Dimension(format!("A is {m}x{m}, system has n={n}")));
        }
        if b.len() != n {
            return Err(Error::Dimension(format!("b has length {}, n={n}", b.len())));
        }
        if x0.len() != n {
            return Err(Error::Dimension(format!(
                "x0 has length {}, n={n}",
                x0.len()
            )));
        }
        Ok(OdeSystem { n, c, a, b, x0 })
    }
}

/// Outcome of a definiteness check; failure carries the reason.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    Pass,
    Fail(String),
}

impl CheckOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, CheckOutcome::Pass)
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            CheckOutcome::Pass => None,
            CheckOutcome::Fail(r) => Some(r),
        }
    }
}

/// Cholesky pivot sweep on a dense symmetric matrix. Returns the first
/// nonpositive pivot as `Err((row, pivot))`; on success the factor is
/// discarded, only validity matters here.
fn cholesky_pivots(mut m: DMatrix<f64>, tol: f64) -> std::result::Result<(), (usize, f64)> {
    let n = m.nrows();
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= m[(j, k)] * m[(j, k)];
        }
        if d <= tol {
            return Err((j, d));
        }
        let root = d.sqrt();
        m[(j, j)] = root;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= m[(i, k)] * m[(j, k)];
            }
            m[(i, j)] = s / root;
        }
    }
    Ok(())
}

/// Symmetric positive definiteness via a Cholesky pivot sweep on the dense
/// expansion: pass iff every pivot clears a scale-relative tolerance.
pub fn validate_spd(m: &SymMatrix) -> CheckOutcome {
    if m.n() == 0 {
        return CheckOutcome::Fail("matrix is empty".into());
    }
    let scale = m.max_diag_abs().max(1.0);
    match cholesky_pivots(m.dense(), 1e-12 * scale) {
        Ok(()) => CheckOutcome::Pass,
        Err((row, pivot)) => {
            CheckOutcome::Fail(format!("nonpositive pivot {pivot:.3e} at row {row}"))
        }
    }
}

/// Symmetric non-negative definiteness: the smallest eigenvalue of the dense
/// expansion must be >= -tol_psd, where tol_psd = 1e-10 * max |diagonal|.
/// The slack exists because vertex splitting legitimately produces singular
/// subgraph matrices.
pub fn validate_snnd(m: &SymMatrix) -> CheckOutcome {
    if m.n() == 0 {
        return CheckOutcome::Fail("matrix is empty".into());
    }
    let tol_psd = 1e-10 * m.max_diag_abs();
    let eigen = SymmetricEigen::new(m.dense());
    let min_eig = eigen
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig >= -tol_psd {
        CheckOutcome::Pass
    } else {
        CheckOutcome::Fail(format!(
            "smallest eigenvalue {min_eig:.6e} < -{tol_psd:.3e}"
        ))
    }
}

/// Aggregated system report: dimension checks plus SPD checks on C and A.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn validate_system(sys: &OdeSystem) -> ValidationReport {
    let mut failures = Vec::new();
    if sys.c.n() != sys.n {
        failures.push(format!("C dimension {} != n {}", sys.c.n(), sys.n));
    }
    if sys.a.n() != sys.n {
        failures.push(format!("A dimension {} != n {}", sys.a.n(), sys.n));
    }
    if sys.b.len() != sys.n {
        failures.push(format!("b length {} != n {}", sys.b.len(), sys.n));
    }
    if sys.x0.len() != sys.n {
        failures.push(format!("x0 length {} != n {}", sys.x0.len(), sys.n));
    }
    if let CheckOutcome::Fail(reason) = validate_spd(&sys.c) {
        failures.push(format!("C is not SPD: {reason}"));
    }
    if let CheckOutcome::Fail(reason) = validate_spd(&sys.a) {
        failures.push(format!("A is not SPD: {reason}"));
    }
    ValidationReport { failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(n: usize, entries: &[(usize, usize, f64)]) -> SymMatrix {
        let mut m = SymMatrix::new(n);
        for &(i, j, v) in entries {
            m.insert(i, j, v).unwrap();
        }
        m
    }

    // Characteristic-polynomial oracle for 2x2 symmetric [[a, b], [b, c]]:
    // eigenvalues are ((a+c) +- sqrt((a-c)^2 + 4 b^2)) / 2.
    fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
        let disc = ((a - c).powi(2) + 4.0 * b * b).sqrt();
        ((a + c - disc) / 2.0, (a + c + disc) / 2.0)
    }

    #[test]
    fn spd_examples() {
        // oracle: eigenvalues 1 and 3
        let (lo, hi) = eig2(2.0, -1.0, 2.0);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
        let m = sym(2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 1, 2.0)]);
        assert!(validate_spd(&m).is_pass());

        // oracle: eigenvalue -1
        let (lo, _) = eig2(1.0, 2.0, 1.0);
        assert!((lo + 1.0).abs() < 1e-12);
        let m = sym(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 1.0)]);
        assert!(!validate_spd(&m).is_pass());

        let m = sym(1, &[(0, 0, 3.0)]);
        assert!(validate_spd(&m).is_pass());
    }

    #[test]
    fn snnd_examples() {
        // oracle: eigenvalues 0 and 2
        let (lo, hi) = eig2(1.0, -1.0, 1.0);
        assert!(lo.abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
        let m = sym(2, &[(0, 0, 1.0), (0, 1, -1.0), (1, 1, 1.0)]);
        assert!(validate_snnd(&m).is_pass());

        let zero = SymMatrix::new(1);
        assert!(validate_snnd(&zero).is_pass());

        let neg = sym(1, &[(0, 0, -1.0)]);
        let out = validate_snnd(&neg);
        assert!(!out.is_pass());
        assert!(out.reason().unwrap().contains("eigenvalue"));
    }

    #[test]
    fn spd_implies_snnd_on_examples() {
        let candidates = [
            sym(1, &[(0, 0, 3.0)]),
            sym(2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 1, 2.0)]),
            sym(
                3,
                &[
                    (0, 0, 4.0),
                    (1, 1, 4.0),
                    (2, 2, 4.0),
                    (0, 1, 1.0),
                    (1, 2, 1.0),
                ],
            ),
        ];
        for m in &candidates {
            assert!(validate_spd(m).is_pass());
            assert!(validate_snnd(m).is_pass());
        }
    }

    #[test]
    fn validate_system_demo_and_failures() {
        let demo = OdeSystem::new(
            1,
            sym(1, &[(0, 0, 3.0)]),
            sym(1, &[(0, 0, 1.5)]),
            vec![3.0],
            vec![0.0],
        )
        .unwrap();
        assert!(validate_system(&demo).is_pass());

        let bad_a = OdeSystem::new(
            1,
            sym(1, &[(0, 0, 3.0)]),
            sym(1, &[(0, 0, -1.5)]),
            vec![3.0],
            vec![0.0],
        )
        .unwrap();
        let report = validate_system(&bad_a);
        assert!(!report.is_pass());
        assert!(report.failures.iter().any(|f| f.contains("A is not SPD")));

        // constructor rejects the dimension mismatch outright
        assert!(OdeSystem::new(
            2,
            SymMatrix::new(2),
            SymMatrix::new(2),
            vec![1.0],
            vec![0.0, 0.0]
        )
        .is_err());

        // a hand-built system with a short b fails the aggregate check
        let mut crooked = demo.clone();
        crooked.b = vec![];
        let report = validate_system(&crooked);
        assert!(report.failures.iter().any(|f| f.contains("b length")));
    }

    #[test]
    fn insert_rejects_duplicates_and_bounds() {
        let mut m = SymMatrix::new(2);
        m.insert(0, 1, 1.0).unwrap();
        assert!(m.insert(1, 0, 2.0).is_err()); // same symmetric key
        assert!(m.insert(0, 2, 1.0).is_err());
        assert!(m.insert(0, 0, f64::NAN).is_err());
        assert_eq!(m.get(1, 0), 1.0);
    }

    // Brute-force oracle: all leading principal minors > 0 (Sylvester).
    fn minor_oracle_spd(m: &DMatrix<f64>) -> bool {
        (1..=m.nrows()).all(|k| m.view((0, 0), (k, k)).clone_owned().determinant() > 0.0)
    }

    proptest! {
        #[test]
        fn spd_matches_principal_minor_oracle(
            n in 1usize..=6,
            seed in proptest::collection::vec(-8i32..=8, 36),
        ) {
            // entries on a coarse lattice keep the oracle and the pivot sweep
            // away from ambiguous near-singular boundaries
            let mut m = SymMatrix::new(n);
            let mut idx = 0;
            for i in 0..n {
                for j in i..n {
                    let v = seed[idx] as f64 * 0.25;
                    idx += 1;
                    if v != 0.0 || i == j {
                        let _ = m.insert(i, j, v);
                    }
                }
            }
            let dense = m.dense();
            let minors: Vec<f64> = (1..=n)
                .map(|k| dense.view((0, 0), (k, k)).clone_owned().determinant())
                .collect();
            prop_assume!(minors.iter().all(|d| d.abs() > 1e-6));
            prop_assert_eq!(validate_spd(&m).is_pass(), minor_oracle_spd(&dense));
            if validate_spd(&m).is_pass() {
                prop_assert!(validate_snnd(&m).is_pass());
            }
        }
    }
}

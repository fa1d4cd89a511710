//! CSV writers for run artifacts. All values carry 17 significant digits so
//! downstream tooling reproduces the curves exactly; two runs with the same
//! inputs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use wtm_core::{Error, Result, Solution, TimeGrid};

/// `solution.csv`: one row per grid point, one column per original vertex.
pub fn write_solution_csv(path: &Path, grid: &TimeGrid, solution: &Solution) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut header = String::from("t");
    for v in 0..solution.merged.len() {
        header.push_str(&format!(",v{v}"));
    }
    writeln!(out, "{header}")?;
    for (m, t) in grid.times().enumerate() {
        write!(out, "{t:.16e}")?;
        for w in &solution.merged {
            write!(out, ",{:.16e}", w.samples()[m])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// `convergence.csv`: per sweep, the successive-iterate difference and
/// (when tracked) the per-twin error against the reference.
pub fn write_convergence_csv(path: &Path, solution: &Solution) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let ref_columns: Vec<(usize, usize)> = solution
        .error_curve
        .first()
        .map(|rec| {
            rec.reference_errors
                .iter()
                .map(|row| (row.vertex, row.part))
                .collect()
        })
        .unwrap_or_default();
    let mut header = String::from("sweep,successive_diff");
    for (vertex, part) in &ref_columns {
        header.push_str(&format!(",ref_err_v{vertex}p{part}"));
    }
    writeln!(out, "{header}")?;
    for rec in &solution.error_curve {
        write!(out, "{},{:.16e}", rec.sweep, rec.successive_diff)?;
        if rec.reference_errors.len() != ref_columns.len() {
            return Err(Error::Dimension(format!(
                "sweep {}: {} reference errors for {} columns",
                rec.sweep,
                rec.reference_errors.len(),
                ref_columns.len()
            )));
        }
        for row in &rec.reference_errors {
            write!(out, ",{:.16e}", row.err)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// `twins.csv`: the per-twin waveform mismatch of the final sweep.
pub fn write_twins_csv(path: &Path, solution: &Solution) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "wtl,vertex,partA,partB,max_mismatch")?;
    for t in &solution.twins {
        writeln!(
            out,
            "{},{},{},{},{:.16e}",
            t.wtl, t.vertex, t.part1, t.part2, t.mismatch
        )?;
    }
    out.flush()?;
    Ok(())
}

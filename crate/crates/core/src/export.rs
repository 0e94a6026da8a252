//! CSV and JSON writers for solve and benchmark results.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), so every value
//! round-trips exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::outer::{InnerTraceEntry, OuterTraceRow, SolveReport};

pub const OUTER_COLUMNS: [&str; 10] = [
    "k",
    "objective",
    "h",
    "delta",
    "model_decrease",
    "inner_status",
    "inner_iters",
    "accepted",
    "rho",
    "proj_ratio",
];

pub const INNER_COLUMNS: [&str; 8] = [
    "outer_iter",
    "inner_iter",
    "h",
    "dist_to_wbar",
    "dist_to_what",
    "gamma_inf_norm",
    "memory_cols",
    "clipped",
];

/// Full-precision decimal float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_outer_csv<W: Write>(rows: &[OuterTraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OUTER_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            fmt_f64(r.objective),
            fmt_f64(r.h),
            fmt_f64(r.delta),
            fmt_f64(r.model_decrease),
            r.inner_status.map_or("none", |s| s.as_str()).to_string(),
            r.inner_iters.to_string(),
            u8::from(r.accepted).to_string(),
            fmt_f64(r.rho),
            fmt_f64(r.proj_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_inner_csv<W: Write>(entries: &[InnerTraceEntry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INNER_COLUMNS)?;
    for e in entries {
        let r = &e.row;
        w.write_record([
            e.outer_iter.to_string(),
            r.iter.to_string(),
            fmt_f64(r.h),
            fmt_f64(r.dist_to_wbar),
            fmt_f64(r.dist_to_what),
            fmt_f64(r.gamma_inf_norm),
            r.memory_cols.to_string(),
            u8::from(r.clipped).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.json`, `outer.csv` and `inner.csv` into `dir`.
pub fn write_solve_outputs(report: &SolveReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json()? + "\n")?;
    write_outer_csv(&report.outer_trace, fs::File::create(dir.join("outer.csv"))?)?;
    write_inner_csv(&report.inner_trace, fs::File::create(dir.join("inner.csv"))?)?;
    Ok(())
}

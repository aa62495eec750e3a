//! CSV output. Floats use Rust's shortest round-trip formatting, so identical
//! results print identical bytes on every platform.

use std::io::Write;

use anyhow::Result;

use crate::experiment::{ConvergenceRow, ResultRow};

/// Bumped whenever a column is added, removed, renamed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

pub const RESULT_HEADER: [&str; 10] = [
    "seed",
    "param_name",
    "param_value",
    "mode",
    "design",
    "objective_j",
    "iterations",
    "wall_time_s",
    "converged",
    "max_rank_ratio",
];

pub const CONVERGENCE_HEADER: [&str; 4] = ["seed", "k", "q", "eps_tilde"];

pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.param_name.to_string(),
            r.param_value.to_string(),
            r.mode.name().to_string(),
            r.design.clone(),
            r.objective_j.to_string(),
            r.iterations.to_string(),
            r.wall_time_s.to_string(),
            r.converged.to_string(),
            r.max_rank_ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence<W: Write>(out: W, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONVERGENCE_HEADER)?;
    for r in rows {
        w.write_record([r.seed.to_string(), r.entry.k.to_string(), r.entry.q.to_string(), r.entry.eps_tilde.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Blanks the wall-time column so two runs can be compared byte for byte.
pub fn mask_timing(csv_text: &str) -> String {
    let col = RESULT_HEADER.iter().position(|h| *h == "wall_time_s").expect("timing column");
    csv_text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            if i == 0 {
                return line.to_string();
            }
            let mut fields: Vec<&str> = line.split(',').collect();
            if let Some(f) = fields.get_mut(col) {
                *f = "";
            }
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

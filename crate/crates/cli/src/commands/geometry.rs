//! Relative entropy and information metrics over an `s = βΔ` grid, with the
//! summary plot.

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use udw_core::geometry::geometry_report;

use crate::config::RunConfig;
use crate::report::{fmt, CsvWriter};
use crate::svg::{write_line_plot, Series};

use super::CommandOutcome;

pub fn run(cfg: &RunConfig, out: &Path, tolerance_scale: f64) -> Result<CommandOutcome> {
    let grid = cfg.geometry.grid()?;
    let residual_tol = cfg.tolerances.geometry_residual * tolerance_scale;

    let rows = grid
        .par_iter()
        .map(|&s| geometry_report(s).with_context(|| format!("geometry row at s = {s}")))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = CsvWriter::new(
        out,
        "geometry.csv",
        &[
            "s",
            "relative_entropy",
            "g_bkm",
            "g_bures",
            "ratio",
            "residual_bkm",
            "residual_bures",
        ],
    );
    for r in &rows {
        csv.row(&[
            fmt(r.s),
            fmt(r.relative_entropy),
            fmt(r.bkm),
            fmt(r.bures),
            fmt(r.ratio),
            fmt(r.bkm_residual),
            fmt(r.bures_residual),
        ]);
    }
    csv.finish()?;

    write_line_plot(
        out,
        "geometry.svg",
        "Relative entropy and information metrics",
        "s = \u{3b2}\u{394}",
        &[
            Series {
                name: "D(\u{3c1}_y \u{2225} \u{3c1}_x)",
                color: "#1f77b4",
                points: rows.iter().map(|r| (r.s, r.relative_entropy)).collect(),
            },
            Series {
                name: "g_BKM",
                color: "#d62728",
                points: rows.iter().map(|r| (r.s, r.bkm)).collect(),
            },
            Series {
                name: "g_Bures",
                color: "#2ca02c",
                points: rows.iter().map(|r| (r.s, r.bures)).collect(),
            },
            Series {
                name: "g_BKM / g_Bures",
                color: "#9467bd",
                points: rows.iter().map(|r| (r.s, r.ratio)).collect(),
            },
        ],
    )?;

    let passed = rows
        .iter()
        .all(|r| r.bkm_residual <= residual_tol && r.bures_residual <= residual_tol);
    Ok(CommandOutcome {
        passed,
        warnings: Vec::new(),
    })
}

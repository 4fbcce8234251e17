//! Three-way evaluation of the ordering-asymmetry coefficient across a
//! parameter sweep.

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use udw_core::perturbation::{
    delta_rho_commutator_time, delta_rho_dyson, delta_rho_frequency,
};

use crate::config::RunConfig;
use crate::report::{fmt, CsvWriter};

use super::CommandOutcome;

struct Row {
    parameter: &'static str,
    value: f64,
    c_time: f64,
    c_freq: f64,
    c_dyson: f64,
    max_pairwise: f64,
    quadrature_error: f64,
    passed: bool,
}

pub fn run(cfg: &RunConfig, out: &Path, tolerance_scale: f64) -> Result<CommandOutcome> {
    let rho = cfg.initial_state()?;
    let quad_tol = cfg.tolerances.quadrature;
    let agreement = cfg.tolerances.agreement * tolerance_scale;

    let points: Vec<(&'static str, Option<f64>)> = match &cfg.sweep {
        Some(sweep) => sweep
            .values
            .iter()
            .map(|&v| (sweep.parameter.name(), Some(v)))
            .collect(),
        None => vec![("none", None)],
    };

    let rows: Vec<Row> = points
        .par_iter()
        .map(|&(name, value)| -> Result<Row> {
            let (model, protocol) = match (&cfg.sweep, value) {
                (Some(sweep), Some(v)) => cfg
                    .run_point(sweep.parameter, v)
                    .with_context(|| format!("sweep point {name} = {v}"))?,
                _ => (cfg.model.build()?, cfg.protocol.build()?),
            };
            let time = delta_rho_commutator_time(&protocol, &model, &rho, quad_tol)
                .with_context(|| format!("time-domain route at {name} = {value:?}"))?;
            let freq = delta_rho_frequency(&protocol, &model, &rho, quad_tol)
                .with_context(|| format!("frequency-domain route at {name} = {value:?}"))?;
            let dyson = delta_rho_dyson(&protocol, &model, &rho, quad_tol)
                .with_context(|| format!("Dyson route at {name} = {value:?}"))?;

            let cs = [
                (time.coefficient, time.quadrature_error),
                (freq.coefficient, freq.quadrature_error),
                (dyson.coefficient, dyson.quadrature_error),
            ];
            let scale = cs.iter().map(|(c, _)| c.abs()).fold(0.0f64, f64::max);
            let mut max_pairwise = 0.0f64;
            let mut passed = true;
            for i in 0..3 {
                for j in i + 1..3 {
                    let gap = (cs[i].0 - cs[j].0).abs();
                    max_pairwise = max_pairwise.max(gap);
                    let allowed = (agreement * scale).max(cs[i].1 + cs[j].1);
                    passed &= gap <= allowed;
                }
            }
            Ok(Row {
                parameter: name,
                value: value.unwrap_or(f64::NAN),
                c_time: time.coefficient,
                c_freq: freq.coefficient,
                c_dyson: dyson.coefficient,
                max_pairwise,
                quadrature_error: cs.iter().map(|(_, e)| *e).fold(0.0, f64::max),
                passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = CsvWriter::new(
        out,
        "asymmetry.csv",
        &[
            "parameter",
            "value",
            "c_time",
            "c_freq",
            "c_dyson",
            "max_pairwise_residual",
            "quadrature_error",
        ],
    );
    for r in &rows {
        csv.row(&[
            r.parameter.to_string(),
            if r.value.is_nan() {
                String::new()
            } else {
                fmt(r.value)
            },
            fmt(r.c_time),
            fmt(r.c_freq),
            fmt(r.c_dyson),
            fmt(r.max_pairwise),
            fmt(r.quadrature_error),
        ]);
    }
    csv.finish()?;

    Ok(CommandOutcome {
        passed: rows.iter().all(|r| r.passed),
        warnings: Vec::new(),
    })
}

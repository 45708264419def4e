//! Output files of a run.
//!
//! * `probabilities.csv`: `t, p0..pN, trace, energy_re, sigma_min`
//! * `density.csv`: a row of grid nodes, then `t, n(x_1), ..., n(x_M)` per record
//! * `spectrum.csv`: `t, sigma_min`
//! * `meta.json`: configuration, grid constants, relaxation result, run
//!   diagnostics and wall-clock timings
//!
//! Numbers carry 17 significant digits, so the CSV files are byte-identical
//! for a fixed configuration and build. Only the timings in `meta.json` vary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;

use crate::run::RunOutput;

pub const PROBABILITIES: &str = "probabilities.csv";
pub const DENSITY: &str = "density.csv";
pub const SPECTRUM: &str = "spectrum.csv";
pub const META: &str = "meta.json";

fn num(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").unwrap();
}

fn row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    for (i, x) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        num(out, x);
    }
    out.push('\n');
}

pub fn probabilities_csv(run: &RunOutput) -> String {
    let n = run.records.first().map_or(0, |r| r.probabilities.len());
    let mut out = String::from("t");
    for k in 0..n {
        write!(out, ",p{k}").unwrap();
    }
    out.push_str(",trace,energy_re,sigma_min\n");
    for r in &run.records {
        let tail = [r.trace, r.energy, r.sigma_min];
        row(&mut out, std::iter::once(r.t).chain(r.probabilities.iter().copied()).chain(tail));
    }
    out
}

pub fn density_csv(run: &RunOutput) -> String {
    let mut out = String::new();
    row(&mut out, run.nodes.iter().copied());
    for r in &run.records {
        row(&mut out, std::iter::once(r.t).chain(r.density.iter().copied()));
    }
    out
}

pub fn spectrum_csv(run: &RunOutput) -> String {
    let mut out = String::from("t,sigma_min\n");
    for r in &run.records {
        row(&mut out, [r.t, r.sigma_min]);
    }
    out
}

pub fn meta_json(run: &RunOutput) -> String {
    let grid = &run.model.grid;
    let last = run.records.last();
    let meta = json!({
        "kind": run.kind.name(),
        "config": run.config,
        "grid": {
            "half_width": grid.half_width(),
            "n_points": grid.n_points(),
            "dx": grid.dx(),
            "k_max": grid.wavenumbers().iter().fold(0.0_f64, |m, k| m.max(k.abs())),
        },
        "bound_states": run.bound_states,
        "relaxed_energy": run.relaxed_energy,
        "relax_steps": run.relax_steps,
        "records": run.records.len(),
        "record_every": run.config.record_every(),
        "final": last.map(|r| json!({
            "t": r.t,
            "probabilities": r.probabilities,
            "energy": r.energy,
            "sigma_min": r.sigma_min,
        })),
        "reorthonormalizations": run.reorthonormalizations,
        "near_singular_steps": run.near_singular_steps,
        "timings": {
            "relax_seconds": run.timings.relax_seconds,
            "propagate_seconds": run.timings.propagate_seconds,
        },
    });
    let mut text = serde_json::to_string_pretty(&meta).expect("meta is plain JSON");
    text.push('\n');
    text
}

/// Writes all four files into `dir`, creating it if needed.
pub fn write_outputs(run: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let files =
        [(PROBABILITIES, probabilities_csv(run)), (DENSITY, density_csv(run)), (SPECTRUM, spectrum_csv(run)), (META, meta_json(run))];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

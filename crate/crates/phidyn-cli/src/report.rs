//! Machine-readable run outputs: a CSV of regret curves and a JSON summary.
//!
//! CSV columns are `t,player,trigger_regret,external_regret,avg_regret`,
//! one row per (checkpoint, player), players numbered from 1, floats with
//! 12 significant digits. The output is a pure function of the log, so a
//! repeated run of the same configuration is byte-identical.

use phidyn::dynamics::{equilibrium_gap, DynamicsLog};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes the regret-curve CSV.
pub fn write_csv(log: &DynamicsLog<f64>, path: &Path) -> std::io::Result<()> {
    let mut out = String::from("t,player,trigger_regret,external_regret,avg_regret\n");
    for row in &log.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.t,
            row.player + 1,
            sig12(row.trigger_regret),
            sig12(row.external_regret),
            sig12(row.trigger_regret / row.t as f64),
        ));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())
}

#[derive(Serialize)]
struct ConfigEcho {
    game: String,
    algorithm: String,
    mode: String,
    horizon: u64,
    eta: f64,
    eta_delta: Vec<f64>,
    seed: u64,
    checkpoints: Vec<u64>,
}

#[derive(Serialize)]
struct Summary {
    config: ConfigEcho,
    final_trigger_regret: Vec<f64>,
    final_external_regret: Vec<f64>,
    equilibrium_gap: f64,
    max_fixed_point_residual: f64,
    wall_clock_secs: f64,
}

/// Writes the JSON run summary.
pub fn write_summary(log: &DynamicsLog<f64>, spec: &str, path: &Path) -> std::io::Result<()> {
    let summary = Summary {
        config: ConfigEcho {
            game: spec.to_string(),
            algorithm: log.algorithm.as_str().to_string(),
            mode: log.mode.as_str().to_string(),
            horizon: log.horizon,
            eta: log.eta,
            eta_delta: log.eta_delta.clone(),
            seed: log.seed,
            checkpoints: log.checkpoints.clone(),
        },
        final_trigger_regret: log.final_reports.iter().map(|r| r.trigger_regret).collect(),
        final_external_regret: log
            .final_reports
            .iter()
            .map(|r| r.external_regret)
            .collect(),
        equilibrium_gap: equilibrium_gap(log),
        max_fixed_point_residual: log.max_fixed_point_residual,
        wall_clock_secs: log.wall_clock_secs,
    };
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &summary)?;
    file.write_all(b"\n")
}

// SPDX-License-Identifier: Apache-2.0

//! Browser demo bindings. Each export takes plain values and returns a JSON
//! string; errors come back as `{"error": "..."}`.

use serde::Deserialize;
use serde_json::{json, Value};
use spectra_lab::diagnosis::{
    accuracy, load_delta, parse_truth, render_report, suspects, DiagnosisError, EpochSelector,
};
use spectra_lab::instrument::{instrument, Manifest, Scope};
use spectra_lab::minic::{parse, print};
use spectra_lab::replica::{self, ReplicaOptions};
use spectra_lab::sim::SimOutput;
use wasm_bindgen::prelude::*;

/// Replica knobs as sent by the page. Missing fields take the fixture values.
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub seed: u64,
    pub fault: bool,
    pub poll_period: u64,
    pub capacity: usize,
    /// Bits per second, 10 bits per byte.
    pub baud: u32,
}

impl Default for SimParams {
    fn default() -> Self {
        let o = ReplicaOptions::default();
        Self {
            seed: o.seed,
            fault: o.fault,
            poll_period: o.poll_period,
            capacity: o.capacity,
            baud: o.bytes_per_second * 10,
        }
    }
}

impl SimParams {
    pub fn from_json(text: &str) -> Result<Self, String> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text).map_err(|e| format!("bad parameters: {e}"))
    }

    fn options(&self) -> Result<ReplicaOptions, String> {
        if self.poll_period == 0 || self.capacity == 0 || self.baud < 10 {
            return Err("poll period, capacity and baud must be positive (baud at least 10)".into());
        }
        Ok(ReplicaOptions {
            seed: self.seed,
            fault: self.fault,
            poll_period: self.poll_period,
            capacity: self.capacity,
            bytes_per_second: self.baud / 10,
            ..ReplicaOptions::default()
        })
    }

    fn run(&self) -> Result<SimOutput, String> {
        replica::run(&self.options()?, true).map_err(|e| e.to_string())
    }
}

/// Instruments `source`. `scope` is `all` or `dispatch`; dispatch scope takes
/// handler names from `handlers`, one per line.
pub fn instrument_json(source: &str, scope: &str, handlers: &str) -> Result<Value, String> {
    let scope: Scope = scope.parse()?;
    let program = parse(source).map_err(|e| format!("parse error at {e}"))?;
    let names: Vec<String> = handlers.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect();
    let (program, manifest) = instrument(program, scope, &names).map_err(|e| e.to_string())?;
    Ok(json!({
        "source": print(&program),
        "manifest": manifest.to_file_string(),
        "functions": manifest.names(),
    }))
}

/// Runs the replica and returns the load curve, spectra heatmap data and summary.
pub fn simulate_json(params: &SimParams) -> Result<Value, String> {
    let out = params.run()?;
    let series: Vec<(u32, f64)> = out.load.iter().map(|s| (s.second, s.load())).collect();
    let delta = load_delta(&series, replica::TV1_SECONDS, replica::TV2_SECONDS).ok();
    let phases: Vec<Value> = replica::scenario(&params.options()?)
        .phase_spans()
        .into_iter()
        .map(|(name, start, end)| json!({ "name": name, "start": start, "end": end }))
        .collect();
    let s = &out.summary;
    Ok(json!({
        "seconds": series.iter().map(|p| p.0).collect::<Vec<_>>(),
        "load": series.iter().map(|p| p.1).collect::<Vec<_>>(),
        "functions": replica::manifest().names(),
        "epochs": out.spectra.spectra().iter().map(|s| s.epoch_seq).collect::<Vec<_>>(),
        "counts": out.spectra.spectra().iter().map(|s| s.counters().to_vec()).collect::<Vec<_>>(),
        "phases": phases,
        "tv1_mean": delta.map(|d| d.mean_a),
        "tv2_mean": delta.map(|d| d.mean_b),
        "delta_points": delta.map(|d| d.delta_points),
        "summary": {
            "epochs_rotated": s.epochs_rotated,
            "epochs_extended": s.epochs_extended,
            "dropped_probes": s.dropped_probes,
            "spectra_received": s.spectra_received,
            "total_busy_ms": s.total_busy_ms,
        },
    }))
}

/// Runs the replica, then compares the `pass` and `fail` epoch windows.
/// `truth` lists faulty handler names, one per line; empty means none given.
pub fn diagnose_json(params: &SimParams, pass: &str, fail: &str, truth: &str) -> Result<Value, String> {
    let pass: EpochSelector = pass.parse().map_err(|e: DiagnosisError| e.to_string())?;
    let fail: EpochSelector = fail.parse().map_err(|e: DiagnosisError| e.to_string())?;
    let out = params.run()?;
    let report = suspects(&pass.resolve(&out.spectra), &fail.resolve(&out.spectra)).map_err(|e| e.to_string())?;
    let manifest: Manifest = replica::manifest();
    let acc = if truth.trim().is_empty() {
        None
    } else {
        Some(accuracy(&report, &parse_truth(truth, Some(&manifest)).map_err(|e| e.to_string())?))
    };
    let entry = |id: u32, evidence: usize| json!({ "id": id, "name": manifest.name(id), "evidence": evidence });
    Ok(json!({
        "n_pass": report.n_pass,
        "n_fail": report.n_fail,
        "suspects": report.fail_only.iter().map(|s| entry(s.id, s.evidence)).collect::<Vec<_>>(),
        "pass_only": report.pass_only.iter().map(|s| entry(s.id, s.evidence)).collect::<Vec<_>>(),
        "accuracy": acc.flatten(),
        "report": render_report(&report, Some(&manifest), &pass, &fail, acc),
    }))
}

fn respond(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

#[wasm_bindgen]
pub fn instrument_source(source: &str, scope: &str, handlers: &str) -> String {
    respond(instrument_json(source, scope, handlers))
}

#[wasm_bindgen]
pub fn simulate_replica(params: &str) -> String {
    respond(SimParams::from_json(params).and_then(|p| simulate_json(&p)))
}

#[wasm_bindgen]
pub fn diagnose_replica(params: &str, pass: &str, fail: &str, truth: &str) -> String {
    respond(SimParams::from_json(params).and_then(|p| diagnose_json(&p, pass, fail, truth)))
}

/// Fixture texts for the page's editors.
#[wasm_bindgen]
pub fn replica_program() -> String {
    replica::PROGRAM.to_string()
}

#[wasm_bindgen]
pub fn replica_truth() -> String {
    replica::TRUTH.to_string()
}

//! Campaign report rendering. `render_report` is a pure function of its
//! inputs — the timestamp is a field, not a clock read — so the same report
//! value always produces byte-identical markdown and sidecar. Every figure
//! printed in the markdown also appears in the JSON sidecar: full-precision
//! data under the structural keys, and the rounded values exactly as shown
//! under `rendered`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tplan_analyzer::{FitResult, Histogram, ParamName};
use tplan_core::schedule::Schedule;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("run indices must be unique and ascending (saw {prev} then {next})")]
    RunOrder { prev: u32, next: u32 },
}

/// One electrochemistry run as logged by the lab executive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub run_index: u32,
    /// requested condition, e.g. "pH 4.0, scan 50 mV/s"
    pub condition: String,
    pub measured_ph: f64,
    pub measured_mv: f64,
    #[serde(default)]
    pub anomaly: bool,
    #[serde(default)]
    pub note: String,
}

/// Everything the report shows. Optional pieces render as explicit
/// "not available" lines rather than vanishing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    /// Injected by the caller; rendering never reads a clock.
    pub timestamp: String,
    #[serde(default)]
    pub logs: Vec<RunLog>,
    #[serde(default)]
    pub fit: Option<FitResult<f64>>,
    #[serde(default)]
    pub marginals: Vec<Histogram<f64>>,
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub gantt_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub markdown: String,
    pub sidecar: Value,
}

/// Fixed-precision display plus the exact value that display parses back to,
/// so the sidecar can mirror the shown figure.
fn shown(x: f64, prec: usize) -> (String, f64) {
    let s = format!("{:.*}", prec, x);
    let v = s.parse().expect("fixed-precision float reparses");
    (s, v)
}

pub fn render_report(report: &Report) -> Result<Rendered, ReportError> {
    for w in report.logs.windows(2) {
        if w[1].run_index <= w[0].run_index {
            return Err(ReportError::RunOrder {
                prev: w[0].run_index,
                next: w[1].run_index,
            });
        }
    }

    let anomaly_count = report.logs.iter().filter(|l| l.anomaly).count();
    let mut md = String::new();
    let w = &mut md;

    writeln!(w, "# {}", report.title).unwrap();
    writeln!(w).unwrap();
    writeln!(w, "_generated {}_", report.timestamp).unwrap();
    writeln!(w).unwrap();

    writeln!(w, "## Summary").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "- runs logged: {} ({} anomalous)", report.logs.len(), anomaly_count).unwrap();
    match &report.fit {
        Some(f) => writeln!(
            w,
            "- parameter estimates: fitted ({} diagnostic notes)",
            f.diagnostics.len()
        ),
        None => writeln!(w, "- parameter estimates: not available"),
    }
    .unwrap();
    match &report.schedule {
        Some(s) => writeln!(
            w,
            "- schedule: {} intervals across {} agents, makespan {} s",
            s.intervals.len(),
            s.agents.len(),
            s.makespan
        ),
        None => writeln!(w, "- schedule: not available"),
    }
    .unwrap();
    writeln!(w).unwrap();

    writeln!(w, "## Per-Run Logs").unwrap();
    writeln!(w).unwrap();
    if report.logs.is_empty() {
        writeln!(w, "No runs logged.").unwrap();
        writeln!(w).unwrap();
    }
    let mut measurements = Vec::new();
    for log in &report.logs {
        writeln!(w, "### Run {} — {}", log.run_index, log.condition).unwrap();
        writeln!(w).unwrap();
        let (ph_s, ph_v) = shown(log.measured_ph, 2);
        let (mv_s, mv_v) = shown(log.measured_mv, 1);
        writeln!(w, "- measured pH: {}", ph_s).unwrap();
        writeln!(w, "- measured potential: {} mV", mv_s).unwrap();
        if log.anomaly {
            let note = if log.note.is_empty() { "flagged, no note" } else { log.note.as_str() };
            writeln!(w, "- anomaly: {}", note).unwrap();
        } else {
            writeln!(w, "- anomaly: none").unwrap();
        }
        writeln!(w).unwrap();
        measurements.push(json!({ "run": log.run_index, "ph": ph_v, "mv": mv_v }));
    }

    writeln!(w, "## Parameter Estimates").unwrap();
    writeln!(w).unwrap();
    let mut rendered_params = serde_json::Map::new();
    let mut rendered_ll = Value::Null;
    match &report.fit {
        Some(fit) => {
            writeln!(w, "| parameter | estimate |").unwrap();
            writeln!(w, "| --- | --- |").unwrap();
            for name in ParamName::ALL {
                let (s, v) = shown(fit.params.get(name), 4);
                writeln!(w, "| {} | {} |", name, s).unwrap();
                rendered_params.insert(name.as_str().to_owned(), json!(v));
            }
            writeln!(w).unwrap();
            let (ll_s, ll_v) = shown(fit.log_likelihood, 4);
            writeln!(w, "log-likelihood: {}", ll_s).unwrap();
            rendered_ll = json!(ll_v);
            for note in &fit.diagnostics {
                writeln!(w, "- note: {}", note).unwrap();
            }
        }
        None => writeln!(w, "No fitted parameters.").unwrap(),
    }

    let mut peaks = Vec::new();
    if !report.marginals.is_empty() {
        writeln!(w).unwrap();
        writeln!(w, "Marginal histogram peaks:").unwrap();
        writeln!(w).unwrap();
        writeln!(w, "| parameter | peak midpoint | mass |").unwrap();
        writeln!(w, "| --- | --- | --- |").unwrap();
        for h in &report.marginals {
            let Some((i, mass)) = h
                .masses
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite mass"))
            else {
                continue;
            };
            let (mid_s, mid_v) = shown((h.edges[i] + h.edges[i + 1]) / 2.0, 4);
            let (mass_s, mass_v) = shown(*mass, 4);
            writeln!(w, "| {} | {} | {} |", h.param, mid_s, mass_s).unwrap();
            peaks.push(json!({ "param": h.param, "midpoint": mid_v, "mass": mass_v }));
        }
        writeln!(w).unwrap();
        writeln!(
            w,
            "Marginal peaks may differ from the joint maximum-likelihood estimate; \
             the joint optimum is the authoritative point value."
        )
        .unwrap();
    }
    writeln!(w).unwrap();

    writeln!(w, "## Schedule").unwrap();
    writeln!(w).unwrap();
    match &report.schedule {
        Some(s) => {
            writeln!(w, "makespan: {} s", s.makespan).unwrap();
            writeln!(w).unwrap();
            writeln!(w, "| agent | action | start (s) | end (s) |").unwrap();
            writeln!(w, "| --- | --- | --- | --- |").unwrap();
            for iv in &s.intervals {
                writeln!(w, "| {} | {} | {} | {} |", iv.agent, iv.action, iv.start, iv.end)
                    .unwrap();
            }
            writeln!(w).unwrap();
        }
        None => {
            writeln!(w, "No schedule attached.").unwrap();
            writeln!(w).unwrap();
        }
    }
    if let Some(p) = &report.gantt_path {
        writeln!(w, "Gantt chart: {}", p).unwrap();
    }

    let sidecar = json!({
        "title": report.title,
        "timestamp": report.timestamp,
        "summary": {
            "run_count": report.logs.len(),
            "anomaly_count": anomaly_count,
        },
        "logs": report.logs,
        "fit": report.fit,
        "marginals": report.marginals,
        "schedule": report.schedule,
        "gantt": report.gantt_path,
        "rendered": {
            "measurements": measurements,
            "parameters": rendered_params,
            "log_likelihood": rendered_ll,
            "marginal_peaks": peaks,
        },
    });

    Ok(Rendered { markdown: md, sidecar })
}

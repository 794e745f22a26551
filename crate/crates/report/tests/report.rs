use serde_json::Value;
use tplan_analyzer::{FitResult, Histogram, PourbaixParams};
use tplan_core::schedule::{Interval, Schedule};
use tplan_report::{render_report, Report, ReportError, RunLog};

fn run(i: u32, condition: &str, ph: f64, mv: f64) -> RunLog {
    RunLog {
        run_index: i,
        condition: condition.to_owned(),
        measured_ph: ph,
        measured_mv: mv,
        anomaly: false,
        note: String::new(),
    }
}

fn rich_report() -> Report {
    let mut logs: Vec<RunLog> = (1..=6)
        .map(|i| {
            run(
                i,
                &format!("pH {:.1}", 3.0 + 1.5 * i as f64),
                3.07 + 1.5 * i as f64,
                -700.0 + 42.5 * i as f64,
            )
        })
        .collect();
    logs[3].anomaly = true;
    logs[3].note = "potentiostat drift 3.2 mV during scan".to_owned();

    Report {
        title: "Electrochemistry Campaign 12".to_owned(),
        timestamp: "2026-08-16T00:00:00Z".to_owned(),
        logs,
        fit: Some(FitResult {
            params: PourbaixParams::new(7.6823, 10.9177, -30.7451, -450.1234, 3.0456),
            log_likelihood: -77.17532,
            diagnostics: vec![],
        }),
        marginals: vec![
            Histogram {
                param: "pka1".to_owned(),
                edges: vec![6.0, 7.0, 8.0, 9.0],
                masses: vec![0.25, 0.5, 0.25],
            },
            Histogram {
                param: "k".to_owned(),
                edges: vec![-45.0, -35.0, -25.0, -15.0],
                masses: vec![0.125, 0.625, 0.25],
            },
        ],
        schedule: Some(Schedule {
            agents: vec!["franka".to_owned(), "washer".to_owned()],
            intervals: vec![
                Interval {
                    agent: "franka".to_owned(),
                    action: "(pick beaker1 table_loc)".to_owned(),
                    start: 0,
                    end: 60,
                },
                Interval {
                    agent: "washer".to_owned(),
                    action: "(wash beaker1)".to_owned(),
                    start: 120,
                    end: 180,
                },
            ],
            makespan: 180,
        }),
        gantt_path: Some("gantt.svg".to_owned()),
    }
}

// -- numeric mirroring -------------------------------------------------------

/// Standalone numeric tokens; identifiers like `beaker1` stay words.
fn numeric_tokens(text: &str) -> Vec<f64> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_alphabetic() || ch == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
        } else if ch.is_ascii_digit()
            || (ch == '-' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit())
        {
            let start = i;
            if ch == '-' {
                i += 1;
            }
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let tok: String = chars[start..i].iter().collect();
            if let Ok(v) = tok.trim_end_matches('.').parse::<f64>() {
                out.push(v);
            }
        } else {
            i += 1;
        }
    }
    out
}

fn collect_json_numbers(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                out.push(f);
            }
        }
        Value::String(s) => out.extend(numeric_tokens(s)),
        Value::Array(items) => {
            for item in items {
                collect_json_numbers(item, out);
            }
        }
        Value::Object(map) => {
            for item in map.values() {
                collect_json_numbers(item, out);
            }
        }
        _ => {}
    }
}

#[test]
fn every_markdown_numeric_appears_in_the_sidecar() {
    let rendered = render_report(&rich_report()).unwrap();
    let mut sidecar_numbers = Vec::new();
    collect_json_numbers(&rendered.sidecar, &mut sidecar_numbers);

    let md_numbers = numeric_tokens(&rendered.markdown);
    assert!(!md_numbers.is_empty());
    for m in md_numbers {
        assert!(
            sidecar_numbers.iter().any(|s| *s == m),
            "markdown shows {} but the sidecar never carries it",
            m
        );
    }
}

// -- structure ---------------------------------------------------------------

#[test]
fn six_runs_render_six_ordered_subsections() {
    let rendered = render_report(&rich_report()).unwrap();
    let md = &rendered.markdown;

    let mut last = 0;
    for i in 1..=6 {
        let header = format!("### Run {} —", i);
        let pos = md.find(&header).unwrap_or_else(|| panic!("missing {}", header));
        assert!(pos > last, "run {} out of order", i);
        last = pos;
    }
    assert_eq!(md.matches("### Run ").count(), 6);

    // the parameter table lists all five parameters, one row each
    let table = md
        .split("| parameter | estimate |")
        .nth(1)
        .unwrap()
        .split("\n\n")
        .next()
        .unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| l.starts_with("| ")).collect();
    assert_eq!(rows.len(), 6, "separator plus five parameter rows:\n{}", table);
    for name in ["pka1", "pka2", "k", "e_inf", "sigma_ev"] {
        assert_eq!(
            table.matches(&format!("| {} | ", name)).count(),
            1,
            "{} row missing",
            name
        );
    }
    assert!(md.contains("Marginal peaks may differ from the joint maximum-likelihood estimate"));
    assert!(md.contains("Gantt chart: gantt.svg"));
}

#[test]
fn zero_logs_still_render_a_complete_document() {
    let mut report = rich_report();
    report.logs.clear();
    let rendered = render_report(&report).unwrap();
    let md = &rendered.markdown;
    assert!(md.contains("No runs logged."));
    for section in ["## Summary", "## Per-Run Logs", "## Parameter Estimates", "## Schedule"] {
        assert!(md.contains(section), "missing {}", section);
    }
    assert_eq!(rendered.sidecar["summary"]["run_count"], 0);
}

#[test]
fn rendering_is_byte_identical() {
    let report = rich_report();
    let a = render_report(&report).unwrap();
    let b = render_report(&report).unwrap();
    assert_eq!(a.markdown.as_bytes(), b.markdown.as_bytes());
    assert_eq!(
        serde_json::to_string_pretty(&a.sidecar).unwrap(),
        serde_json::to_string_pretty(&b.sidecar).unwrap()
    );
}

#[test]
fn run_indices_must_ascend() {
    let mut report = rich_report();
    report.logs[1].run_index = report.logs[0].run_index;
    assert_eq!(
        render_report(&report).unwrap_err(),
        ReportError::RunOrder { prev: 1, next: 1 }
    );

    let mut report = rich_report();
    report.logs[1].run_index = 0;
    assert_eq!(
        render_report(&report).unwrap_err(),
        ReportError::RunOrder { prev: 1, next: 0 }
    );
}

#[test]
fn missing_pieces_render_placeholders() {
    let report = Report {
        title: "Dry Run".to_owned(),
        timestamp: "fixed".to_owned(),
        logs: vec![],
        fit: None,
        marginals: vec![],
        schedule: None,
        gantt_path: None,
    };
    let rendered = render_report(&report).unwrap();
    assert!(rendered.markdown.contains("No fitted parameters."));
    assert!(rendered.markdown.contains("No schedule attached."));
    assert!(rendered.markdown.contains("- parameter estimates: not available"));
    assert_eq!(rendered.sidecar["fit"], Value::Null);
    assert_eq!(rendered.sidecar["schedule"], Value::Null);
}

#[test]
fn the_timestamp_is_injected_verbatim() {
    let mut report = rich_report();
    report.timestamp = "run-stamp-0042 (frozen)".to_owned();
    let rendered = render_report(&report).unwrap();
    assert!(rendered.markdown.contains("_generated run-stamp-0042 (frozen)_"));
    assert_eq!(rendered.sidecar["timestamp"], "run-stamp-0042 (frozen)");
}

#[test]
fn run_logs_deserialize_with_defaults() {
    let raw = r#"[
        {"run_index": 1, "condition": "pH 4.0", "measured_ph": 4.02, "measured_mv": -612.5},
        {"run_index": 2, "condition": "pH 5.5", "measured_ph": 5.48, "measured_mv": -569.0,
         "anomaly": true, "note": "bubble on electrode"}
    ]"#;
    let logs: Vec<RunLog> = serde_json::from_str(raw).unwrap();
    assert_eq!(logs.len(), 2);
    assert!(!logs[0].anomaly);
    assert_eq!(logs[0].note, "");
    assert!(logs[1].anomaly);

    let anomalies: usize = logs.iter().filter(|l| l.anomaly).count();
    assert_eq!(anomalies, 1);
}

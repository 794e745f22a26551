//! Per-agent schedules extracted from plans, and their rendered forms
//! (SVG, fixed-width ASCII, JSON).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::planner::{Phase, Plan};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub agent: String,
    /// Display form of the step, e.g. `(wash beaker1 washer)`.
    pub action: String,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// Row order: agents in order of first appearance in the plan.
    pub agents: Vec<String>,
    pub intervals: Vec<Interval>,
    pub makespan: u64,
}

/// One interval per acting agent of every start/instantaneous step. Steps
/// without a designated agent land on a synthetic `plan` row. Overlapping
/// intervals on one agent are a structural error: the plan double-books it.
pub fn extract_schedule(plan: &Plan) -> Result<Schedule, PlanError> {
    let mut agents: Vec<String> = Vec::new();
    let mut intervals: Vec<Interval> = Vec::new();
    for step in &plan.steps {
        if step.phase == Phase::End {
            continue;
        }
        let on: Vec<String> = if step.agents.is_empty() {
            vec!["plan".to_owned()]
        } else {
            step.agents.clone()
        };
        for agent in on {
            if !agents.contains(&agent) {
                agents.push(agent.clone());
            }
            intervals.push(Interval {
                agent,
                action: step.name(),
                start: step.t_start,
                end: step.t_start + step.duration,
            });
        }
    }
    for a in &agents {
        let mut mine: Vec<&Interval> = intervals.iter().filter(|iv| &iv.agent == a).collect();
        mine.sort_by_key(|iv| (iv.start, iv.end));
        for w in mine.windows(2) {
            if w[1].start < w[0].end {
                return Err(PlanError::Structure(format!(
                    "agent '{a}' is double-booked: {} [{}, {}] overlaps {} [{}, {}]",
                    w[0].action, w[0].start, w[0].end, w[1].action, w[1].start, w[1].end
                )));
            }
        }
    }
    let makespan = intervals.iter().map(|iv| iv.end).max().unwrap_or(0);
    Ok(Schedule { agents, intervals, makespan })
}

/// Σ(t_start + duration) over the plan's actions, each start/end pair counted
/// once. Pairs match by action, agents, and start time — the linkage the
/// durative encoding enforces. Fails on an unpaired durative step.
pub fn total_cost(plan: &Plan) -> Result<u64, PlanError> {
    let mut opens: BTreeMap<(String, Vec<String>, u64), i64> = BTreeMap::new();
    let mut cost = 0u64;
    for step in &plan.steps {
        let key = || (step.action.clone(), step.agents.clone(), step.t_start);
        match step.phase {
            Phase::Start => {
                *opens.entry(key()).or_insert(0) += 1;
                cost += step.t_start + step.duration;
            }
            Phase::End => {
                let n = opens.entry(key()).or_insert(0);
                *n -= 1;
                if *n < 0 {
                    return Err(PlanError::Structure(format!(
                        "end step {} has no matching start",
                        step.name()
                    )));
                }
            }
            Phase::Instantaneous => cost += step.t_start + step.duration,
        }
    }
    if let Some(((action, agents, t), _)) = opens.iter().find(|(_, n)| **n != 0) {
        return Err(PlanError::Structure(format!(
            "start step ({action} {}) at t={t} never ends",
            agents.join(" ")
        )));
    }
    Ok(cost)
}

pub fn makespan(schedule: &Schedule) -> u64 {
    schedule.intervals.iter().map(|iv| iv.end).max().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GanttFormat {
    Svg,
    Ascii,
    Json,
}

impl FromStr for GanttFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "svg" => Ok(GanttFormat::Svg),
            "ascii" => Ok(GanttFormat::Ascii),
            "json" => Ok(GanttFormat::Json),
            other => Err(format!("unknown gantt format '{other}' (svg, ascii, json)")),
        }
    }
}

pub fn render_gantt(schedule: &Schedule, format: GanttFormat) -> Vec<u8> {
    match format {
        GanttFormat::Svg => render_svg(schedule).into_bytes(),
        GanttFormat::Ascii => render_ascii(schedule).into_bytes(),
        GanttFormat::Json => {
            let mut out = serde_json::to_vec_pretty(schedule).expect("schedule serializes");
            out.push(b'\n');
            out
        }
    }
}

// --- ASCII -------------------------------------------------------------------

const ASCII_COLS: usize = 60;

fn render_ascii(schedule: &Schedule) -> String {
    let mut out = format!(
        "schedule: {} agents, {} intervals, makespan {}s\n",
        schedule.agents.len(),
        schedule.intervals.len(),
        schedule.makespan
    );
    if schedule.intervals.is_empty() {
        return out;
    }
    let span = schedule.makespan.max(1) as f64;
    let name_w = schedule.agents.iter().map(|a| a.len()).max().unwrap_or(4).max(4);
    let mut legend: Vec<(char, &Interval)> = Vec::new();
    let mut next_label = b'A';
    for agent in &schedule.agents {
        let mut row = vec![b'.'; ASCII_COLS];
        for iv in schedule.intervals.iter().filter(|iv| &iv.agent == agent) {
            let label = next_label as char;
            next_label = if next_label == b'Z' { b'a' } else { next_label + 1 };
            legend.push((label, iv));
            let lo = ((iv.start as f64 / span) * ASCII_COLS as f64).floor() as usize;
            let hi = ((iv.end as f64 / span) * ASCII_COLS as f64).ceil() as usize;
            for cell in row.iter_mut().take(hi.min(ASCII_COLS)).skip(lo.min(ASCII_COLS)) {
                *cell = label as u8;
            }
        }
        let _ = writeln!(
            out,
            "{agent:<name_w$} |{}|",
            String::from_utf8(row).expect("ascii row")
        );
    }
    out.push('\n');
    for (label, iv) in legend {
        let _ = writeln!(out, "  {label}: {} [{}s, {}s]", iv.action, iv.start, iv.end);
    }
    out
}

// --- SVG ---------------------------------------------------------------------

const SVG_WIDTH: f64 = 900.0;
const ROW_H: f64 = 28.0;
const GUTTER: f64 = 140.0;
const HEADER_H: f64 = 30.0;

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn color_for(agent: &str) -> &'static str {
    PALETTE[(fnv1a(agent) % PALETTE.len() as u64) as usize]
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_svg(schedule: &Schedule) -> String {
    let rows = schedule.agents.len().max(1);
    let height = HEADER_H + rows as f64 * ROW_H + 10.0;
    let span = schedule.makespan.max(1) as f64;
    let plot_w = SVG_WIDTH - GUTTER - 20.0;
    let x_of = |t: u64| GUTTER + (t as f64 / span) * plot_w;

    // joint actions (same action and span on several agents) get a hatch
    // overlay so the sharing is visible
    let mut seen: BTreeMap<(&str, u64, u64), usize> = BTreeMap::new();
    for iv in &schedule.intervals {
        *seen.entry((iv.action.as_str(), iv.start, iv.end)).or_insert(0) += 1;
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{height}" viewBox="0 0 {SVG_WIDTH} {height}" font-family="monospace" font-size="12">"##
    );
    out.push_str("  <defs>\n    <pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">\n      <line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#ffffff\" stroke-width=\"2\" stroke-opacity=\"0.55\"/>\n    </pattern>\n  </defs>\n");
    let _ = writeln!(
        out,
        r##"  <text x="{GUTTER}" y="18">makespan {}s</text>"##,
        schedule.makespan
    );
    for (i, agent) in schedule.agents.iter().enumerate() {
        let y = HEADER_H + i as f64 * ROW_H;
        let _ = writeln!(
            out,
            r##"  <text x="8" y="{:.2}">{}</text>"##,
            y + ROW_H * 0.65,
            xml_escape(agent)
        );
        for iv in schedule.intervals.iter().filter(|iv| &iv.agent == agent) {
            let x = x_of(iv.start);
            let w = (x_of(iv.end) - x).max(1.0);
            let _ = writeln!(
                out,
                r##"  <rect x="{x:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{}" rx="3"><title>{} [{}s, {}s] on {}</title></rect>"##,
                y + 3.0,
                ROW_H - 6.0,
                color_for(agent),
                xml_escape(&iv.action),
                iv.start,
                iv.end,
                xml_escape(agent),
            );
            if seen[&(iv.action.as_str(), iv.start, iv.end)] > 1 {
                let _ = writeln!(
                    out,
                    r##"  <rect x="{x:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="url(#hatch)" rx="3"/>"##,
                    y + 3.0,
                    ROW_H - 6.0,
                );
            }
            let _ = writeln!(
                out,
                r##"  <text x="{:.2}" y="{:.2}" fill="#ffffff">{}</text>"##,
                x + 4.0,
                y + ROW_H * 0.65,
                xml_escape(&iv.action),
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

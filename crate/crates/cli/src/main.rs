//! `tplan` — plan laboratory campaigns, render their schedules, and analyze
//! the electrochemistry they produce.
//!
//! Exit codes: 0 on success, 1 for domain failures (no plan, invalid plan,
//! unusable input), 2 for usage errors. Stdout carries human-readable
//! summaries; machine artifacts are only ever written through `-o`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tplan_analyzer::{
    fit_mle, marginal_histogram, model_line_band, sample_posterior, Dataset, FitConfig,
    FitResult, Histogram, ModelLineBand, ParamName, PriorRanges,
};
use tplan_core::error::PlanError;
use tplan_core::pddl::ast::{Domain, Problem, SourceText, StreamSpecSet};
use tplan_core::pddl::{parse_domain, parse_problem, parse_streams};
use tplan_core::planner::{prepare_task, solve_temporal, validate_plan, Mode, Phase, Plan};
use tplan_core::schedule::{extract_schedule, render_gantt, GanttFormat};
use tplan_core::search::SearchConfig;
use tplan_core::streams::StreamRegistry;
use tplan_core::temporal::DurativeConfig;
use tplan_report::{render_report, Report, RunLog};

#[derive(Parser)]
#[command(name = "tplan", version, about = "temporal planning and electrochemistry analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a planning task and print the schedule
    Plan(PlanArgs),
    /// Render a Gantt view of a serialized plan
    Gantt(GanttArgs),
    /// Replay a serialized plan against its task
    Validate(ValidateArgs),
    /// Fit the piecewise potential model to (pH, eV) measurements
    Fit(FitArgs),
    /// Render a campaign report from plan, fit, and run logs
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sequential,
    Parallel,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Sequential => Mode::Sequential,
            ModeArg::Parallel => Mode::Parallel,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Svg,
    Ascii,
    Json,
}

impl From<FormatArg> for GanttFormat {
    fn from(f: FormatArg) -> GanttFormat {
        match f {
            FormatArg::Svg => GanttFormat::Svg,
            FormatArg::Ascii => GanttFormat::Ascii,
            FormatArg::Json => GanttFormat::Json,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    domain: PathBuf,
    problem: PathBuf,
    /// stream declarations (.stream file)
    #[arg(long)]
    streams: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sequential")]
    mode: ModeArg,
    /// action durations and agent parameters (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// time grid step in seconds (overrides the config)
    #[arg(long = "t-unit")]
    t_unit: Option<u64>,
    /// time horizon in seconds (overrides the config)
    #[arg(long = "t-max")]
    t_max: Option<u64>,
    /// heuristic weight for the search
    #[arg(long)]
    weight: Option<f64>,
    /// write the plan as JSON
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GanttArgs {
    plan: PathBuf,
    #[arg(long, value_enum, default_value = "ascii")]
    format: FormatArg,
    /// write the rendering to a file (required for svg and json)
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    domain: PathBuf,
    problem: PathBuf,
    plan: PathBuf,
    /// stream declarations the plan was produced with
    #[arg(long)]
    streams: Option<PathBuf>,
    /// duration/agent table the plan was produced with
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with a pH column and an eV column
    data: PathBuf,
    /// posterior draws (only used with --posterior-out)
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// write the fitted parameters as JSON
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// also sample the posterior and write marginals plus the model band
    #[arg(long)]
    posterior_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    plan: PathBuf,
    fit: PathBuf,
    logs: PathBuf,
    /// posterior artifact for the marginal-histogram section
    #[arg(long)]
    posterior: Option<PathBuf>,
    #[arg(long, default_value = "Electrochemistry Campaign Report")]
    title: String,
    /// timestamp to stamp the report with (default: current UTC time)
    #[arg(long)]
    timestamp: Option<String>,
    /// gantt file the report references
    #[arg(long, default_value = "gantt.svg")]
    gantt: String,
    /// write markdown here and the JSON sidecar alongside it
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// The posterior file `fit --posterior-out` writes and `report --posterior`
/// reads back.
#[derive(Serialize, Deserialize)]
struct PosteriorArtifact {
    marginals: Vec<Histogram<f64>>,
    model_line_band: ModelLineBand<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => run_plan(a),
        Command::Gantt(a) => run_gantt(a),
        Command::Validate(a) => run_validate(a),
        Command::Fit(a) => run_fit(a),
        Command::Report(a) => run_report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(1)
        }
    }
}

// --- shared loading -----------------------------------------------------------

fn read_source(path: &Path) -> Result<SourceText> {
    let content = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(SourceText::new(content, path.display().to_string()))
}

fn load_task(
    domain: &Path,
    problem: &Path,
    streams: Option<&Path>,
) -> Result<(Domain, Problem, StreamSpecSet)> {
    let dom = parse_domain(&read_source(domain)?)?;
    let prob = parse_problem(&read_source(problem)?, &dom)?;
    let specs = match streams {
        Some(p) => parse_streams(&read_source(p)?, &dom)?,
        None => StreamSpecSet { streams: Vec::new() },
    };
    Ok((dom, prob, specs))
}

fn load_config(
    config: Option<&Path>,
    t_unit: Option<u64>,
    t_max: Option<u64>,
) -> Result<DurativeConfig> {
    let mut cfg = match config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))?;
            DurativeConfig::from_toml_str(&text)?
        }
        None => DurativeConfig::default(),
    };
    if let Some(u) = t_unit {
        cfg.unit_t = u;
    }
    if let Some(m) = t_max {
        cfg.t_max = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

// --- subcommands ----------------------------------------------------------------

fn run_plan(a: PlanArgs) -> Result<ExitCode> {
    let (dom, prob, specs) = load_task(&a.domain, &a.problem, a.streams.as_deref())?;
    let cfg = load_config(a.config.as_deref(), a.t_unit, a.t_max)?;
    let mut scfg = SearchConfig::default();
    if let Some(w) = a.weight {
        scfg.weight = w;
    }
    let mode = Mode::from(a.mode);
    let mut reg = StreamRegistry::with_builtins(&cfg);

    match solve_temporal(&dom, &prob, &specs, &cfg, &scfg, mode, &mut reg) {
        Ok(Some(plan)) => {
            println!(
                "plan: {} steps, mode {}, cost {} s, makespan {} s",
                plan.steps.len(),
                plan.mode,
                plan.cost,
                plan.makespan
            );
            for s in &plan.steps {
                match s.phase {
                    Phase::Instantaneous => println!("  t={:<5} {}", s.t_start, s.name()),
                    Phase::Start => {
                        println!("  t={:<5} start {} [{} s]", s.t_start, s.name(), s.duration)
                    }
                    Phase::End => {
                        println!("  t={:<5} end   {}", s.t_start + s.duration, s.name())
                    }
                }
            }
            if let Some(out) = &a.out {
                write_pretty(out, &plan)?;
                println!("plan written to {}", out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Ok(None) => {
            eprintln!("no plan found");
            Ok(ExitCode::from(1))
        }
        Err(PlanError::NoPlanWithinTMax) => {
            eprintln!("no plan within t_max");
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e.into()),
    }
}

fn run_gantt(a: GanttArgs) -> Result<ExitCode> {
    let plan: Plan = load_json(&a.plan)?;
    let schedule = extract_schedule(&plan)?;
    let bytes = render_gantt(&schedule, GanttFormat::from(a.format));
    match &a.out {
        Some(p) => {
            fs::write(p, &bytes).with_context(|| format!("writing {}", p.display()))?;
            println!(
                "gantt written to {} ({} agents, makespan {} s)",
                p.display(),
                schedule.agents.len(),
                schedule.makespan
            );
        }
        None if a.format == FormatArg::Ascii => {
            print!("{}", String::from_utf8_lossy(&bytes));
        }
        None => {
            eprintln!("svg and json renderings need -o <file>");
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_validate(a: ValidateArgs) -> Result<ExitCode> {
    let (dom, prob, specs) = load_task(&a.domain, &a.problem, a.streams.as_deref())?;
    let cfg = load_config(a.config.as_deref(), None, None)?;
    let plan: Plan = load_json(&a.plan)?;
    let mut reg = StreamRegistry::with_builtins(&cfg);
    let task = prepare_task(&dom, &prob, &specs, &cfg, plan.mode, &mut reg)?;
    let report = validate_plan(&plan, &task);
    if report.valid {
        println!(
            "plan is valid: {} steps, cost {} s",
            plan.steps.len(),
            report.recomputed_cost
        );
        Ok(ExitCode::SUCCESS)
    } else {
        let at = report
            .failed_step
            .map(|i| format!(" at step {}", i))
            .unwrap_or_default();
        let reason = report.reason.unwrap_or_else(|| "unspecified".to_owned());
        eprintln!("plan is invalid{}: {}", at, reason);
        Ok(ExitCode::from(1))
    }
}

fn run_fit(a: FitArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&a.data)
        .with_context(|| format!("reading {}", a.data.display()))?;
    let d = Dataset::<f64>::from_csv(&text)?;
    let fit = fit_mle(&d, None, &FitConfig::default())?;

    println!("fit over {} points:", d.len());
    for name in ParamName::ALL {
        println!("  {:<9} {:>12.4}", name.as_str(), fit.params.get(name));
    }
    println!("  log-likelihood {:.4}", fit.log_likelihood);
    for note in &fit.diagnostics {
        println!("  note: {}", note);
    }

    if let Some(p) = &a.out {
        write_pretty(p, &fit)?;
        println!("fit written to {}", p.display());
    }
    if let Some(p) = &a.posterior_out {
        let artifact = build_posterior(&d, &fit, a.samples, a.seed)?;
        write_pretty(p, &artifact)?;
        println!("posterior written to {} ({} draws)", p.display(), a.samples);
    }
    Ok(ExitCode::SUCCESS)
}

fn build_posterior(
    d: &Dataset<f64>,
    fit: &FitResult<f64>,
    samples: usize,
    seed: u64,
) -> Result<PosteriorArtifact> {
    let prior = PriorRanges::data_informed(d);
    let ws = sample_posterior(d, &prior, samples, seed)?;
    let marginals = ParamName::ALL
        .into_iter()
        .map(|name| marginal_histogram(&ws, name, 40))
        .collect::<Result<Vec<_>, _>>()?;

    let (lo, hi) = d
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(ph, _)| {
            (lo.min(ph), hi.max(ph))
        });
    let grid: Vec<f64> = (0..=60).map(|i| lo + (hi - lo) * i as f64 / 60.0).collect();
    let model_line_band = model_line_band(&ws, &grid)?;
    // the artifact documents the fit it accompanies
    let _ = fit;
    Ok(PosteriorArtifact { marginals, model_line_band })
}

fn run_report(a: ReportArgs) -> Result<ExitCode> {
    let plan: Plan = load_json(&a.plan)?;
    let fit: FitResult<f64> = load_json(&a.fit)?;
    let logs: Vec<RunLog> = load_json(&a.logs)?;
    let marginals = match &a.posterior {
        Some(p) => load_json::<PosteriorArtifact>(p)?.marginals,
        None => Vec::new(),
    };
    let schedule = extract_schedule(&plan)?;
    let timestamp = a.timestamp.unwrap_or_else(now_utc);

    let report = Report {
        title: a.title,
        timestamp,
        logs,
        fit: Some(fit),
        marginals,
        schedule: Some(schedule),
        gantt_path: Some(a.gantt),
    };
    let rendered = render_report(&report)?;
    match &a.out {
        Some(p) => {
            fs::write(p, &rendered.markdown)
                .with_context(|| format!("writing {}", p.display()))?;
            let sidecar = p.with_extension("json");
            let mut text = serde_json::to_string_pretty(&rendered.sidecar)?;
            text.push('\n');
            fs::write(&sidecar, text)
                .with_context(|| format!("writing {}", sidecar.display()))?;
            println!(
                "report written to {} (sidecar {})",
                p.display(),
                sidecar.display()
            );
        }
        None => print!("{}", rendered.markdown),
    }
    Ok(ExitCode::SUCCESS)
}

fn now_utc() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_else(|_| "unknown".to_owned())
}

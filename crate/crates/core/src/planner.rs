//! The planning driver: eager stream evaluation, optimistic instantiation,
//! grounded search, and plan evaluation with blacklisting, looped until a
//! fully bound plan validates.
//!
//! Two modes share the loop. Sequential mode searches the instantaneous task
//! and lays the steps out back-to-back; parallel mode first rewrites every
//! action into a `a:start`/`a:end` pair over a timing grid, so agents overlap
//! whenever the preconditions allow it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, StreamError};
use crate::model::{apply, ground_task, GroundAtom, GroundTask};
use crate::pddl::ast::{Arg, Domain, Literal, Problem, StreamKind, StreamSpecSet, TypedName};
use crate::search::{weighted_astar, SearchConfig};
use crate::streams::{
    bind_stream, eval_eager, instantiate_optimistic, is_placeholder, BindResult, FactSet,
    InstanceKey, StreamInstance, StreamRegistry,
};
use crate::temporal::{
    make_durative, parse_timing, timing_name, DurativeConfig, DurativeDomain, TIMING_TYPE,
};

/// Cap on evaluate/blacklist/re-search rounds.
pub const ITERATION_LIMIT: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sequential,
    Parallel,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Sequential => "sequential",
            Mode::Parallel => "parallel",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(Mode::Sequential),
            "parallel" => Ok(Mode::Parallel),
            other => Err(PlanError::Structure(format!(
                "unknown mode '{}' (sequential, parallel)",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Start,
    End,
    Instantaneous,
}

/// One scheduled step. For durative phases `args` is the full searched
/// binding, timing objects included; `t_start` is the time the underlying
/// action begins (for an `end` step, the time its pair began).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub action: String,
    pub args: Vec<String>,
    pub phase: Phase,
    pub t_start: u64,
    pub duration: u64,
    pub agents: Vec<String>,
}

impl PlanStep {
    /// The ground-action schema name this step replays as.
    pub fn schema_name(&self) -> String {
        match self.phase {
            Phase::Start => format!("{}:start", self.action),
            Phase::End => format!("{}:end", self.action),
            Phase::Instantaneous => self.action.clone(),
        }
    }

    /// Arguments of the base (untimed) action.
    pub fn base_args(&self) -> &[String] {
        match self.phase {
            Phase::Start => &self.args[..self.args.len() - 1],
            Phase::End => &self.args[..self.args.len() - 3],
            Phase::Instantaneous => &self.args,
        }
    }

    /// Display form over the base arguments, e.g. `(wash beaker1 washer)`.
    pub fn name(&self) -> String {
        let mut out = format!("({}", self.action);
        for a in self.base_args() {
            out.push(' ');
            out.push_str(a);
        }
        out.push(')');
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    /// Σ over actions of (start time + duration), in seconds.
    pub cost: u64,
    /// Latest completion time over all actions, in seconds.
    pub makespan: u64,
    pub mode: Mode,
}

// --- episode preparation -----------------------------------------------------

enum Episode {
    Instantaneous { dom: Domain, prob: Problem, cfg: DurativeConfig },
    Durative { durative: DurativeDomain, prob: Problem },
}

impl Episode {
    fn prepare(
        dom: &Domain,
        prob: &Problem,
        cfg: &DurativeConfig,
        mode: Mode,
    ) -> Result<Episode, PlanError> {
        match mode {
            Mode::Sequential => Ok(Episode::Instantaneous {
                dom: dom.clone(),
                prob: prob.clone(),
                cfg: cfg.clone(),
            }),
            Mode::Parallel => {
                let durative = make_durative(dom, cfg)?;
                let prob = durative_problem(prob, &durative, cfg);
                Ok(Episode::Durative { durative, prob })
            }
        }
    }

    fn domain(&self) -> &Domain {
        match self {
            Episode::Instantaneous { dom, .. } => dom,
            Episode::Durative { durative, .. } => &durative.domain,
        }
    }

    fn problem(&self) -> &Problem {
        match self {
            Episode::Instantaneous { prob, .. } => prob,
            Episode::Durative { prob, .. } => prob,
        }
    }
}

/// Timing objects, the starting clock fact, and agent availability around the
/// base problem; the goal additionally requires every agent free, so plans
/// cannot end mid-action.
fn durative_problem(prob: &Problem, durative: &DurativeDomain, cfg: &DurativeConfig) -> Problem {
    let mut out = prob.clone();
    out.domain_name = durative.domain.name.clone();
    for t in cfg.grid() {
        out.objects.push(TypedName::new(timing_name(t), TIMING_TYPE));
    }
    let agent_types = durative.agent_types();
    let agents: Vec<String> = prob
        .universe(&durative.base)
        .filter(|o| agent_types.iter().any(|ty| durative.base.is_subtype(&o.ty, ty)))
        .map(|o| o.name.clone())
        .collect();
    out.init.insert(GroundAtom::new("at_time", [timing_name(0)]));
    for ag in &agents {
        out.init.insert(GroundAtom::new("is_free", [ag.clone()]));
        out.goal
            .literals
            .push(Literal::positive("is_free", vec![Arg::Name(ag.clone())]));
    }
    out
}

// --- optimistic-plan evaluation ----------------------------------------------

#[derive(Debug)]
pub enum Evaluation {
    /// All placeholders bound. `certified` is ψ, the newly certified facts;
    /// `bound` names the instances that ran.
    Concrete {
        steps: Vec<(String, Vec<String>)>,
        certified: FactSet,
        bound: BTreeSet<InstanceKey>,
    },
    /// A generator came up empty; the named instances go to the blacklist.
    Failed { instances: BTreeSet<InstanceKey> },
}

struct Binder<'r> {
    work: Vec<StreamInstance>,
    /// placeholder → producing instance index
    producer: BTreeMap<String, usize>,
    mapping: BTreeMap<String, String>,
    certified: FactSet,
    bound: BTreeSet<InstanceKey>,
    reg: &'r mut StreamRegistry,
}

impl Binder<'_> {
    /// Bind the instance producing `ph`, first binding its own placeholder
    /// inputs. `Ok(None)` on success; `Ok(Some(key))` names the failed
    /// instance.
    fn ensure(&mut self, ph: &str) -> Result<Option<InstanceKey>, StreamError> {
        if self.mapping.contains_key(ph) {
            return Ok(None);
        }
        let idx = *self
            .producer
            .get(ph)
            .expect("optimistic placeholder has a producing instance");
        let inputs = self.work[idx].input_binding.clone();
        for input in &inputs {
            if is_placeholder(input) {
                if let Some(failed) = self.ensure(input)? {
                    return Ok(Some(failed));
                }
            }
        }
        let original_key = self.work[idx].key();
        let mut inst = self.work[idx].clone();
        inst.input_binding = inst
            .input_binding
            .iter()
            .map(|a| self.mapping.get(a).cloned().unwrap_or_else(|| a.clone()))
            .collect();
        match bind_stream(&mut inst, self.reg)? {
            BindResult::Bound { facts, mapping } => {
                self.mapping.extend(mapping);
                self.certified.extend(&facts);
                self.bound.insert(original_key);
                self.work[idx].status = inst.status;
                Ok(None)
            }
            BindResult::Failed { .. } => Ok(Some(original_key)),
        }
    }
}

/// Algorithm line 5: walk the optimistic plan in order, running each
/// placeholder's generator (producers before consumers). On full success the
/// concrete step list and ψ come back; on the first exhausted generator the
/// failed instance is reported for blacklisting.
pub fn evaluate_optimistic_plan(
    steps: &[(String, Vec<String>)],
    instances: &[StreamInstance],
    reg: &mut StreamRegistry,
) -> Result<Evaluation, StreamError> {
    let mut producer = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        for out in &inst.outputs {
            producer.insert(out.clone(), i);
        }
    }
    let mut binder = Binder {
        work: instances.to_vec(),
        producer,
        mapping: BTreeMap::new(),
        certified: FactSet::default(),
        bound: BTreeSet::new(),
        reg,
    };
    for (_, binding) in steps {
        for arg in binding {
            if is_placeholder(arg) {
                if let Some(failed) = binder.ensure(arg)? {
                    return Ok(Evaluation::Failed { instances: [failed].into() });
                }
            }
        }
    }
    let concrete = steps
        .iter()
        .map(|(name, binding)| {
            let args = binding
                .iter()
                .map(|a| binder.mapping.get(a).cloned().unwrap_or_else(|| a.clone()))
                .collect();
            (name.clone(), args)
        })
        .collect();
    Ok(Evaluation::Concrete {
        steps: concrete,
        certified: binder.certified,
        bound: binder.bound,
    })
}

// --- plan assembly -------------------------------------------------------------

fn split_phase(schema_name: &str) -> (String, Phase) {
    if let Some(base) = schema_name.strip_suffix(":start") {
        (base.to_owned(), Phase::Start)
    } else if let Some(base) = schema_name.strip_suffix(":end") {
        (base.to_owned(), Phase::End)
    } else {
        (schema_name.to_owned(), Phase::Instantaneous)
    }
}

fn agent_names(
    dom: &Domain,
    agents_cfg: &BTreeMap<String, Vec<String>>,
    action: &str,
    binding: &[String],
) -> Vec<String> {
    let Some(params) = agents_cfg.get(action) else { return vec![] };
    let Some(schema) = dom.action(action) else { return vec![] };
    params
        .iter()
        .filter_map(|p| {
            schema
                .params
                .iter()
                .position(|tp| &tp.name == p)
                .and_then(|i| binding.get(i).cloned())
        })
        .collect()
}

fn parse_grid_time(name: &str, what: &str) -> Result<u64, PlanError> {
    parse_timing(name)
        .ok_or_else(|| PlanError::Structure(format!("{what} '{name}' is not a timing object")))
}

fn build_sequential_plan(
    dom: &Domain,
    cfg: &DurativeConfig,
    steps: &[(String, Vec<String>)],
) -> Plan {
    let mut out = Vec::with_capacity(steps.len());
    let mut clock = 0u64;
    let mut cost = 0u64;
    for (name, binding) in steps {
        let duration = cfg.grid_duration(name).unwrap_or(cfg.unit_t);
        let agents = agent_names(dom, &cfg.agents, name, binding);
        out.push(PlanStep {
            action: name.clone(),
            args: binding.clone(),
            phase: Phase::Instantaneous,
            t_start: clock,
            duration,
            agents,
        });
        cost += clock + duration;
        clock += duration;
    }
    Plan { steps: out, cost, makespan: clock, mode: Mode::Sequential }
}

fn build_parallel_plan(
    durative: &DurativeDomain,
    steps: &[(String, Vec<String>)],
) -> Result<Plan, PlanError> {
    let mut out = Vec::with_capacity(steps.len());
    let mut cost = 0u64;
    let mut makespan = 0u64;
    // Open starts keyed by what the encoding actually links across the
    // pair: action name (through agent_at_time_<a>), claimed agents, and the
    // claim time. Non-agent parameters are free to differ between a start
    // and its end.
    let mut open: BTreeMap<(String, Vec<String>, u64), u32> = BTreeMap::new();
    for (schema_name, binding) in steps {
        let (action, phase) = split_phase(schema_name);
        let duration = *durative
            .durations
            .get(&action)
            .ok_or_else(|| PlanError::Structure(format!("no duration for action '{action}'")))?;
        match phase {
            Phase::Start => {
                let t = parse_grid_time(binding.last().map_or("", |s| s), "start time")?;
                let base = binding[..binding.len() - 1].to_vec();
                let agents = agent_names(&durative.base, &durative.agents, &action, &base);
                *open.entry((action.clone(), agents.clone(), t)).or_insert(0) += 1;
                cost += t + duration;
                makespan = makespan.max(t + duration);
                out.push(PlanStep {
                    action,
                    args: binding.clone(),
                    phase: Phase::Start,
                    t_start: t,
                    duration,
                    agents,
                });
            }
            Phase::End => {
                if binding.len() < 3 {
                    return Err(PlanError::Structure(format!(
                        "end step '({schema_name})' lacks timing arguments"
                    )));
                }
                let agent_t = parse_grid_time(&binding[binding.len() - 3], "agent time")?;
                let base = binding[..binding.len() - 3].to_vec();
                let agents = agent_names(&durative.base, &durative.agents, &action, &base);
                let matched = open
                    .get_mut(&(action.clone(), agents.clone(), agent_t))
                    .filter(|n| **n > 0)
                    .map(|n| *n -= 1);
                if matched.is_none() {
                    return Err(PlanError::Structure(format!(
                        "end step ({} {}) at t={agent_t} has no open start",
                        action,
                        base.join(" ")
                    )));
                }
                out.push(PlanStep {
                    action,
                    args: binding.clone(),
                    phase: Phase::End,
                    t_start: agent_t,
                    duration,
                    agents,
                });
            }
            Phase::Instantaneous => {
                return Err(PlanError::Structure(format!(
                    "instantaneous step '({schema_name})' in a durative plan"
                )));
            }
        }
    }
    if let Some(((action, agents, t), _)) = open.iter().find(|(_, n)| **n > 0) {
        return Err(PlanError::Structure(format!(
            "start step ({} {}) at t={t} never ends",
            action,
            agents.join(" ")
        )));
    }
    Ok(Plan { steps: out, cost, makespan, mode: Mode::Parallel })
}

// --- validation ----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid: bool,
    /// Index of the first failing step, if any.
    pub failed_step: Option<usize>,
    pub reason: Option<String>,
    pub goal_satisfied: bool,
    /// Σ(t_start + duration) recomputed from the steps.
    pub recomputed_cost: u64,
}

/// Replay the plan through the ground task from init. Invalid plans produce a
/// failing report naming the first violated precondition; they never panic.
pub fn validate_plan(plan: &Plan, task: &GroundTask) -> ValidationReport {
    let recomputed_cost = plan
        .steps
        .iter()
        .filter(|s| s.phase != Phase::End)
        .map(|s| s.t_start + s.duration)
        .sum();
    let fail = |step: Option<usize>, reason: String| ValidationReport {
        valid: false,
        failed_step: step,
        reason: Some(reason),
        goal_satisfied: false,
        recomputed_cost,
    };

    let mut s = task.init.clone();
    for (i, step) in plan.steps.iter().enumerate() {
        let schema = step.schema_name();
        let Some(action) = task
            .actions
            .iter()
            .find(|a| a.schema_name == schema && a.binding == step.args)
        else {
            return fail(Some(i), format!("no ground action ({schema} {})", step.args.join(" ")));
        };
        match apply(&s, action) {
            Ok(next) => s = next,
            Err(e) => return fail(Some(i), e.to_string()),
        }
    }

    let goal_satisfied = task.goal.iter().all(|lit| {
        let truth = if lit.atom.predicate == "=" {
            lit.atom.args.first() == lit.atom.args.get(1)
        } else {
            s.atoms.contains(&lit.atom)
        };
        truth != lit.negated
    });
    if !goal_satisfied {
        return fail(None, "goal not satisfied after the final step".to_owned());
    }
    if recomputed_cost != plan.cost {
        return ValidationReport {
            valid: false,
            failed_step: None,
            reason: Some(format!(
                "declared cost {} but steps sum to {recomputed_cost}",
                plan.cost
            )),
            goal_satisfied: true,
            recomputed_cost,
        };
    }
    ValidationReport {
        valid: true,
        failed_step: None,
        reason: None,
        goal_satisfied: true,
        recomputed_cost,
    }
}

// --- the driver ------------------------------------------------------------------

/// Problem init plus eagerly evaluated stream facts. In sequential mode the
/// timing machinery stays out of the fact base.
fn eager_base(
    episode: &Episode,
    specs: &StreamSpecSet,
    cfg: &DurativeConfig,
    mode: Mode,
    reg: &mut StreamRegistry,
) -> Result<FactSet, PlanError> {
    let init_facts = FactSet {
        certified: episode.problem().init.clone(),
        function_values: BTreeMap::new(),
    };
    let eager_cfg = match mode {
        Mode::Parallel => cfg.clone(),
        Mode::Sequential => DurativeConfig {
            durations: BTreeMap::new(),
            agents: BTreeMap::new(),
            ..cfg.clone()
        },
    };
    let mut base = eval_eager(specs, &init_facts, &eager_cfg, reg)?;
    base.certified.extend(init_facts.certified.iter().cloned());
    Ok(base)
}

/// Ground the task exactly as the solver's first round sees it: episode
/// transform, eager stream evaluation, closed-world grounding. This is the
/// task a serialized plan replays against.
pub fn prepare_task(
    dom: &Domain,
    prob: &Problem,
    specs: &StreamSpecSet,
    cfg: &DurativeConfig,
    mode: Mode,
    reg: &mut StreamRegistry,
) -> Result<GroundTask, PlanError> {
    let episode = Episode::prepare(dom, prob, cfg, mode)?;
    let base = eager_base(&episode, specs, cfg, mode, reg)?;
    Ok(ground_task(episode.domain(), episode.problem(), &base)?)
}

/// Plan with the default iteration limit.
pub fn solve_temporal(
    dom: &Domain,
    prob: &Problem,
    specs: &StreamSpecSet,
    cfg: &DurativeConfig,
    scfg: &SearchConfig,
    mode: Mode,
    reg: &mut StreamRegistry,
) -> Result<Option<Plan>, PlanError> {
    solve_with_limit(dom, prob, specs, cfg, scfg, mode, reg, ITERATION_LIMIT)
}

/// The full loop: 𝒰ᶜ once up front, then instantiate-optimistic / search /
/// evaluate rounds, blacklisting failed instances, until a plan binds and
/// validates. `Ok(None)` means sequential search exhausted the space;
/// parallel exhaustion reads as "no plan within t_max" since the grid is the
/// only bound.
#[allow(clippy::too_many_arguments)]
pub fn solve_with_limit(
    dom: &Domain,
    prob: &Problem,
    specs: &StreamSpecSet,
    cfg: &DurativeConfig,
    scfg: &SearchConfig,
    mode: Mode,
    reg: &mut StreamRegistry,
    limit: u32,
) -> Result<Option<Plan>, PlanError> {
    let episode = Episode::prepare(dom, prob, cfg, mode)?;
    let mut base = eager_base(&episode, specs, cfg, mode, reg)?;

    let has_optimistic = specs.of_kind(StreamKind::Optimistic).next().is_some();
    let mut blacklist: BTreeSet<InstanceKey> = BTreeSet::new();
    let mut rounds = 0u32;
    loop {
        if has_optimistic && rounds >= limit {
            return Err(PlanError::IterationLimit(limit));
        }
        rounds += 1;

        let opt = instantiate_optimistic(specs, &base, &blacklist);
        let mut extra = FactSet {
            certified: base.certified.clone(),
            function_values: base.function_values.clone(),
        };
        extra.extend(&opt.facts);
        // init atoms live in the problem; keep `extra` to stream-added facts
        for atom in &episode.problem().init {
            extra.certified.remove(atom);
        }

        let task = ground_task(episode.domain(), episode.problem(), &extra)?;
        let Some(prefix) = weighted_astar(&task, scfg)? else {
            return match mode {
                Mode::Parallel => Err(PlanError::NoPlanWithinTMax),
                Mode::Sequential => Ok(None),
            };
        };
        let raw: Vec<(String, Vec<String>)> = prefix
            .steps
            .iter()
            .map(|a| (a.schema_name.clone(), a.binding.clone()))
            .collect();

        match evaluate_optimistic_plan(&raw, &opt.instances, reg)? {
            Evaluation::Failed { instances } => {
                let before = blacklist.len();
                blacklist.extend(instances);
                if blacklist.len() == before {
                    return Err(PlanError::Structure(
                        "optimistic evaluation failed without progress".to_owned(),
                    ));
                }
            }
            Evaluation::Concrete { steps, certified, bound } => {
                let plan = match &episode {
                    Episode::Instantaneous { dom, cfg, .. } => {
                        build_sequential_plan(dom, cfg, &steps)
                    }
                    Episode::Durative { durative, .. } => build_parallel_plan(durative, &steps)?,
                };
                if bound.is_empty() {
                    // nothing optimistic in the plan: already validated by search
                    debug_assert!(validate_plan(&plan, &task).valid);
                    return Ok(Some(plan));
                }
                // re-ground over base ∪ ψ and check the concrete plan holds up
                let mut checked = FactSet {
                    certified: base.certified.clone(),
                    function_values: base.function_values.clone(),
                };
                checked.extend(&certified);
                for atom in &episode.problem().init {
                    checked.certified.remove(atom);
                }
                let check_task = ground_task(episode.domain(), episode.problem(), &checked)?;
                if validate_plan(&plan, &check_task).valid {
                    // ψ (the newly certified facts) is surfaced to callers via
                    // the growing fact base, not consumed by the loop
                    base.extend(&certified);
                    return Ok(Some(plan));
                }
                let before = blacklist.len();
                blacklist.extend(bound);
                if blacklist.len() == before {
                    return Err(PlanError::Structure(
                        "bound plan failed validation without progress".to_owned(),
                    ));
                }
            }
        }
    }
}

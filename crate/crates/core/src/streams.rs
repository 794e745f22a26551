//! Stream evaluation: eager cost/time facts over the timing grid, optimistic
//! instantiation with placeholder objects, and generator binding.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::StreamError;
use crate::model::GroundAtom;
use crate::pddl::ast::{Arg, Literal, StreamKind, StreamSpec, StreamSpecSet};
use crate::temporal::{
    cost_end_fn, cost_start_fn, timing_name, update_time_pred, DurativeConfig,
};

/// Certified facts plus numeric function values (cost streams).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactSet {
    pub certified: BTreeSet<GroundAtom>,
    pub function_values: BTreeMap<(String, Vec<String>), u64>,
}

impl FactSet {
    pub fn is_empty(&self) -> bool {
        self.certified.is_empty() && self.function_values.is_empty()
    }

    pub fn extend(&mut self, other: &FactSet) {
        self.certified.extend(other.certified.iter().cloned());
        self.function_values
            .extend(other.function_values.iter().map(|(k, v)| (k.clone(), *v)));
    }
}

/// Optimistic placeholders are `#oK` tokens; they stand for objects a
/// generator has not produced yet.
pub fn is_placeholder(name: &str) -> bool {
    name.starts_with("#o")
}

pub fn placeholder(k: usize) -> String {
    format!("#o{k}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamStatus {
    Untried,
    Bound,
    Failed,
}

/// Identifies an instance for blacklisting: stream name + input binding.
pub type InstanceKey = (String, Vec<String>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamInstance {
    pub spec: StreamSpec,
    pub input_binding: Vec<String>,
    /// Placeholder tokens standing for the yet-unbound outputs.
    pub outputs: Vec<String>,
    pub status: StreamStatus,
}

impl StreamInstance {
    pub fn key(&self) -> InstanceKey {
        (self.spec.name.clone(), self.input_binding.clone())
    }

    pub fn describe(&self) -> String {
        let mut s = format!("({}", self.spec.name);
        for b in &self.input_binding {
            s.push(' ');
            s.push_str(b);
        }
        s.push(')');
        s
    }
}

/// `t' = max(t, t_agent + T_action)`, defined only while the action is still
/// running (`t_agent ≤ t ≤ t_agent + T_action`) and the horizon is not hit.
pub fn update_time(t_agent: u64, t: u64, t_action: u64, t_max: u64) -> Option<u64> {
    let t_agent_end = t_agent + t_action;
    let t_new = t.max(t_agent_end);
    if t_agent <= t && t <= t_agent_end && t_new < t_max {
        Some(t_new)
    } else {
        None
    }
}

#[derive(Debug, Clone)]
pub enum GeneratorImpl {
    /// Grid clock arithmetic for `update_time_<action>` streams.
    UpdateTime,
    /// Always succeeds with no outputs; certifies the declared facts as-is.
    Constant,
    /// Fixed input→output rows.
    TableLookup(Vec<(Vec<String>, Vec<String>)>),
    /// Pops one output tuple per binding attempt; empty queue means failure.
    SampleToken(Vec<Vec<String>>),
}

/// Host-registered generators, keyed by the `:generator` name in stream
/// declarations.
#[derive(Debug, Clone)]
pub struct StreamRegistry {
    cfg: DurativeConfig,
    gens: BTreeMap<String, GeneratorImpl>,
}

impl StreamRegistry {
    pub fn with_builtins(cfg: &DurativeConfig) -> Self {
        let mut gens = BTreeMap::new();
        gens.insert("update_time".to_owned(), GeneratorImpl::UpdateTime);
        gens.insert("constant".to_owned(), GeneratorImpl::Constant);
        StreamRegistry { cfg: cfg.clone(), gens }
    }

    pub fn register(&mut self, name: impl Into<String>, gen: GeneratorImpl) {
        self.gens.insert(name.into(), gen);
    }

    pub fn is_registered(&self, name: &str) -> bool {
        self.gens.contains_key(name)
    }

    fn get(&self, name: &str) -> Result<&GeneratorImpl, StreamError> {
        self.gens
            .get(name)
            .ok_or_else(|| StreamError::UnregisteredGenerator(name.to_owned()))
    }

    fn get_mut(&mut self, name: &str) -> Result<&mut GeneratorImpl, StreamError> {
        self.gens
            .get_mut(name)
            .ok_or_else(|| StreamError::UnregisteredGenerator(name.to_owned()))
    }
}

/// All `(update_time_<action> t_agent t t')` facts over `grid` for one
/// action duration.
pub fn update_time_facts(action: &str, t_action: u64, grid: &[u64], t_max: u64) -> Vec<GroundAtom> {
    let pred = update_time_pred(action);
    let mut out = Vec::new();
    for &t_agent in grid {
        for &t in grid {
            if let Some(t_new) = update_time(t_agent, t, t_action, t_max) {
                out.push(GroundAtom::new(
                    pred.clone(),
                    [timing_name(t_agent), timing_name(t), timing_name(t_new)],
                ));
            }
        }
    }
    out
}

fn substitute(lit: &Literal, bind: &BTreeMap<&str, &str>) -> GroundAtom {
    GroundAtom {
        predicate: lit.predicate.clone(),
        args: lit
            .args
            .iter()
            .map(|a| match a {
                Arg::Name(n) => n.clone(),
                Arg::Var(v) => (*bind.get(v.as_str()).expect("unbound stream variable")).to_owned(),
            })
            .collect(),
    }
}

/// Evaluate 𝒮ᶜ: the grid-wide clock facts and cost values for every
/// configured action, plus any declared eager streams.
pub fn eval_eager(
    specs: &StreamSpecSet,
    base: &FactSet,
    cfg: &DurativeConfig,
    reg: &StreamRegistry,
) -> Result<FactSet, StreamError> {
    let mut out = FactSet::default();
    let grid = cfg.grid();

    for action in cfg.durations.keys() {
        let t_action = cfg.grid_duration(action).expect("key comes from the map");
        for atom in update_time_facts(action, t_action, &grid, cfg.t_max) {
            out.certified.insert(atom);
        }
        for &t in &grid {
            out.function_values
                .insert((cost_start_fn(action), vec![timing_name(t)]), t);
        }
        out.function_values.insert((cost_end_fn(action), vec![]), t_action);
    }

    for spec in specs.of_kind(StreamKind::Eager) {
        match reg.get(&spec.generator)? {
            GeneratorImpl::UpdateTime => {
                // Same facts as the configured grid pass; harmless overlap.
                let Some(action) = spec.name.strip_prefix("update_time_") else { continue };
                let Some(t_action) = cfg.grid_duration(action) else { continue };
                for atom in update_time_facts(action, t_action, &grid, cfg.t_max) {
                    out.certified.insert(atom);
                }
            }
            GeneratorImpl::Constant => {
                let bind = BTreeMap::new();
                for lit in &spec.certified {
                    out.certified.insert(substitute(lit, &bind));
                }
            }
            GeneratorImpl::TableLookup(rows) => {
                for (inputs, outputs) in rows {
                    if inputs.len() != spec.inputs.len() || outputs.len() != spec.outputs.len() {
                        continue;
                    }
                    let mut bind: BTreeMap<&str, &str> = BTreeMap::new();
                    for (tn, v) in spec.inputs.iter().zip(inputs) {
                        bind.insert(&tn.name, v);
                    }
                    for (tn, v) in spec.outputs.iter().zip(outputs) {
                        bind.insert(&tn.name, v);
                    }
                    let applicable = spec
                        .domain_facts
                        .iter()
                        .all(|lit| base.certified.contains(&substitute(lit, &bind)));
                    if applicable {
                        for lit in &spec.certified {
                            out.certified.insert(substitute(lit, &bind));
                        }
                    }
                }
            }
            GeneratorImpl::SampleToken(_) => {
                // Sampling generators are optimistic-only; nothing to do
                // eagerly.
            }
        }
    }
    Ok(out)
}

/// 𝒰* plus the instances that produced it.
#[derive(Debug, Clone, Default)]
pub struct Optimistic {
    pub facts: FactSet,
    pub instances: Vec<StreamInstance>,
}

/// Depth-first join of a stream's domain facts against the fact pool,
/// producing every complete input binding in deterministic order.
fn enumerate_bindings(spec: &StreamSpec, pool: &BTreeSet<GroundAtom>) -> Vec<Vec<String>> {
    fn dfs(
        spec: &StreamSpec,
        k: usize,
        bind: &mut BTreeMap<String, String>,
        pool: &BTreeSet<GroundAtom>,
        out: &mut Vec<Vec<String>>,
    ) {
        let Some(lit) = spec.domain_facts.get(k) else {
            if let Some(binding) = spec
                .inputs
                .iter()
                .map(|tn| bind.get(&tn.name).cloned())
                .collect::<Option<Vec<_>>>()
            {
                out.push(binding);
            }
            return;
        };
        'atoms: for atom in pool {
            if atom.predicate != lit.predicate || atom.args.len() != lit.args.len() {
                continue;
            }
            let mut bound_here: Vec<&str> = Vec::new();
            for (arg, val) in lit.args.iter().zip(&atom.args) {
                match arg {
                    Arg::Name(n) => {
                        if n != val {
                            for b in &bound_here {
                                bind.remove(*b);
                            }
                            continue 'atoms;
                        }
                    }
                    Arg::Var(v) => match bind.get(v.as_str()) {
                        Some(existing) if existing != val => {
                            for b in &bound_here {
                                bind.remove(*b);
                            }
                            continue 'atoms;
                        }
                        Some(_) => {}
                        None => {
                            bind.insert(v.clone(), val.clone());
                            bound_here.push(v);
                        }
                    },
                }
            }
            dfs(spec, k + 1, bind, pool, out);
            let owned: Vec<String> = bound_here.iter().map(|s| (*s).to_owned()).collect();
            for b in owned {
                bind.remove(&b);
            }
        }
    }

    let mut out = Vec::new();
    let mut bind = BTreeMap::new();
    dfs(spec, 0, &mut bind, pool, &mut out);
    out.sort();
    out.dedup();
    out
}

const PLACEHOLDER_DEPTH_CAP: u32 = 3;

/// Instantiate 𝒮ᵒ over `base`, substituting fresh `#oK` placeholders for
/// outputs. Chained instantiation (placeholders feeding later streams) runs
/// to fixpoint, capped at placeholder depth 3. Blacklisted instances are
/// skipped. Deterministic: same inputs give the same placeholder numbering,
/// so re-running on an unchanged base is a fixpoint.
pub fn instantiate_optimistic(
    specs: &StreamSpecSet,
    base: &FactSet,
    blacklist: &BTreeSet<InstanceKey>,
) -> Optimistic {
    let mut result = Optimistic::default();
    let mut pool: BTreeSet<GroundAtom> = base.certified.clone();
    let mut seen: BTreeSet<InstanceKey> = BTreeSet::new();
    let mut depth: BTreeMap<String, u32> = BTreeMap::new();
    let mut next_id = 1usize;

    loop {
        let mut changed = false;
        for spec in specs.of_kind(StreamKind::Optimistic) {
            for binding in enumerate_bindings(spec, &pool) {
                let key = (spec.name.clone(), binding.clone());
                if blacklist.contains(&key) || seen.contains(&key) {
                    continue;
                }
                let input_depth = binding
                    .iter()
                    .filter_map(|b| depth.get(b))
                    .max()
                    .copied()
                    .unwrap_or(0);
                if input_depth >= PLACEHOLDER_DEPTH_CAP {
                    continue;
                }
                seen.insert(key);
                let outputs: Vec<String> = spec
                    .outputs
                    .iter()
                    .map(|_| {
                        let p = placeholder(next_id);
                        next_id += 1;
                        depth.insert(p.clone(), input_depth + 1);
                        p
                    })
                    .collect();
                let mut bind: BTreeMap<&str, &str> = BTreeMap::new();
                for (tn, v) in spec.inputs.iter().zip(&binding) {
                    bind.insert(&tn.name, v);
                }
                for (tn, v) in spec.outputs.iter().zip(&outputs) {
                    bind.insert(&tn.name, v);
                }
                for lit in &spec.certified {
                    let atom = substitute(lit, &bind);
                    pool.insert(atom.clone());
                    result.facts.certified.insert(atom);
                }
                result.instances.push(StreamInstance {
                    spec: spec.clone(),
                    input_binding: binding,
                    outputs,
                    status: StreamStatus::Untried,
                });
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    result
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BindResult {
    Bound {
        facts: FactSet,
        /// placeholder token → concrete object name.
        mapping: BTreeMap<String, String>,
    },
    /// Generator exhausted; names the failing instance.
    Failed { instance: String },
}

/// Run the instance's generator once. Success yields concrete certified
/// facts and the placeholder mapping; exhaustion marks the instance failed.
pub fn bind_stream(
    inst: &mut StreamInstance,
    reg: &mut StreamRegistry,
) -> Result<BindResult, StreamError> {
    if inst.status != StreamStatus::Untried {
        return Err(StreamError::AlreadyTried(inst.describe()));
    }
    let cfg = reg.cfg.clone();
    let gen = reg.get_mut(&inst.spec.generator)?;
    let produced: Option<Vec<String>> = match gen {
        GeneratorImpl::UpdateTime => {
            let action = inst.spec.name.strip_prefix("update_time_").unwrap_or(&inst.spec.name);
            let parse = |s: &String| crate::temporal::parse_timing(s);
            match (
                inst.input_binding.first().and_then(parse),
                inst.input_binding.get(1).and_then(parse),
                cfg.grid_duration(action),
            ) {
                (Some(t_agent), Some(t), Some(t_action)) => {
                    update_time(t_agent, t, t_action, cfg.t_max)
                        .map(|t_new| vec![timing_name(t_new)])
                }
                _ => None,
            }
        }
        GeneratorImpl::Constant => Some(vec![]),
        GeneratorImpl::TableLookup(rows) => rows
            .iter()
            .find(|(inputs, _)| *inputs == inst.input_binding)
            .map(|(_, outputs)| outputs.clone()),
        GeneratorImpl::SampleToken(queue) => {
            if queue.is_empty() {
                None
            } else {
                Some(queue.remove(0))
            }
        }
    };

    match produced {
        Some(outputs) => {
            assert_eq!(
                outputs.len(),
                inst.spec.outputs.len(),
                "generator '{}' arity mismatch",
                inst.spec.generator
            );
            let mut bind: BTreeMap<&str, &str> = BTreeMap::new();
            for (tn, v) in inst.spec.inputs.iter().zip(&inst.input_binding) {
                bind.insert(&tn.name, v);
            }
            for (tn, v) in inst.spec.outputs.iter().zip(&outputs) {
                bind.insert(&tn.name, v);
            }
            let mut facts = FactSet::default();
            for lit in &inst.spec.certified {
                facts.certified.insert(substitute(lit, &bind));
            }
            let mapping: BTreeMap<String, String> = inst
                .outputs
                .iter()
                .cloned()
                .zip(outputs.iter().cloned())
                .collect();
            inst.status = StreamStatus::Bound;
            Ok(BindResult::Bound { facts, mapping })
        }
        None => {
            inst.status = StreamStatus::Failed;
            Ok(BindResult::Failed { instance: inst.describe() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::ast::{SourceText, TypedName};
    use crate::pddl::{parse_domain, parse_streams};

    #[test]
    fn update_time_examples() {
        assert_eq!(update_time(0, 0, 60, 10_000), Some(60));
        assert_eq!(update_time(0, 120, 60, 10_000), None); // t past the action's end
        assert_eq!(update_time(60, 90, 60, 100), None); // t' = 120 ≥ t_max
        assert_eq!(update_time(60, 90, 60, 10_000), Some(120));
    }

    #[test]
    fn update_time_facts_on_coarse_grid() {
        // grid {0,60,120}, one action of 60 s, horizon 121 s
        let facts = update_time_facts("a", 60, &[0, 60, 120], 121);
        let expect = [
            ("t0", "t0", "t60"),
            ("t0", "t60", "t60"),
            ("t60", "t60", "t120"),
            ("t60", "t120", "t120"),
        ];
        let got: Vec<(String, String, String)> = facts
            .iter()
            .map(|a| (a.args[0].clone(), a.args[1].clone(), a.args[2].clone()))
            .collect();
        let want: Vec<(String, String, String)> = expect
            .iter()
            .map(|(a, b, c)| ((*a).to_owned(), (*b).to_owned(), (*c).to_owned()))
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn zero_horizon_certifies_nothing() {
        let cfg = DurativeConfig {
            unit_t: 60,
            t_max: 0,
            durations: [("a".to_owned(), 60)].into(),
            agents: BTreeMap::new(),
        };
        let reg = StreamRegistry::with_builtins(&cfg);
        let out = eval_eager(&StreamSpecSet::default(), &FactSet::default(), &cfg, &reg).unwrap();
        assert!(out.certified.is_empty());
    }

    #[test]
    fn cost_facts_track_the_grid() {
        let cfg = DurativeConfig {
            unit_t: 60,
            t_max: 120,
            durations: [("a".to_owned(), 45)].into(),
            agents: BTreeMap::new(),
        };
        let reg = StreamRegistry::with_builtins(&cfg);
        let out = eval_eager(&StreamSpecSet::default(), &FactSet::default(), &cfg, &reg).unwrap();
        assert_eq!(
            out.function_values.get(&("cost_start_a".to_owned(), vec!["t60".into()])),
            Some(&60)
        );
        assert_eq!(
            out.function_values.get(&("cost_start_a".to_owned(), vec!["t0".into()])),
            Some(&0)
        );
        // 45 s quantizes up to one 60 s unit
        assert_eq!(out.function_values.get(&("cost_end_a".to_owned(), vec![])), Some(&60));
    }

    fn token_specs() -> StreamSpecSet {
        let dom = parse_domain(&SourceText::new(
            "(define (domain toy) (:requirements :strips :typing)
               (:types slot item)
               (:predicates (request ?i - item) (fits ?i - item ?s - slot)))",
            "toy.pddl",
        ))
        .unwrap();
        parse_streams(
            &SourceText::new(
                "(:stream sample-slot
                   :kind optimistic
                   :inputs (?i - item)
                   :domain ((request ?i))
                   :outputs (?s - slot)
                   :certified ((fits ?i ?s))
                   :generator sample-token)",
                "toy.stream",
            ),
            &dom,
        )
        .unwrap()
    }

    #[test]
    fn optimistic_instantiation_numbers_placeholders() {
        let specs = token_specs();
        let mut base = FactSet::default();
        base.certified.insert(GroundAtom::new("request", ["item1"]));
        base.certified.insert(GroundAtom::new("request", ["item2"]));
        let opt = instantiate_optimistic(&specs, &base, &BTreeSet::new());
        assert_eq!(opt.instances.len(), 2);
        let mut placeholders: Vec<String> = opt
            .facts
            .certified
            .iter()
            .map(|a| a.args[1].clone())
            .collect();
        placeholders.sort();
        assert_eq!(placeholders, ["#o1", "#o2"]);
        // every optimistic fact mentions a placeholder
        assert!(opt
            .facts
            .certified
            .iter()
            .all(|a| a.args.iter().any(|x| is_placeholder(x))));
    }

    #[test]
    fn optimistic_is_fixpoint_and_respects_blacklist() {
        let specs = token_specs();
        let mut base = FactSet::default();
        base.certified.insert(GroundAtom::new("request", ["item1"]));
        let first = instantiate_optimistic(&specs, &base, &BTreeSet::new());
        let second = instantiate_optimistic(&specs, &base, &BTreeSet::new());
        assert_eq!(first.facts, second.facts);

        let mut blacklist = BTreeSet::new();
        blacklist.insert(("sample-slot".to_owned(), vec!["item1".to_owned()]));
        let third = instantiate_optimistic(&specs, &base, &blacklist);
        assert!(third.facts.certified.is_empty());
        assert!(third.instances.is_empty());
    }

    #[test]
    fn zero_matches_give_empty_set() {
        let specs = token_specs();
        let opt = instantiate_optimistic(&specs, &FactSet::default(), &BTreeSet::new());
        assert!(opt.facts.certified.is_empty());
    }

    #[test]
    fn bind_substitutes_generator_output() {
        let specs = token_specs();
        let mut base = FactSet::default();
        base.certified.insert(GroundAtom::new("request", ["item1"]));
        let mut opt = instantiate_optimistic(&specs, &base, &BTreeSet::new());
        let mut reg = StreamRegistry::with_builtins(&DurativeConfig::default());
        reg.register("sample-token", GeneratorImpl::SampleToken(vec![vec!["slota".into()]]));
        let r = bind_stream(&mut opt.instances[0], &mut reg).unwrap();
        match r {
            BindResult::Bound { facts, mapping } => {
                assert!(facts.certified.contains(&GroundAtom::new("fits", ["item1", "slota"])));
                assert_eq!(mapping.get("#o1").map(String::as_str), Some("slota"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(opt.instances[0].status, StreamStatus::Bound);
    }

    #[test]
    fn bind_failure_and_unknown_generator() {
        let specs = token_specs();
        let mut base = FactSet::default();
        base.certified.insert(GroundAtom::new("request", ["item1"]));
        let opt = instantiate_optimistic(&specs, &base, &BTreeSet::new());

        let mut inst = opt.instances[0].clone();
        let mut reg = StreamRegistry::with_builtins(&DurativeConfig::default());
        reg.register("sample-token", GeneratorImpl::SampleToken(vec![]));
        match bind_stream(&mut inst, &mut reg).unwrap() {
            BindResult::Failed { instance } => assert_eq!(instance, "(sample-slot item1)"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(inst.status, StreamStatus::Failed);
        // a tried instance cannot be tried again
        assert!(matches!(
            bind_stream(&mut inst, &mut reg),
            Err(StreamError::AlreadyTried(_))
        ));

        let mut untried = opt.instances[0].clone();
        let mut empty_reg = StreamRegistry {
            cfg: DurativeConfig::default(),
            gens: BTreeMap::new(),
        };
        let err = bind_stream(&mut untried, &mut empty_reg).unwrap_err();
        assert_eq!(err.to_string(), "no generator registered: sample-token");
    }

    #[test]
    fn eager_constant_stream_certifies_ground_facts() {
        let dom = parse_domain(&SourceText::new(
            "(define (domain toy2) (:requirements :strips :typing)
               (:types slot) (:constants s1 - slot)
               (:predicates (open ?s - slot)))",
            "toy2.pddl",
        ))
        .unwrap();
        let specs = parse_streams(
            &SourceText::new(
                "(:stream fixed :kind eager :certified ((open s1)) :generator constant)",
                "toy2.stream",
            ),
            &dom,
        )
        .unwrap();
        let cfg = DurativeConfig::default();
        let reg = StreamRegistry::with_builtins(&cfg);
        let out = eval_eager(&specs, &FactSet::default(), &cfg, &reg).unwrap();
        assert!(out.certified.contains(&GroundAtom::new("open", ["s1"])));
    }

    #[test]
    fn eager_unregistered_generator_errors() {
        let dom = parse_domain(&SourceText::new(
            "(define (domain toy3) (:requirements :strips) (:predicates (p)))",
            "toy3.pddl",
        ))
        .unwrap();
        let specs = parse_streams(
            &SourceText::new(
                "(:stream s :kind eager :certified ((p)) :generator mystery)",
                "toy3.stream",
            ),
            &dom,
        )
        .unwrap();
        let cfg = DurativeConfig::default();
        let reg = StreamRegistry::with_builtins(&cfg);
        let err = eval_eager(&specs, &FactSet::default(), &cfg, &reg).unwrap_err();
        assert_eq!(err, StreamError::UnregisteredGenerator("mystery".into()));
    }

    #[test]
    fn typed_name_ordering_is_stable_for_bindings() {
        // enumerate_bindings sorts its output; sanity-check the comparator.
        let a = TypedName::new("?a", "t");
        let b = TypedName::new("?b", "t");
        assert!(a < b);
    }
}

//! Durative start/end transformation.
//!
//! Each instantaneous action `a` becomes a pair `a:start` / `a:end`.
//! Starting claims the acting agents and charges the current global time as
//! cost; ending applies the original effects, releases the agents, advances
//! the global clock via the `update_time_a` certified facts, and charges the
//! action's duration. Minimizing total cost therefore minimizes
//! Σ (start time + duration) over the plan.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::error::TemporalError;
use crate::pddl::ast::{
    ActionSchema, Arg, CondEffect, Condition, CostTerm, Domain, Effect, FunctionDecl, Literal,
    PredicateDecl, Requirement, TypedName, OBJECT_TYPE,
};

pub const TIMING_TYPE: &str = "timing";

/// `t{seconds}` — the timing-object naming scheme.
pub fn timing_name(seconds: u64) -> String {
    format!("t{seconds}")
}

pub fn parse_timing(name: &str) -> Option<u64> {
    name.strip_prefix('t')?.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DurativeConfig {
    /// Grid resolution in seconds.
    pub unit_t: u64,
    /// Planning horizon in seconds; multiple of `unit_t`.
    pub t_max: u64,
    /// Raw action durations in seconds (quantized up to the grid on use).
    pub durations: BTreeMap<String, u64>,
    /// Acting-agent parameter names per action; several names make a joint
    /// action that claims all listed agents for its whole span.
    pub agents: BTreeMap<String, Vec<String>>,
}

pub const DEFAULT_UNIT_T: u64 = 60;

impl Default for DurativeConfig {
    fn default() -> Self {
        DurativeConfig {
            unit_t: DEFAULT_UNIT_T,
            t_max: 40 * DEFAULT_UNIT_T,
            durations: BTreeMap::new(),
            agents: BTreeMap::new(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "unit_T")]
    unit_t: Option<u64>,
    t_max: Option<u64>,
    #[serde(default)]
    durations: BTreeMap<String, u64>,
    #[serde(default)]
    agents: BTreeMap<String, OneOrMany>,
}

impl DurativeConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, TemporalError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| TemporalError::Config(e.to_string()))?;
        let unit_t = raw.unit_t.unwrap_or(DEFAULT_UNIT_T);
        let cfg = DurativeConfig {
            unit_t,
            t_max: raw.t_max.unwrap_or(40 * unit_t),
            durations: raw.durations,
            agents: raw
                .agents
                .into_iter()
                .map(|(k, v)| {
                    let list = match v {
                        OneOrMany::One(s) => vec![s],
                        OneOrMany::Many(v) => v,
                    };
                    (k, list)
                })
                .collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), TemporalError> {
        if self.unit_t == 0 {
            return Err(TemporalError::ZeroUnit);
        }
        if self.t_max % self.unit_t != 0 {
            return Err(TemporalError::UnalignedTMax { t_max: self.t_max, unit_t: self.unit_t });
        }
        for (action, d) in &self.durations {
            if *d == 0 {
                return Err(TemporalError::NonPositiveDuration(0));
            }
            let _ = action;
        }
        Ok(())
    }

    /// Duration of `action` in seconds, rounded up to the grid.
    pub fn grid_duration(&self, action: &str) -> Option<u64> {
        let raw = *self.durations.get(action)?;
        Some(raw.div_ceil(self.unit_t) * self.unit_t)
    }

    /// The timing grid {0, T, 2T, …, t_max} in seconds.
    pub fn grid(&self) -> Vec<u64> {
        (0..=self.t_max / self.unit_t).map(|k| k * self.unit_t).collect()
    }
}

/// ⌈seconds / unit_T⌉ — "up to 60 seconds" counts as one unit.
pub fn quantize_duration(seconds: u64, unit_t: u64) -> Result<u64, TemporalError> {
    if seconds == 0 {
        return Err(TemporalError::NonPositiveDuration(0));
    }
    if unit_t == 0 {
        return Err(TemporalError::ZeroUnit);
    }
    Ok(seconds.div_ceil(unit_t))
}

#[derive(Debug, Clone)]
pub struct DurativeDomain {
    pub base: Domain,
    /// The transformed domain with `a:start` / `a:end` pairs.
    pub domain: Domain,
    /// action → duration in seconds, grid-quantized.
    pub durations: BTreeMap<String, u64>,
    /// action → designated agent parameter names.
    pub agents: BTreeMap<String, Vec<String>>,
}

impl DurativeDomain {
    /// Types of every designated agent parameter; objects of these types are
    /// the schedulable agents.
    pub fn agent_types(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (action, params) in &self.agents {
            let Some(schema) = self.base.action(action) else { continue };
            for p in params {
                if let Some(tn) = schema.param(p) {
                    out.insert(tn.ty.clone());
                }
            }
        }
        out
    }
}

/// Drop `is_free` literals that talk about the designated agent parameters:
/// in the durative encoding, agent availability is owned by the transform's
/// own bookkeeping, and keeping the base domain's copies would make
/// `a:end` contradictory (the base requires the agent free or busy in
/// gripper terms while the transform requires it busy in scheduling terms).
fn filter_agent_is_free(lits: &[Literal], agent_params: &[&TypedName]) -> Vec<Literal> {
    lits.iter()
        .filter(|lit| {
            !(lit.predicate == "is_free"
                && lit.args.len() == 1
                && agent_params
                    .iter()
                    .any(|p| matches!(&lit.args[0], Arg::Var(v) if *v == p.name)))
        })
        .cloned()
        .collect()
}

fn fresh_var(base: &str, taken: &BTreeSet<&str>) -> String {
    let mut name = base.to_owned();
    while taken.contains(name.as_str()) {
        name.push('_');
    }
    name
}

pub fn cost_start_fn(action: &str) -> String {
    format!("cost_start_{action}")
}

pub fn cost_end_fn(action: &str) -> String {
    format!("cost_end_{action}")
}

pub fn update_time_pred(action: &str) -> String {
    format!("update_time_{action}")
}

/// Claim predicates are per action, like the update streams: were the claim
/// shared, an `a:end` could release an agent that `b:start` claimed and the
/// pair would no longer describe one action's interval.
pub fn agent_claim_pred(action: &str) -> String {
    format!("agent_at_time_{action}")
}

pub fn make_durative(dom: &Domain, cfg: &DurativeConfig) -> Result<DurativeDomain, TemporalError> {
    cfg.validate()?;
    for name in cfg.durations.keys().chain(cfg.agents.keys()) {
        if dom.action(name).is_none() {
            return Err(TemporalError::UnknownAction(name.clone()));
        }
    }

    let mut out = dom.clone();
    out.name = format!("{}-durative", dom.name);
    out.requirements.extend([
        Requirement::ActionCosts,
        Requirement::ConditionalEffects,
        Requirement::Equality,
        Requirement::NegativePreconditions,
    ]);
    out.type_hierarchy.insert(TIMING_TYPE.to_owned(), OBJECT_TYPE.to_owned());

    // Bookkeeping predicates. `is_free` is widened to `object`: any typed
    // agent (robot, pump, …) must fit, and the base domain's narrower
    // declaration (washing types it over robots only) would reject them.
    out.predicates.retain(|p| p.name != "is_free");
    out.predicates.push(PredicateDecl {
        name: "is_free".into(),
        params: vec![TypedName::new("?agent", OBJECT_TYPE)],
    });
    out.predicates.push(PredicateDecl {
        name: "at_time".into(),
        params: vec![TypedName::new("?t", TIMING_TYPE)],
    });
    if out.functions.iter().all(|f| f.name != "total-cost") {
        out.functions.push(FunctionDecl { name: "total-cost".into(), params: vec![] });
    }

    let mut durations = BTreeMap::new();
    let mut actions = Vec::with_capacity(dom.actions.len() * 2);
    for schema in &dom.actions {
        let name = &schema.name;
        let raw = *cfg
            .durations
            .get(name)
            .ok_or_else(|| TemporalError::MissingDuration(name.clone()))?;
        let duration = quantize_duration(raw, cfg.unit_t)? * cfg.unit_t;
        durations.insert(name.clone(), duration);

        let agent_names = cfg
            .agents
            .get(name)
            .ok_or_else(|| TemporalError::Config(format!("no agent configured for action '{name}'")))?;
        let agent_params: Vec<&TypedName> = agent_names
            .iter()
            .map(|p| {
                schema.param(p).ok_or_else(|| TemporalError::BadAgentParam {
                    action: name.clone(),
                    param: p.clone(),
                })
            })
            .collect::<Result<_, _>>()?;

        out.predicates.push(PredicateDecl {
            name: update_time_pred(name),
            params: vec![
                TypedName::new("?agent_t", TIMING_TYPE),
                TypedName::new("?t", TIMING_TYPE),
                TypedName::new("?new_t", TIMING_TYPE),
            ],
        });
        out.predicates.push(PredicateDecl {
            name: agent_claim_pred(name),
            params: vec![
                TypedName::new("?agent", OBJECT_TYPE),
                TypedName::new("?t", TIMING_TYPE),
            ],
        });
        out.functions.push(FunctionDecl {
            name: cost_start_fn(name),
            params: vec![TypedName::new("?t", TIMING_TYPE)],
        });
        out.functions.push(FunctionDecl { name: cost_end_fn(name), params: vec![] });

        let taken: BTreeSet<&str> = schema.params.iter().map(|p| p.name.as_str()).collect();
        let t = fresh_var("?t", &taken);
        let agent_t = fresh_var("?agent_t", &taken);
        let new_t = fresh_var("?new_t", &taken);

        let pre_filtered = filter_agent_is_free(&schema.precondition.literals, &agent_params);
        let var = |v: &str| Arg::Var(v.to_owned());

        // a:start — claim the agents, charge the current global time.
        let mut start_pre = pre_filtered.clone();
        start_pre.push(Literal::positive("at_time", vec![var(&t)]));
        for ap in &agent_params {
            start_pre.push(Literal::positive("is_free", vec![var(&ap.name)]));
        }
        let mut start_params = schema.params.clone();
        start_params.push(TypedName::new(t.clone(), TIMING_TYPE));
        let mut start_eff = Effect::default();
        for ap in &agent_params {
            start_eff
                .add
                .push(Literal::positive(agent_claim_pred(name), vec![var(&ap.name), var(&t)]));
            start_eff.del.push(Literal::positive("is_free", vec![var(&ap.name)]));
        }
        start_eff.cost = Some(CostTerm::Func(cost_start_fn(name), vec![var(&t)]));
        actions.push(ActionSchema {
            name: format!("{name}:start"),
            params: start_params,
            precondition: Condition::new(start_pre),
            effect: start_eff,
        });

        // a:end — apply the original effects, release the agents, advance
        // the clock, charge the duration.
        let mut end_pre = pre_filtered;
        end_pre.push(Literal::positive("at_time", vec![var(&t)]));
        for ap in &agent_params {
            end_pre.push(Literal::negative("is_free", vec![var(&ap.name)]));
            end_pre.push(Literal::positive(
                agent_claim_pred(name),
                vec![var(&ap.name), var(&agent_t)],
            ));
        }
        end_pre.push(Literal::positive(
            update_time_pred(name),
            vec![var(&agent_t), var(&t), var(&new_t)],
        ));
        let mut end_params = schema.params.clone();
        end_params.push(TypedName::new(agent_t.clone(), TIMING_TYPE));
        end_params.push(TypedName::new(t.clone(), TIMING_TYPE));
        end_params.push(TypedName::new(new_t.clone(), TIMING_TYPE));

        let mut end_eff = Effect {
            add: filter_agent_is_free(&schema.effect.add, &agent_params),
            del: filter_agent_is_free(&schema.effect.del, &agent_params),
            conditionals: schema
                .effect
                .conditionals
                .iter()
                .map(|ce| CondEffect {
                    cond: ce.cond.clone(),
                    add: filter_agent_is_free(&ce.add, &agent_params),
                    del: filter_agent_is_free(&ce.del, &agent_params),
                    cost: ce.cost.clone(),
                })
                .collect(),
            cost: Some(CostTerm::Func(cost_end_fn(name), vec![])),
        };
        for ap in &agent_params {
            end_eff
                .del
                .push(Literal::positive(agent_claim_pred(name), vec![var(&ap.name), var(&agent_t)]));
            end_eff.add.push(Literal::positive("is_free", vec![var(&ap.name)]));
        }
        end_eff.conditionals.push(CondEffect {
            cond: Condition::new(vec![Literal::negative(
                "=",
                vec![var(&t), var(&new_t)],
            )]),
            add: vec![Literal::positive("at_time", vec![var(&new_t)])],
            del: vec![Literal::positive("at_time", vec![var(&t)])],
            cost: None,
        });
        actions.push(ActionSchema {
            name: format!("{name}:end"),
            params: end_params,
            precondition: Condition::new(end_pre),
            effect: end_eff,
        });
    }
    out.actions = actions;

    Ok(DurativeDomain {
        base: dom.clone(),
        domain: out,
        durations,
        agents: cfg.agents.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::ast::SourceText;
    use crate::pddl::parse_domain;

    fn washing() -> Domain {
        let src = SourceText::new(
            include_str!("../tests/fixtures/washing.pddl"),
            "washing.pddl",
        );
        parse_domain(&src).unwrap()
    }

    fn washing_cfg() -> DurativeConfig {
        DurativeConfig::from_toml_str(
            r#"
unit_T = 60
t_max = 600

[durations]
pick = 60
place = 60
wash = 120

[agents]
pick = "?rob"
place = "?rob"
wash = "?washer"
"#,
        )
        .unwrap()
    }

    #[test]
    fn three_actions_become_six() {
        let dd = make_durative(&washing(), &washing_cfg()).unwrap();
        assert_eq!(dd.domain.actions.len(), 6);
        let names: Vec<&str> = dd.domain.actions.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(
            names,
            ["pick:start", "pick:end", "place:start", "place:end", "wash:start", "wash:end"]
        );
    }

    #[test]
    fn wash_start_claims_agent() {
        let dd = make_durative(&washing(), &washing_cfg()).unwrap();
        let start = dd.domain.action("wash:start").unwrap();
        assert!(start
            .effect
            .del
            .iter()
            .any(|l| l.predicate == "is_free" && l.args == [Arg::Var("?washer".into())]));
        assert!(start.effect.add.iter().any(|l| l.predicate == "agent_at_time_wash"
            && l.args == [Arg::Var("?washer".into()), Arg::Var("?t".into())]));
        assert_eq!(
            start.effect.cost,
            Some(CostTerm::Func("cost_start_wash".into(), vec![Arg::Var("?t".into())]))
        );
    }

    #[test]
    fn wash_end_swaps_clock_when_time_moves() {
        let dd = make_durative(&washing(), &washing_cfg()).unwrap();
        let end = dd.domain.action("wash:end").unwrap();
        let swap = end
            .effect
            .conditionals
            .iter()
            .find(|ce| ce.cond.literals.iter().any(|l| l.is_equality() && l.negated))
            .expect("timing-swap branch");
        assert!(swap.add.iter().any(|l| l.predicate == "at_time"
            && l.args == [Arg::Var("?new_t".into())]));
        assert!(swap.del.iter().any(|l| l.predicate == "at_time"
            && l.args == [Arg::Var("?t".into())]));
        // The stream fact gating the clock advance sits in the precondition.
        assert!(end
            .precondition
            .literals
            .iter()
            .any(|l| l.predicate == "update_time_wash" && !l.negated));
        assert_eq!(end.effect.cost, Some(CostTerm::Func("cost_end_wash".into(), vec![])));
    }

    #[test]
    fn base_is_free_literals_are_replaced_by_bookkeeping() {
        let dd = make_durative(&washing(), &washing_cfg()).unwrap();
        // pick's original (is_free ?rob) precondition must not survive into
        // pick:end, which requires the agent busy instead.
        let end = dd.domain.action("pick:end").unwrap();
        let frees: Vec<&Literal> = end
            .precondition
            .literals
            .iter()
            .filter(|l| l.predicate == "is_free")
            .collect();
        assert_eq!(frees.len(), 1);
        assert!(frees[0].negated);
    }

    #[test]
    fn quantize_rounds_up() {
        assert_eq!(quantize_duration(45, 60).unwrap(), 1);
        assert_eq!(quantize_duration(60, 60).unwrap(), 1);
        assert_eq!(quantize_duration(150, 60).unwrap(), 3);
        assert!(matches!(
            quantize_duration(0, 60),
            Err(TemporalError::NonPositiveDuration(0))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            DurativeConfig::from_toml_str("unit_T = 0\nt_max = 0"),
            Err(TemporalError::ZeroUnit)
        ));
        assert!(matches!(
            DurativeConfig::from_toml_str("unit_T = 60\nt_max = 90"),
            Err(TemporalError::UnalignedTMax { .. })
        ));
        let cfg = DurativeConfig::from_toml_str("unit_T = 60\n[durations]\nwash = 150").unwrap();
        assert_eq!(cfg.t_max, 2400); // default 40·T
        assert_eq!(cfg.grid_duration("wash"), Some(180));
    }

    #[test]
    fn missing_duration_and_bad_agent_error() {
        let dom = washing();
        let mut cfg = washing_cfg();
        cfg.durations.remove("wash");
        assert!(matches!(
            make_durative(&dom, &cfg),
            Err(TemporalError::MissingDuration(a)) if a == "wash"
        ));
        let mut cfg = washing_cfg();
        cfg.agents.insert("wash".into(), vec!["?nope".into()]);
        assert!(matches!(
            make_durative(&dom, &cfg),
            Err(TemporalError::BadAgentParam { action, param })
                if action == "wash" && param == "?nope"
        ));
        let mut cfg = washing_cfg();
        cfg.durations.insert("ghost".into(), 60);
        assert!(matches!(
            make_durative(&dom, &cfg),
            Err(TemporalError::UnknownAction(a)) if a == "ghost"
        ));
    }
}

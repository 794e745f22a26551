//! Grounding and closed-world state semantics.
//!
//! `ground_task` fully instantiates the lifted task, pruned by
//! delete-relaxation reachability so the timing-object blowup of durative
//! domains stays tractable. States are value-semantic snapshots; atoms not
//! present are false.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::pddl::ast::{
    ActionSchema, Arg, Condition, CostTerm, Domain, Literal, Problem, TypedName,
};
use crate::streams::FactSet;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S, I, A>(predicate: S, args: I) -> Self
    where
        S: Into<String>,
        I: IntoIterator<Item = A>,
        A: Into<String>,
    {
        GroundAtom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundLiteral {
    pub atom: GroundAtom,
    pub negated: bool,
}

impl fmt::Display for GroundLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "(not {})", self.atom)
        } else {
            write!(f, "{}", self.atom)
        }
    }
}

/// Closed-world state: atoms not in the set are false.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct State {
    pub atoms: BTreeSet<GroundAtom>,
    /// Accumulated cost in seconds; non-decreasing along action sequences.
    pub total_cost: u64,
}

impl State {
    pub fn new(atoms: BTreeSet<GroundAtom>) -> Self {
        State { atoms, total_cost: 0 }
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.atoms.contains(atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundCondEffect {
    pub cond: Vec<GroundLiteral>,
    pub add: BTreeSet<GroundAtom>,
    pub del: BTreeSet<GroundAtom>,
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub schema_name: String,
    pub binding: Vec<String>,
    pub precondition: Vec<GroundLiteral>,
    pub add: BTreeSet<GroundAtom>,
    pub del: BTreeSet<GroundAtom>,
    /// Conditional effects, resolved against the pre-state at application
    /// time (statically decidable branches were folded during grounding).
    pub conditionals: Vec<GroundCondEffect>,
    /// Cost in seconds, already resolved against eager function values.
    pub cost: u64,
}

impl GroundAction {
    /// `(schema arg1 arg2 …)` — the form plans are printed in.
    pub fn name(&self) -> String {
        let mut s = format!("({}", self.schema_name);
        for b in &self.binding {
            s.push(' ');
            s.push_str(b);
        }
        s.push(')');
        s
    }
}

#[derive(Debug, Clone)]
pub struct GroundTask {
    /// Typed universe: problem objects, domain constants, and any objects
    /// introduced by certified facts (types inferred from predicate
    /// declarations).
    pub objects: Vec<TypedName>,
    /// Delete-relaxation reachable atoms.
    pub atoms: BTreeSet<GroundAtom>,
    pub actions: Vec<GroundAction>,
    pub init: State,
    pub goal: Vec<GroundLiteral>,
}

fn lit_holds(s: &State, lit: &GroundLiteral) -> bool {
    if lit.atom.predicate == "=" {
        let eq = lit.atom.args.first() == lit.atom.args.get(1);
        return eq != lit.negated;
    }
    s.atoms.contains(&lit.atom) != lit.negated
}

/// Closed-world evaluation of a fully ground condition.
pub fn holds(s: &State, c: &Condition) -> bool {
    c.literals.iter().all(|lit| {
        let atom = GroundAtom {
            predicate: lit.predicate.clone(),
            args: lit.args.iter().map(|a| a.as_str().to_owned()).collect(),
        };
        lit_holds(s, &GroundLiteral { atom, negated: lit.negated })
    })
}

/// `(s ∖ del) ∪ add`, with conditional effects evaluated against `s` and the
/// action's cost added to `total_cost`.
pub fn apply(s: &State, a: &GroundAction) -> Result<State, ModelError> {
    if let Some(bad) = a.precondition.iter().find(|l| !lit_holds(s, l)) {
        return Err(ModelError::Inapplicable { action: a.name(), literal: bad.to_string() });
    }
    let mut adds: Vec<&GroundAtom> = a.add.iter().collect();
    let mut dels: Vec<&GroundAtom> = a.del.iter().collect();
    let mut cost = a.cost;
    for ce in &a.conditionals {
        if ce.cond.iter().all(|l| lit_holds(s, l)) {
            adds.extend(ce.add.iter());
            dels.extend(ce.del.iter());
            cost += ce.cost;
        }
    }
    let mut atoms = s.atoms.clone();
    for d in dels {
        atoms.remove(d);
    }
    for add in adds {
        atoms.insert(add.clone());
    }
    Ok(State { atoms, total_cost: s.total_cost + cost })
}

// ---------------------------------------------------------------------------
// Grounding
// ---------------------------------------------------------------------------

struct SchemaInfo<'a> {
    schema: &'a ActionSchema,
    /// Parameter name → index into the binding vector.
    param_idx: BTreeMap<&'a str, usize>,
    /// Positive, non-equality precondition literals: joined against the
    /// reachable-atom index.
    positives: Vec<&'a Literal>,
    /// Equality literals of either polarity: decided once fully bound.
    equalities: Vec<&'a Literal>,
    /// Negative, non-equality literals.
    negatives: Vec<&'a Literal>,
}

struct Grounder<'a> {
    dom: &'a Domain,
    obj_type: BTreeMap<&'a str, &'a str>,
    /// Type name → objects of that type (subtype-closed), sorted.
    by_type: BTreeMap<&'a str, Vec<&'a str>>,
    /// Predicates never occurring in any effect; their truth is fixed by the
    /// initial facts.
    static_preds: BTreeSet<&'a str>,
    initial: BTreeSet<GroundAtom>,
    reachable: BTreeSet<GroundAtom>,
    index: BTreeMap<String, Vec<GroundAtom>>,
}

impl<'a> Grounder<'a> {
    fn resolve(&self, arg: &Arg, info: &SchemaInfo, binding: &[Option<String>]) -> Option<String> {
        match arg {
            Arg::Name(n) => Some(n.clone()),
            Arg::Var(v) => binding[*info.param_idx.get(v.as_str())?].clone(),
        }
    }

    fn ground_literal(
        &self,
        lit: &Literal,
        info: &SchemaInfo,
        binding: &[Option<String>],
    ) -> GroundLiteral {
        let args = lit
            .args
            .iter()
            .map(|a| self.resolve(a, info, binding).expect("binding complete"))
            .collect();
        GroundLiteral {
            atom: GroundAtom { predicate: lit.predicate.clone(), args },
            negated: lit.negated,
        }
    }

    /// Depth-first join of the schema's positive literals against the
    /// reachable-atom index, then enumeration of any parameters left unbound.
    fn match_schema(&self, info: &SchemaInfo, out: &mut Vec<Vec<String>>) {
        let mut binding: Vec<Option<String>> = vec![None; info.schema.params.len()];
        self.join(info, 0, &mut binding, out);
    }

    fn join(
        &self,
        info: &SchemaInfo,
        k: usize,
        binding: &mut Vec<Option<String>>,
        out: &mut Vec<Vec<String>>,
    ) {
        let Some(lit) = info.positives.get(k) else {
            self.enumerate_free(info, 0, binding, out);
            return;
        };
        let Some(atoms) = self.index.get(&lit.predicate) else {
            return;
        };
        // The index can gain atoms while we iterate over a snapshot; the
        // fixpoint loop re-runs the join until nothing new appears.
        'atoms: for atom in atoms {
            if atom.args.len() != lit.args.len() {
                continue;
            }
            let mut bound_here: Vec<usize> = Vec::new();
            for (arg, val) in lit.args.iter().zip(&atom.args) {
                match arg {
                    Arg::Name(n) => {
                        if n != val {
                            self.unbind(binding, &bound_here);
                            continue 'atoms;
                        }
                    }
                    Arg::Var(v) => {
                        let idx = info.param_idx[v.as_str()];
                        match &binding[idx] {
                            Some(existing) => {
                                if existing != val {
                                    self.unbind(binding, &bound_here);
                                    continue 'atoms;
                                }
                            }
                            None => {
                                let want = &info.schema.params[idx].ty;
                                let ok = self
                                    .obj_type
                                    .get(val.as_str())
                                    .is_some_and(|ty| self.dom.is_subtype(ty, want));
                                if !ok {
                                    self.unbind(binding, &bound_here);
                                    continue 'atoms;
                                }
                                binding[idx] = Some(val.clone());
                                bound_here.push(idx);
                            }
                        }
                    }
                }
            }
            self.join(info, k + 1, binding, out);
            self.unbind(binding, &bound_here);
        }
    }

    fn unbind(&self, binding: &mut [Option<String>], bound: &[usize]) {
        for &i in bound {
            binding[i] = None;
        }
    }

    fn enumerate_free(
        &self,
        info: &SchemaInfo,
        from: usize,
        binding: &mut Vec<Option<String>>,
        out: &mut Vec<Vec<String>>,
    ) {
        let Some(free) = (from..binding.len()).find(|&i| binding[i].is_none()) else {
            if self.binding_admissible(info, binding) {
                out.push(binding.iter().map(|b| b.clone().unwrap()).collect());
            }
            return;
        };
        let ty = info.schema.params[free].ty.as_str();
        let Some(objs) = self.by_type.get(ty) else {
            return; // empty universe for this type: grounds to nothing
        };
        for obj in objs {
            binding[free] = Some((*obj).to_owned());
            self.enumerate_free(info, free + 1, binding, out);
        }
        binding[free] = None;
    }

    /// Equality and static-negative checks on a complete binding.
    fn binding_admissible(&self, info: &SchemaInfo, binding: &[Option<String>]) -> bool {
        for lit in &info.equalities {
            let a = self.resolve(&lit.args[0], info, binding);
            let b = self.resolve(&lit.args[1], info, binding);
            if (a == b) == lit.negated {
                return false;
            }
        }
        for lit in &info.negatives {
            if self.static_preds.contains(lit.predicate.as_str()) {
                let gl = self.ground_literal(lit, info, binding);
                if self.initial.contains(&gl.atom) {
                    return false;
                }
            }
        }
        true
    }

    fn insert_reachable(&mut self, atom: GroundAtom) -> bool {
        if self.reachable.insert(atom.clone()) {
            self.index.entry(atom.predicate.clone()).or_default().push(atom);
            true
        } else {
            false
        }
    }
}

fn collect_effect_predicates<'a>(schema: &'a ActionSchema, out: &mut BTreeSet<&'a str>) {
    for lit in schema.effect.add.iter().chain(&schema.effect.del) {
        out.insert(&lit.predicate);
    }
    for ce in &schema.effect.conditionals {
        for lit in ce.add.iter().chain(&ce.del) {
            out.insert(&lit.predicate);
        }
    }
}

fn resolve_cost(
    term: &CostTerm,
    info: &SchemaInfo,
    binding: &[Option<String>],
    grounder: &Grounder,
    extra: &FactSet,
) -> Result<u64, ModelError> {
    match term {
        CostTerm::Const(c) => Ok(*c),
        CostTerm::Func(name, args) => {
            let ground_args: Vec<String> = args
                .iter()
                .map(|a| grounder.resolve(a, info, binding).expect("binding complete"))
                .collect();
            extra
                .function_values
                .get(&(name.clone(), ground_args.clone()))
                .copied()
                .ok_or_else(|| ModelError::UnknownFunctionValue {
                    name: name.clone(),
                    args: ground_args.join(" "),
                })
        }
    }
}

/// Instantiate every action schema over the typed universe, keeping only
/// instances whose positive preconditions are delete-relaxation reachable
/// from `prob.init ∪ extra.certified`.
pub fn ground_task(dom: &Domain, prob: &Problem, extra: &FactSet) -> Result<GroundTask, ModelError> {
    // Universe: problem objects + constants, plus objects introduced by
    // certified facts (optimistic placeholders, stream-produced names) with
    // types inferred from the predicate declarations they appear under.
    let mut objects: Vec<TypedName> = prob.universe(dom).cloned().collect();
    let mut inferred: BTreeMap<String, String> = BTreeMap::new();
    {
        let known: BTreeSet<&str> = objects.iter().map(|o| o.name.as_str()).collect();
        for atom in &extra.certified {
            let Some(decl) = dom.predicate(&atom.predicate) else { continue };
            for (arg, param) in atom.args.iter().zip(&decl.params) {
                if known.contains(arg.as_str()) {
                    continue;
                }
                match inferred.get(arg) {
                    Some(ty) if dom.is_subtype(ty, &param.ty) => {}
                    _ => {
                        inferred.insert(arg.clone(), param.ty.clone());
                    }
                }
            }
        }
    }
    for (name, ty) in &inferred {
        objects.push(TypedName::new(name.clone(), ty.clone()));
    }
    let obj_type: BTreeMap<&str, &str> = objects
        .iter()
        .map(|o| (o.name.as_str(), o.ty.as_str()))
        .collect();

    // Goal literals must mention known objects (deferred from parse time).
    let mut goal: Vec<GroundLiteral> = Vec::new();
    for lit in &prob.goal.literals {
        let mut args = Vec::with_capacity(lit.args.len());
        for a in &lit.args {
            let name = a.as_str();
            if !lit.is_equality() && !obj_type.contains_key(name) {
                return Err(ModelError::UnknownGoalObject(name.to_owned()));
            }
            args.push(name.to_owned());
        }
        goal.push(GroundLiteral {
            atom: GroundAtom { predicate: lit.predicate.clone(), args },
            negated: lit.negated,
        });
    }

    let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut types: BTreeSet<&str> = dom.type_hierarchy.keys().map(String::as_str).collect();
    types.insert(crate::pddl::ast::OBJECT_TYPE);
    for ty in types {
        let objs: Vec<&str> = objects
            .iter()
            .filter(|o| dom.is_subtype(&o.ty, ty))
            .map(|o| o.name.as_str())
            .collect();
        by_type.insert(ty, objs);
    }

    let mut effect_preds: BTreeSet<&str> = BTreeSet::new();
    for schema in &dom.actions {
        collect_effect_predicates(schema, &mut effect_preds);
    }
    let static_preds: BTreeSet<&str> = dom
        .predicates
        .iter()
        .map(|p| p.name.as_str())
        .filter(|p| !effect_preds.contains(p))
        .collect();

    let initial: BTreeSet<GroundAtom> =
        prob.init.iter().chain(extra.certified.iter()).cloned().collect();

    let mut grounder = Grounder {
        dom,
        obj_type,
        by_type,
        static_preds,
        initial: initial.clone(),
        reachable: BTreeSet::new(),
        index: BTreeMap::new(),
    };
    for atom in &initial {
        grounder.insert_reachable(atom.clone());
    }

    let infos: Vec<SchemaInfo> = dom
        .actions
        .iter()
        .map(|schema| {
            let param_idx = schema
                .params
                .iter()
                .enumerate()
                .map(|(i, p)| (p.name.as_str(), i))
                .collect();
            let mut positives = Vec::new();
            let mut equalities = Vec::new();
            let mut negatives = Vec::new();
            for lit in &schema.precondition.literals {
                if lit.is_equality() {
                    equalities.push(lit);
                } else if lit.negated {
                    negatives.push(lit);
                } else {
                    positives.push(lit);
                }
            }
            SchemaInfo { schema, param_idx, positives, equalities, negatives }
        })
        .collect();

    let unit_cost = dom.actions.iter().all(|a| {
        a.effect.cost.is_none() && a.effect.conditionals.iter().all(|c| c.cost.is_none())
    });

    // Relaxed-reachability fixpoint: discover instances, add their
    // (unconditional and conditional) add effects, repeat until stable.
    let mut seen: BTreeSet<(usize, Vec<String>)> = BTreeSet::new();
    let mut instances: Vec<(usize, Vec<String>)> = Vec::new();
    loop {
        let mut changed = false;
        for (si, info) in infos.iter().enumerate() {
            let mut bindings = Vec::new();
            grounder.match_schema(info, &mut bindings);
            for binding in bindings {
                if !seen.insert((si, binding.clone())) {
                    continue;
                }
                let opt: Vec<Option<String>> = binding.iter().cloned().map(Some).collect();
                let adds = info
                    .schema
                    .effect
                    .add
                    .iter()
                    .chain(info.schema.effect.conditionals.iter().flat_map(|c| c.add.iter()));
                for lit in adds {
                    let gl = grounder.ground_literal(lit, info, &opt);
                    if grounder.insert_reachable(gl.atom) {
                        changed = true;
                    }
                }
                instances.push((si, binding));
            }
        }
        if !changed {
            break;
        }
    }

    // Build the runtime actions: statics and equalities already checked by
    // the matcher are dropped; statically decidable conditional branches are
    // folded; unreachable atoms are pruned.
    let mut actions: Vec<GroundAction> = Vec::new();
    'instances: for (si, binding) in &instances {
        let info = &infos[*si];
        let opt: Vec<Option<String>> = binding.iter().cloned().map(Some).collect();

        let mut precondition: Vec<GroundLiteral> = Vec::new();
        for lit in info.positives.iter().chain(info.negatives.iter()) {
            if grounder.static_preds.contains(lit.predicate.as_str()) {
                continue; // truth already established by the matcher
            }
            let gl = grounder.ground_literal(lit, info, &opt);
            if !grounder.reachable.contains(&gl.atom) {
                if gl.negated {
                    continue; // atom can never hold: literal is always true
                }
                continue 'instances; // positive atom unreachable (stale pass)
            }
            precondition.push(gl);
        }

        let mut add: BTreeSet<GroundAtom> = BTreeSet::new();
        let mut del: BTreeSet<GroundAtom> = BTreeSet::new();
        let mut cost = match &info.schema.effect.cost {
            Some(term) => resolve_cost(term, info, &opt, &grounder, extra)?,
            None => 0,
        };
        for lit in &info.schema.effect.add {
            add.insert(grounder.ground_literal(lit, info, &opt).atom);
        }
        for lit in &info.schema.effect.del {
            let atom = grounder.ground_literal(lit, info, &opt).atom;
            if grounder.reachable.contains(&atom) {
                del.insert(atom);
            }
        }

        let mut conditionals: Vec<GroundCondEffect> = Vec::new();
        'branches: for ce in &info.schema.effect.conditionals {
            let mut cond: Vec<GroundLiteral> = Vec::new();
            for lit in &ce.cond.literals {
                let gl = grounder.ground_literal(lit, info, &opt);
                if gl.atom.predicate == "=" {
                    let eq = gl.atom.args.first() == gl.atom.args.get(1);
                    if eq == gl.negated {
                        continue 'branches; // statically false
                    }
                    continue; // statically true
                }
                if grounder.static_preds.contains(gl.atom.predicate.as_str()) {
                    if grounder.initial.contains(&gl.atom) == gl.negated {
                        continue 'branches;
                    }
                    continue;
                }
                if !grounder.reachable.contains(&gl.atom) {
                    if gl.negated {
                        continue; // always true
                    }
                    continue 'branches; // can never fire
                }
                cond.push(gl);
            }
            let branch_cost = match &ce.cost {
                Some(term) => resolve_cost(term, info, &opt, &grounder, extra)?,
                None => 0,
            };
            let branch_add: BTreeSet<GroundAtom> = ce
                .add
                .iter()
                .map(|l| grounder.ground_literal(l, info, &opt).atom)
                .collect();
            let branch_del: BTreeSet<GroundAtom> = ce
                .del
                .iter()
                .map(|l| grounder.ground_literal(l, info, &opt).atom)
                .filter(|a| grounder.reachable.contains(a))
                .collect();
            if cond.is_empty() {
                add.extend(branch_add);
                del.extend(branch_del);
                cost += branch_cost;
            } else {
                conditionals.push(GroundCondEffect {
                    cond,
                    add: branch_add,
                    del: branch_del,
                    cost: branch_cost,
                });
            }
        }

        // Add wins over delete within the unconditional effect.
        del.retain(|a| !add.contains(a));

        actions.push(GroundAction {
            schema_name: info.schema.name.clone(),
            binding: binding.clone(),
            precondition,
            add,
            del,
            conditionals,
            cost: if unit_cost { 1 } else { cost },
        });
    }

    let reachable = grounder.reachable;
    Ok(GroundTask { objects, atoms: reachable, actions, init: State::new(initial), goal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::ast::SourceText;
    use crate::pddl::{parse_domain, parse_problem};

    fn washing() -> (Domain, Problem) {
        let dom_src = SourceText::new(
            include_str!("../tests/fixtures/washing.pddl"),
            "washing.pddl",
        );
        let prob_src = SourceText::new(
            include_str!("../tests/fixtures/washing-problem.pddl"),
            "washing-problem.pddl",
        );
        let dom = parse_domain(&dom_src).unwrap();
        let prob = parse_problem(&prob_src, &dom).unwrap();
        (dom, prob)
    }

    fn atom(s: &str) -> GroundAtom {
        let inner = s.trim_start_matches('(').trim_end_matches(')');
        let mut parts = inner.split_whitespace();
        GroundAtom::new(parts.next().unwrap(), parts)
    }

    fn find<'a>(task: &'a GroundTask, name: &str, binding: &[&str]) -> &'a GroundAction {
        task.actions
            .iter()
            .find(|a| a.schema_name == name && a.binding == binding)
            .unwrap_or_else(|| panic!("no instance ({name} {})", binding.join(" ")))
    }

    #[test]
    fn holds_on_washing_init() {
        let (dom, prob) = washing();
        let task = ground_task(&dom, &prob, &FactSet::default()).unwrap();
        assert!(task.init.contains(&atom("(is_free franka)")));
        assert!(!task.init.contains(&atom("(is_washed beaker1)")));
    }

    #[test]
    fn pick_applies_per_listed_effects() {
        let (dom, prob) = washing();
        let task = ground_task(&dom, &prob, &FactSet::default()).unwrap();
        let pick = find(&task, "pick", &["franka", "beaker1", "table_loc"]);
        let s1 = apply(&task.init, pick).unwrap();
        assert!(s1.contains(&atom("(is_picked beaker1 franka)")));
        assert!(!s1.contains(&atom("(at beaker1 table_loc)")));
        assert!(!s1.contains(&atom("(is_free franka)")));
    }

    #[test]
    fn pick_twice_fails_on_is_picked() {
        let (dom, prob) = washing();
        let task = ground_task(&dom, &prob, &FactSet::default()).unwrap();
        let pick = find(&task, "pick", &["franka", "beaker1", "table_loc"]);
        let s1 = apply(&task.init, pick).unwrap();
        let err = apply(&s1, pick).unwrap_err();
        match err {
            ModelError::Inapplicable { action, literal } => {
                assert_eq!(action, "(pick franka beaker1 table_loc)");
                assert!(literal.contains("is_picked") || literal.contains("at") || literal.contains("is_free"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_effect_action_changes_only_cost() {
        let src = SourceText::new(
            "(define (domain d) (:requirements :strips) (:predicates (p)) \
             (:action noop :parameters () :precondition (and) :effect (and)))",
            "d.pddl",
        );
        let dom = parse_domain(&src).unwrap();
        let psrc = SourceText::new(
            "(define (problem q) (:domain d) (:init (p)) (:goal (p)))",
            "q.pddl",
        );
        let prob = parse_problem(&psrc, &dom).unwrap();
        let task = ground_task(&dom, &prob, &FactSet::default()).unwrap();
        assert_eq!(task.actions.len(), 1);
        let s1 = apply(&task.init, &task.actions[0]).unwrap();
        assert_eq!(s1.atoms, task.init.atoms);
        assert_eq!(s1.total_cost, 1); // unit cost: domain declares no costs
    }

    #[test]
    fn goal_with_unknown_object_errors() {
        let (dom, prob) = washing();
        let mut bad = prob.clone();
        bad.goal = Condition::new(vec![Literal::positive(
            "is_washed",
            vec![Arg::Name("ghost".into())],
        )]);
        let err = ground_task(&dom, &bad, &FactSet::default()).unwrap_err();
        assert_eq!(err, ModelError::UnknownGoalObject("ghost".into()));
    }

    #[test]
    fn empty_conjunction_holds_everywhere() {
        let s = State::default();
        assert!(holds(&s, &Condition::default()));
    }

    #[test]
    fn closed_world_negation() {
        let (dom, prob) = washing();
        let task = ground_task(&dom, &prob, &FactSet::default()).unwrap();
        let c = Condition::new(vec![Literal {
            predicate: "is_washed".into(),
            args: vec![Arg::Name("beaker1".into())],
            negated: true,
        }]);
        assert!(holds(&task.init, &c));
    }
}

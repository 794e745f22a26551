use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::GroundAtom;

/// Raw input text plus where it came from, for error reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceText {
    pub content: String,
    pub origin: String,
}

impl SourceText {
    pub fn new(content: impl Into<String>, origin: impl Into<String>) -> Self {
        SourceText { content: content.into(), origin: origin.into() }
    }

    pub fn inline(content: impl Into<String>) -> Self {
        SourceText::new(content, "<inline>")
    }
}

/// The supported requirement fragment. Anything else is rejected at parse
/// time. Checking is lenient: a domain may use, say, negative preconditions
/// without declaring `:negative-preconditions` (published domains routinely
/// do), but it may not declare a flag outside this set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Requirement {
    Strips,
    Typing,
    NegativePreconditions,
    Equality,
    ConditionalEffects,
    ActionCosts,
}

impl Requirement {
    pub fn from_keyword(kw: &str) -> Option<Self> {
        match kw {
            ":strips" => Some(Requirement::Strips),
            ":typing" => Some(Requirement::Typing),
            ":negative-preconditions" => Some(Requirement::NegativePreconditions),
            ":equality" => Some(Requirement::Equality),
            ":conditional-effects" => Some(Requirement::ConditionalEffects),
            ":action-costs" => Some(Requirement::ActionCosts),
            _ => None,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Requirement::Strips => ":strips",
            Requirement::Typing => ":typing",
            Requirement::NegativePreconditions => ":negative-preconditions",
            Requirement::Equality => ":equality",
            Requirement::ConditionalEffects => ":conditional-effects",
            Requirement::ActionCosts => ":action-costs",
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A name with its declared type (`?rob - robot`, `beaker1 - beaker`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedName { name: name.into(), ty: ty.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

/// Argument position in a lifted literal: a `?variable` or an object name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Arg {
    Var(String),
    Name(String),
}

impl Arg {
    pub fn as_str(&self) -> &str {
        match self {
            Arg::Var(v) | Arg::Name(v) => v,
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A possibly negated predicate application. Equality atoms use the
/// predicate name `=`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Arg>,
    pub negated: bool,
}

impl Literal {
    pub fn positive(predicate: impl Into<String>, args: Vec<Arg>) -> Self {
        Literal { predicate: predicate.into(), args, negated: false }
    }

    pub fn negative(predicate: impl Into<String>, args: Vec<Arg>) -> Self {
        Literal { predicate: predicate.into(), args, negated: true }
    }

    pub fn is_equality(&self) -> bool {
        self.predicate == "="
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "(not ")?;
        }
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")?;
        if self.negated {
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// A conjunction of literals. An empty conjunction is trivially true.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Condition {
    pub literals: Vec<Literal>,
}

impl Condition {
    pub fn new(literals: Vec<Literal>) -> Self {
        Condition { literals }
    }

    pub fn is_trivial(&self) -> bool {
        self.literals.is_empty()
    }
}

/// Right-hand side of `(increase (total-cost) …)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CostTerm {
    Const(u64),
    Func(String, Vec<Arg>),
}

/// One `(when <cond> <effects>)` branch. `add`/`del` literals are stored
/// positive; the parser splits on negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondEffect {
    pub cond: Condition,
    pub add: Vec<Literal>,
    pub del: Vec<Literal>,
    pub cost: Option<CostTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Effect {
    pub add: Vec<Literal>,
    pub del: Vec<Literal>,
    pub conditionals: Vec<CondEffect>,
    pub cost: Option<CostTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub precondition: Condition,
    pub effect: Effect,
}

impl ActionSchema {
    pub fn param(&self, name: &str) -> Option<&TypedName> {
        self.params.iter().find(|p| p.name == name)
    }
}

pub const OBJECT_TYPE: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: BTreeSet<Requirement>,
    /// type → parent type. `object` is the implicit root and never appears
    /// as a key.
    pub type_hierarchy: BTreeMap<String, String>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub functions: Vec<FunctionDecl>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn is_declared_type(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.type_hierarchy.contains_key(ty)
    }

    /// All declared types, `object` included.
    pub fn declared_types(&self) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self.type_hierarchy.keys().map(String::as_str).collect();
        out.insert(OBJECT_TYPE);
        out
    }

    /// True when `child` is `ancestor` or transitively extends it.
    pub fn is_subtype(&self, child: &str, ancestor: &str) -> bool {
        if ancestor == OBJECT_TYPE || child == ancestor {
            return true;
        }
        let mut cur = child;
        while let Some(parent) = self.type_hierarchy.get(cur) {
            if parent == ancestor {
                return true;
            }
            cur = parent;
        }
        false
    }

    pub fn uses_action_costs(&self) -> bool {
        self.requirements.contains(&Requirement::ActionCosts)
            || self.actions.iter().any(|a| {
                a.effect.cost.is_some()
                    || a.effect.conditionals.iter().any(|c| c.cost.is_some())
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: BTreeSet<GroundAtom>,
    pub goal: Condition,
}

impl Problem {
    /// Objects plus the domain's constants, the full ground universe.
    pub fn universe<'a>(&'a self, dom: &'a Domain) -> impl Iterator<Item = &'a TypedName> {
        self.objects.iter().chain(dom.constants.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Eager,
    Optimistic,
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StreamKind::Eager => "eager",
            StreamKind::Optimistic => "optimistic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamSpec {
    pub name: String,
    pub kind: StreamKind,
    pub inputs: Vec<TypedName>,
    pub domain_facts: Vec<Literal>,
    pub outputs: Vec<TypedName>,
    pub certified: Vec<Literal>,
    pub generator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StreamSpecSet {
    pub streams: Vec<StreamSpec>,
}

impl StreamSpecSet {
    pub fn get(&self, name: &str) -> Option<&StreamSpec> {
        self.streams.iter().find(|s| s.name == name)
    }

    pub fn of_kind(&self, kind: StreamKind) -> impl Iterator<Item = &StreamSpec> {
        self.streams.iter().filter(move |s| s.kind == kind)
    }
}

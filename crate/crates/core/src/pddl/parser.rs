use std::collections::{BTreeMap, BTreeSet};

use crate::error::{PddlError, PddlErrorKind};
use crate::model::GroundAtom;
use crate::pddl::ast::*;
use crate::pddl::lexer::{tokenize, Token, TokenKind};

#[derive(Debug)]
enum Sexp {
    Atom { text: String, line: u32, col: u32 },
    List { items: Vec<Sexp>, line: u32, col: u32 },
}

impl Sexp {
    fn pos(&self) -> (u32, u32) {
        match self {
            Sexp::Atom { line, col, .. } | Sexp::List { line, col, .. } => (*line, *col),
        }
    }

    fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }
}

struct Ctx<'a> {
    origin: &'a str,
}

impl<'a> Ctx<'a> {
    fn err(&self, at: (u32, u32), kind: PddlErrorKind) -> PddlError {
        PddlError::new(self.origin, at.0, at.1, kind)
    }

    fn invalid(&self, at: (u32, u32), msg: impl Into<String>) -> PddlError {
        self.err(at, PddlErrorKind::Invalid(msg.into()))
    }
}

fn read_sexps(tokens: Vec<Token>, ctx: &Ctx) -> Result<Vec<Sexp>, PddlError> {
    let mut stack: Vec<(Vec<Sexp>, u32, u32)> = Vec::new();
    let mut top: Vec<Sexp> = Vec::new();
    for t in tokens {
        match t.kind {
            TokenKind::LParen => stack.push((Vec::new(), t.line, t.col)),
            TokenKind::RParen => match stack.pop() {
                Some((items, line, col)) => {
                    let list = Sexp::List { items, line, col };
                    match stack.last_mut() {
                        Some((parent, _, _)) => parent.push(list),
                        None => top.push(list),
                    }
                }
                None => return Err(ctx.err((t.line, t.col), PddlErrorKind::Unbalanced)),
            },
            TokenKind::Word(text) => {
                let atom = Sexp::Atom { text, line: t.line, col: t.col };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(atom),
                    None => top.push(atom),
                }
            }
        }
    }
    if let Some((_, line, col)) = stack.last() {
        return Err(ctx.err((*line, *col), PddlErrorKind::Unbalanced));
    }
    Ok(top)
}

fn is_var(word: &str) -> bool {
    word.starts_with('?')
}

/// Parse `name… - type name… - type name…`; untyped trailing names get
/// `object` (standard PDDL semantics).
fn parse_typed_list(
    items: &[Sexp],
    ctx: &Ctx,
    what: &'static str,
    want_vars: bool,
) -> Result<Vec<TypedName>, PddlError> {
    let mut out: Vec<TypedName> = Vec::new();
    let mut pending: Vec<(String, (u32, u32))> = Vec::new();
    let mut it = items.iter();
    while let Some(s) = it.next() {
        let word = s
            .as_atom()
            .ok_or_else(|| ctx.invalid(s.pos(), format!("expected a {what} name, found a list")))?;
        if word == "-" {
            let ty_sexp = it
                .next()
                .ok_or_else(|| ctx.invalid(s.pos(), "dangling '-' in typed list"))?;
            let ty = ty_sexp
                .as_atom()
                .ok_or_else(|| ctx.invalid(ty_sexp.pos(), "expected a type name after '-'"))?;
            if is_var(ty) {
                return Err(ctx.invalid(ty_sexp.pos(), format!("'{ty}' cannot be a type name")));
            }
            for (name, _) in pending.drain(..) {
                out.push(TypedName::new(name, ty));
            }
            continue;
        }
        if want_vars && !is_var(word) {
            return Err(ctx.invalid(s.pos(), format!("expected a variable, found '{word}'")));
        }
        if !want_vars && is_var(word) {
            return Err(ctx.invalid(s.pos(), format!("expected a name, found variable '{word}'")));
        }
        if is_var(word) && word.len() == 1 {
            return Err(ctx.invalid(s.pos(), "empty variable name '?'"));
        }
        pending.push((word.to_owned(), s.pos()));
    }
    for (name, _) in pending.drain(..) {
        out.push(TypedName::new(name, OBJECT_TYPE));
    }
    let mut seen = BTreeSet::new();
    for (i, tn) in out.iter().enumerate() {
        if !seen.insert(tn.name.as_str()) {
            let at = items
                .iter()
                .filter_map(|s| s.as_atom().map(|a| (a, s.pos())))
                .filter(|(a, _)| *a == tn.name)
                .nth(1)
                .map(|(_, p)| p)
                .unwrap_or_else(|| items[i.min(items.len() - 1)].pos());
            return Err(ctx.err(at, PddlErrorKind::Duplicate { what, name: tn.name.clone() }));
        }
    }
    Ok(out)
}

fn parse_arg(s: &Sexp, ctx: &Ctx) -> Result<Arg, PddlError> {
    let word = s
        .as_atom()
        .ok_or_else(|| ctx.invalid(s.pos(), "expected an argument, found a list"))?;
    if is_var(word) {
        if word.len() == 1 {
            return Err(ctx.invalid(s.pos(), "empty variable name '?'"));
        }
        Ok(Arg::Var(word.to_owned()))
    } else {
        Ok(Arg::Name(word.to_owned()))
    }
}

/// `(pred arg…)`, `(= a b)`, or a `(not …)` wrapper around either.
fn parse_literal(s: &Sexp, ctx: &Ctx) -> Result<Literal, PddlError> {
    let items = s
        .as_list()
        .ok_or_else(|| ctx.invalid(s.pos(), "expected a literal, found an atom"))?;
    let head = items
        .first()
        .and_then(|h| h.as_atom())
        .ok_or_else(|| ctx.invalid(s.pos(), "expected a predicate name"))?;
    if head == "not" {
        if items.len() != 2 {
            return Err(ctx.invalid(s.pos(), "(not …) takes exactly one literal"));
        }
        let inner = parse_literal(&items[1], ctx)?;
        if inner.negated {
            return Err(ctx.invalid(s.pos(), "double negation is not supported"));
        }
        return Ok(Literal { negated: true, ..inner });
    }
    let args = items[1..]
        .iter()
        .map(|a| parse_arg(a, ctx))
        .collect::<Result<Vec<_>, _>>()?;
    if head == "=" && args.len() != 2 {
        return Err(ctx.invalid(s.pos(), "equality takes exactly two arguments"));
    }
    Ok(Literal::positive(head, args))
}

/// A conjunction: `()`, a bare literal, or `(and …)` with arbitrary nesting.
fn parse_condition(s: &Sexp, ctx: &Ctx) -> Result<Condition, PddlError> {
    let mut literals = Vec::new();
    collect_condition(s, ctx, &mut literals)?;
    Ok(Condition::new(literals))
}

fn collect_condition(s: &Sexp, ctx: &Ctx, out: &mut Vec<Literal>) -> Result<(), PddlError> {
    let items = s
        .as_list()
        .ok_or_else(|| ctx.invalid(s.pos(), "expected a condition, found an atom"))?;
    match items.first().and_then(|h| h.as_atom()) {
        None => Ok(()), // empty conjunction
        Some("and") => {
            for item in &items[1..] {
                collect_condition(item, ctx, out)?;
            }
            Ok(())
        }
        Some(_) => {
            out.push(parse_literal(s, ctx)?);
            Ok(())
        }
    }
}

fn parse_cost_term(s: &Sexp, ctx: &Ctx) -> Result<CostTerm, PddlError> {
    match s {
        Sexp::Atom { text, .. } => text
            .parse::<u64>()
            .map(CostTerm::Const)
            .map_err(|_| ctx.invalid(s.pos(), format!("cost must be a non-negative integer, found '{text}'"))),
        Sexp::List { items, .. } => {
            let head = items
                .first()
                .and_then(|h| h.as_atom())
                .ok_or_else(|| ctx.invalid(s.pos(), "expected a function name"))?;
            let args = items[1..]
                .iter()
                .map(|a| parse_arg(a, ctx))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(CostTerm::Func(head.to_owned(), args))
        }
    }
}

fn parse_effect(s: &Sexp, ctx: &Ctx) -> Result<Effect, PddlError> {
    let mut eff = Effect::default();
    collect_effect(s, ctx, &mut eff, false)?;
    Ok(eff)
}

fn collect_effect(s: &Sexp, ctx: &Ctx, eff: &mut Effect, inside_when: bool) -> Result<(), PddlError> {
    let items = s
        .as_list()
        .ok_or_else(|| ctx.invalid(s.pos(), "expected an effect, found an atom"))?;
    match items.first().and_then(|h| h.as_atom()) {
        None => Ok(()),
        Some("and") => {
            for item in &items[1..] {
                collect_effect(item, ctx, eff, inside_when)?;
            }
            Ok(())
        }
        Some("when") => {
            if inside_when {
                return Err(ctx.invalid(s.pos(), "nested (when …) is not supported"));
            }
            if items.len() != 3 {
                return Err(ctx.invalid(s.pos(), "(when <condition> <effect>) takes two forms"));
            }
            let cond = parse_condition(&items[1], ctx)?;
            let mut branch = Effect::default();
            collect_effect(&items[2], ctx, &mut branch, true)?;
            if !branch.conditionals.is_empty() {
                return Err(ctx.invalid(s.pos(), "nested (when …) is not supported"));
            }
            eff.conditionals.push(CondEffect {
                cond,
                add: branch.add,
                del: branch.del,
                cost: branch.cost,
            });
            Ok(())
        }
        Some("increase") => {
            if items.len() != 3 {
                return Err(ctx.invalid(s.pos(), "(increase (total-cost) <term>) takes two forms"));
            }
            let target_ok = items[1]
                .as_list()
                .and_then(|l| l.first())
                .and_then(|h| h.as_atom())
                .map(|h| h == "total-cost")
                .unwrap_or(false);
            if !target_ok || items[1].as_list().map(|l| l.len()) != Some(1) {
                return Err(ctx.invalid(items[1].pos(), "only (increase (total-cost) …) is supported"));
            }
            if eff.cost.is_some() {
                return Err(ctx.invalid(s.pos(), "duplicate cost increase in one effect branch"));
            }
            eff.cost = Some(parse_cost_term(&items[2], ctx)?);
            Ok(())
        }
        Some(_) => {
            let lit = parse_literal(s, ctx)?;
            if lit.is_equality() {
                return Err(ctx.invalid(s.pos(), "equality cannot appear in effects"));
            }
            if lit.negated {
                eff.del.push(Literal { negated: false, ..lit });
            } else {
                eff.add.push(lit);
            }
            Ok(())
        }
    }
}

/// Split a `(define …)` body into its `(:section …)` forms.
fn sections<'a>(
    items: &'a [Sexp],
    ctx: &Ctx,
) -> Result<Vec<(&'a str, &'a [Sexp], (u32, u32))>, PddlError> {
    let mut out = Vec::new();
    for s in items {
        let list = s
            .as_list()
            .ok_or_else(|| ctx.invalid(s.pos(), "expected a (:section …) form"))?;
        let head = list
            .first()
            .and_then(|h| h.as_atom())
            .ok_or_else(|| ctx.invalid(s.pos(), "expected a (:section …) form"))?;
        out.push((head, &list[1..], s.pos()));
    }
    Ok(out)
}

fn expect_define<'a>(
    top: &'a [Sexp],
    ctx: &Ctx,
    kind: &str,
) -> Result<(String, &'a [Sexp]), PddlError> {
    if top.len() != 1 {
        let at = top.get(1).map(|s| s.pos()).unwrap_or((1, 1));
        return Err(ctx.invalid(at, format!("expected a single (define ({kind} …)) form")));
    }
    let items = top[0]
        .as_list()
        .ok_or_else(|| ctx.invalid(top[0].pos(), "expected (define …)"))?;
    if items.first().and_then(|h| h.as_atom()) != Some("define") {
        return Err(ctx.invalid(top[0].pos(), "expected (define …)"));
    }
    let header = items
        .get(1)
        .and_then(|s| s.as_list())
        .ok_or_else(|| ctx.invalid(top[0].pos(), format!("expected (define ({kind} <name>) …)")))?;
    if header.first().and_then(|h| h.as_atom()) != Some(kind) || header.len() != 2 {
        let at = items[1].pos();
        return Err(ctx.invalid(at, format!("expected ({kind} <name>)")));
    }
    let name = header[1]
        .as_atom()
        .ok_or_else(|| ctx.invalid(header[1].pos(), format!("expected a {kind} name")))?;
    Ok((name.to_owned(), &items[2..]))
}

pub fn parse_domain(src: &SourceText) -> Result<Domain, PddlError> {
    let ctx = Ctx { origin: &src.origin };
    let top = read_sexps(tokenize(src)?, &ctx)?;
    let (name, body) = expect_define(&top, &ctx, "domain")?;

    let mut requirements = BTreeSet::new();
    let mut type_hierarchy: BTreeMap<String, String> = BTreeMap::new();
    let mut declared_types: BTreeSet<String> = BTreeSet::new();
    let mut constants: Vec<TypedName> = Vec::new();
    let mut predicates: Vec<PredicateDecl> = Vec::new();
    let mut functions: Vec<FunctionDecl> = Vec::new();
    let mut actions: Vec<ActionSchema> = Vec::new();

    for (head, rest, at) in sections(&body, &ctx)? {
        match head {
            ":requirements" => {
                for s in rest {
                    let kw = s
                        .as_atom()
                        .ok_or_else(|| ctx.invalid(s.pos(), "expected a requirement keyword"))?;
                    match Requirement::from_keyword(kw) {
                        Some(r) => {
                            requirements.insert(r);
                        }
                        None => {
                            return Err(ctx.err(
                                s.pos(),
                                PddlErrorKind::UnsupportedRequirement(kw.to_owned()),
                            ))
                        }
                    }
                }
            }
            ":types" => {
                for tn in parse_typed_list(rest, &ctx, "type", false)? {
                    if !declared_types.insert(tn.name.clone()) {
                        return Err(ctx.err(
                            at,
                            PddlErrorKind::Duplicate { what: "type", name: tn.name },
                        ));
                    }
                    if tn.name != OBJECT_TYPE {
                        type_hierarchy.insert(tn.name, tn.ty);
                    }
                }
                // Types referenced only as parents are implicitly declared.
                let parents: Vec<String> = type_hierarchy.values().cloned().collect();
                for p in parents {
                    if p != OBJECT_TYPE && !type_hierarchy.contains_key(&p) {
                        type_hierarchy.insert(p, OBJECT_TYPE.to_owned());
                    }
                }
                // Cycle check: every type must reach `object`.
                for start in type_hierarchy.keys() {
                    let mut cur = start.as_str();
                    let mut seen = BTreeSet::new();
                    while let Some(parent) = type_hierarchy.get(cur) {
                        if !seen.insert(cur) {
                            return Err(ctx.err(at, PddlErrorKind::CyclicTypes(start.clone())));
                        }
                        cur = parent;
                    }
                }
            }
            ":constants" => {
                constants = parse_typed_list(rest, &ctx, "constant", false)?;
            }
            ":predicates" => {
                for s in rest {
                    let items = s
                        .as_list()
                        .ok_or_else(|| ctx.invalid(s.pos(), "expected a predicate declaration"))?;
                    let pname = items
                        .first()
                        .and_then(|h| h.as_atom())
                        .ok_or_else(|| ctx.invalid(s.pos(), "expected a predicate name"))?;
                    if predicates.iter().any(|p| p.name == pname) {
                        return Err(ctx.err(
                            s.pos(),
                            PddlErrorKind::Duplicate { what: "predicate", name: pname.to_owned() },
                        ));
                    }
                    let params = parse_typed_list(&items[1..], &ctx, "parameter", true)?;
                    predicates.push(PredicateDecl { name: pname.to_owned(), params });
                }
            }
            ":functions" => {
                let mut it = rest.iter().peekable();
                while let Some(s) = it.next() {
                    if s.as_atom() == Some("-") {
                        // `… - number` type annotation on the preceding group.
                        it.next();
                        continue;
                    }
                    let items = s
                        .as_list()
                        .ok_or_else(|| ctx.invalid(s.pos(), "expected a function declaration"))?;
                    let fname = items
                        .first()
                        .and_then(|h| h.as_atom())
                        .ok_or_else(|| ctx.invalid(s.pos(), "expected a function name"))?;
                    if functions.iter().any(|f| f.name == fname) {
                        return Err(ctx.err(
                            s.pos(),
                            PddlErrorKind::Duplicate { what: "function", name: fname.to_owned() },
                        ));
                    }
                    let params = parse_typed_list(&items[1..], &ctx, "parameter", true)?;
                    functions.push(FunctionDecl { name: fname.to_owned(), params });
                }
            }
            ":action" => {
                let aname = rest
                    .first()
                    .and_then(|s| s.as_atom())
                    .ok_or_else(|| ctx.invalid(at, "expected an action name"))?;
                if actions.iter().any(|a| a.name == aname) {
                    return Err(ctx.err(
                        at,
                        PddlErrorKind::Duplicate { what: "action", name: aname.to_owned() },
                    ));
                }
                let mut params = Vec::new();
                let mut precondition = Condition::default();
                let mut effect = Effect::default();
                let mut i = 1;
                while i < rest.len() {
                    let kw = rest[i]
                        .as_atom()
                        .ok_or_else(|| ctx.invalid(rest[i].pos(), "expected an action keyword"))?;
                    let val = rest
                        .get(i + 1)
                        .ok_or_else(|| ctx.invalid(rest[i].pos(), format!("missing value after {kw}")))?;
                    match kw {
                        ":parameters" => {
                            let items = val.as_list().ok_or_else(|| {
                                ctx.invalid(val.pos(), ":parameters takes a list")
                            })?;
                            params = parse_typed_list(items, &ctx, "parameter", true)?;
                        }
                        ":precondition" => precondition = parse_condition(val, &ctx)?,
                        ":effect" => effect = parse_effect(val, &ctx)?,
                        other => {
                            return Err(ctx.invalid(
                                rest[i].pos(),
                                format!("unknown action keyword {other}"),
                            ))
                        }
                    }
                    i += 2;
                }
                actions.push(ActionSchema {
                    name: aname.to_owned(),
                    params,
                    precondition,
                    effect,
                });
                let action_at = at;
                let dom_so_far = Domain {
                    name: name.clone(),
                    requirements: requirements.clone(),
                    type_hierarchy: type_hierarchy.clone(),
                    constants: constants.clone(),
                    predicates: predicates.clone(),
                    functions: functions.clone(),
                    actions: Vec::new(),
                };
                validate_action(actions.last().unwrap(), &dom_so_far, &ctx, action_at)?;
            }
            other => return Err(ctx.invalid(at, format!("unknown section {other}"))),
        }
    }

    let dom = Domain {
        name,
        requirements,
        type_hierarchy,
        constants,
        predicates,
        functions,
        actions,
    };
    // Constants must use declared types.
    for c in &dom.constants {
        if !dom.is_declared_type(&c.ty) {
            return Err(ctx.invalid((1, 1), format!("constant '{}' has undeclared type '{}'", c.name, c.ty)));
        }
    }
    for p in &dom.predicates {
        for param in &p.params {
            if !dom.is_declared_type(&param.ty) {
                return Err(ctx.invalid(
                    (1, 1),
                    format!("predicate '{}' parameter '{}' has undeclared type '{}'", p.name, param.name, param.ty),
                ));
            }
        }
    }
    if dom.uses_action_costs()
        && dom.actions.iter().any(|a| a.effect.cost.is_some())
        && dom.functions.iter().all(|f| f.name != "total-cost")
    {
        return Err(ctx.invalid(
            (1, 1),
            "actions increase (total-cost) but the total-cost function is not declared".to_owned(),
        ));
    }
    Ok(dom)
}

/// Where a lifted literal may appear, for validation messages.
fn validate_literal(
    lit: &Literal,
    params: &[TypedName],
    dom: &Domain,
    ctx: &Ctx,
    at: (u32, u32),
    extra_objects: Option<&[TypedName]>,
) -> Result<(), PddlError> {
    if lit.is_equality() {
        for a in &lit.args {
            if let Arg::Var(v) = a {
                if params.iter().all(|p| &p.name != v) {
                    return Err(ctx.invalid(at, format!("variable '{v}' is not a parameter")));
                }
            }
        }
        return Ok(());
    }
    let decl = dom
        .predicate(&lit.predicate)
        .ok_or_else(|| ctx.invalid(at, format!("unknown predicate '{}'", lit.predicate)))?;
    if decl.params.len() != lit.args.len() {
        return Err(ctx.invalid(
            at,
            format!(
                "predicate '{}' takes {} arguments, found {}",
                lit.predicate,
                decl.params.len(),
                lit.args.len()
            ),
        ));
    }
    for (arg, want) in lit.args.iter().zip(&decl.params) {
        match arg {
            Arg::Var(v) => {
                let p = params
                    .iter()
                    .find(|p| &p.name == v)
                    .ok_or_else(|| ctx.invalid(at, format!("variable '{v}' is not a parameter")))?;
                if !dom.is_subtype(&p.ty, &want.ty) {
                    return Err(ctx.invalid(
                        at,
                        format!(
                            "argument '{v}' of '{}' has type '{}', expected '{}'",
                            lit.predicate, p.ty, want.ty
                        ),
                    ));
                }
            }
            Arg::Name(n) => {
                let known = dom
                    .constants
                    .iter()
                    .chain(extra_objects.into_iter().flatten())
                    .find(|c| &c.name == n);
                match known {
                    Some(c) => {
                        if !dom.is_subtype(&c.ty, &want.ty) {
                            return Err(ctx.invalid(
                                at,
                                format!(
                                    "argument '{n}' of '{}' has type '{}', expected '{}'",
                                    lit.predicate, c.ty, want.ty
                                ),
                            ));
                        }
                    }
                    // Unknown names in goals are reported at grounding time;
                    // inside a domain every name must be a constant.
                    None if extra_objects.is_none() => {
                        return Err(ctx.invalid(at, format!("unknown constant '{n}'")));
                    }
                    None => {}
                }
            }
        }
    }
    Ok(())
}

fn validate_action(
    action: &ActionSchema,
    dom: &Domain,
    ctx: &Ctx,
    at: (u32, u32),
) -> Result<(), PddlError> {
    for p in &action.params {
        if !dom.is_declared_type(&p.ty) {
            return Err(ctx.invalid(
                at,
                format!("parameter '{}' has undeclared type '{}'", p.name, p.ty),
            ));
        }
    }
    for lit in &action.precondition.literals {
        validate_literal(lit, &action.params, dom, ctx, at, None)?;
    }
    let all_effect_lits = action
        .effect
        .add
        .iter()
        .chain(&action.effect.del)
        .chain(action.effect.conditionals.iter().flat_map(|c| {
            c.add.iter().chain(&c.del).chain(&c.cond.literals)
        }));
    for lit in all_effect_lits {
        validate_literal(lit, &action.params, dom, ctx, at, None)?;
    }
    let costs = action
        .effect
        .cost
        .iter()
        .chain(action.effect.conditionals.iter().filter_map(|c| c.cost.as_ref()));
    for cost in costs {
        if let CostTerm::Func(fname, args) = cost {
            let decl = dom
                .functions
                .iter()
                .find(|f| &f.name == fname)
                .ok_or_else(|| ctx.invalid(at, format!("unknown function '{fname}'")))?;
            if decl.params.len() != args.len() {
                return Err(ctx.invalid(
                    at,
                    format!(
                        "function '{fname}' takes {} arguments, found {}",
                        decl.params.len(),
                        args.len()
                    ),
                ));
            }
            for arg in args {
                if let Arg::Var(v) = arg {
                    if action.params.iter().all(|p| &p.name != v) {
                        return Err(ctx.invalid(at, format!("variable '{v}' is not a parameter")));
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn parse_problem(src: &SourceText, dom: &Domain) -> Result<Problem, PddlError> {
    let ctx = Ctx { origin: &src.origin };
    let top = read_sexps(tokenize(src)?, &ctx)?;
    let (name, body) = expect_define(&top, &ctx, "problem")?;

    let mut domain_name = None;
    let mut objects: Vec<TypedName> = Vec::new();
    let mut init: BTreeSet<GroundAtom> = BTreeSet::new();
    let mut goal: Option<Condition> = None;

    for (head, rest, at) in sections(&body, &ctx)? {
        match head {
            ":domain" => {
                let dname = rest
                    .first()
                    .and_then(|s| s.as_atom())
                    .ok_or_else(|| ctx.invalid(at, "expected a domain name"))?;
                if dname != dom.name {
                    return Err(ctx.invalid(at, format!("unknown domain name '{dname}'")));
                }
                domain_name = Some(dname.to_owned());
            }
            ":objects" => {
                objects = parse_typed_list(rest, &ctx, "object", false)?;
                for o in &objects {
                    if !dom.is_declared_type(&o.ty) {
                        return Err(ctx.invalid(
                            at,
                            format!("object '{}' has undeclared type '{}'", o.name, o.ty),
                        ));
                    }
                    if dom.constants.iter().any(|c| c.name == o.name) {
                        return Err(ctx.invalid(
                            at,
                            format!("object '{}' shadows a domain constant", o.name),
                        ));
                    }
                }
            }
            ":init" => {
                for s in rest {
                    let lit = parse_literal(s, &ctx)?;
                    if lit.negated {
                        return Err(ctx.invalid(
                            s.pos(),
                            "init atoms must be positive (closed world)",
                        ));
                    }
                    if lit.is_equality() {
                        return Err(ctx.invalid(
                            s.pos(),
                            "function initialization is not supported; costs come from action effects or streams",
                        ));
                    }
                    validate_literal(&lit, &[], dom, &ctx, s.pos(), Some(&objects))?;
                    let mut args = Vec::with_capacity(lit.args.len());
                    for a in &lit.args {
                        match a {
                            Arg::Name(n) => {
                                if objects.iter().all(|o| o.name != *n)
                                    && dom.constants.iter().all(|c| c.name != *n)
                                {
                                    return Err(ctx.invalid(
                                        s.pos(),
                                        format!("unknown object '{n}' in init"),
                                    ));
                                }
                                args.push(n.clone());
                            }
                            Arg::Var(v) => {
                                return Err(ctx.invalid(
                                    s.pos(),
                                    format!("init atoms must be ground, found '{v}'"),
                                ))
                            }
                        }
                    }
                    init.insert(GroundAtom { predicate: lit.predicate, args });
                }
            }
            ":goal" => {
                let c = rest
                    .first()
                    .ok_or_else(|| ctx.invalid(at, "expected a goal condition"))?;
                let parsed = parse_condition(c, &ctx)?;
                for lit in &parsed.literals {
                    // Predicate and arity are checked here; object existence
                    // is a grounding-time concern.
                    validate_literal(lit, &[], dom, &ctx, c.pos(), Some(&objects))?;
                    for a in &lit.args {
                        if let Arg::Var(v) = a {
                            return Err(ctx.invalid(
                                c.pos(),
                                format!("goals must be ground, found '{v}'"),
                            ));
                        }
                    }
                }
                goal = Some(parsed);
            }
            other => return Err(ctx.invalid(at, format!("unknown section {other}"))),
        }
    }

    let domain_name =
        domain_name.ok_or_else(|| ctx.invalid((1, 1), "missing (:domain …) section"))?;
    let goal = goal.ok_or_else(|| ctx.invalid((1, 1), "missing (:goal …) section"))?;
    Ok(Problem { name, domain_name, objects, init, goal })
}

/// Durative bookkeeping predicates that stream declarations may certify even
/// though the base domain does not declare them.
fn is_bookkeeping_predicate(name: &str, dom: &Domain) -> bool {
    if matches!(name, "at_time" | "is_free") {
        return true;
    }
    let per_action = name
        .strip_prefix("update_time_")
        .or_else(|| name.strip_prefix("agent_at_time_"));
    per_action.map(|action| dom.action(action).is_some()).unwrap_or(false)
}

pub fn parse_streams(src: &SourceText, dom: &Domain) -> Result<StreamSpecSet, PddlError> {
    let ctx = Ctx { origin: &src.origin };
    let top = read_sexps(tokenize(src)?, &ctx)?;
    let mut streams: Vec<StreamSpec> = Vec::new();

    for form in &top {
        let items = form
            .as_list()
            .ok_or_else(|| ctx.invalid(form.pos(), "expected a (:stream …) form"))?;
        if items.first().and_then(|h| h.as_atom()) != Some(":stream") {
            return Err(ctx.invalid(form.pos(), "expected a (:stream …) form"));
        }
        let name = items
            .get(1)
            .and_then(|s| s.as_atom())
            .ok_or_else(|| ctx.invalid(form.pos(), "expected a stream name"))?;
        if streams.iter().any(|s| s.name == name) {
            return Err(ctx.err(
                form.pos(),
                PddlErrorKind::Duplicate { what: "stream", name: name.to_owned() },
            ));
        }
        let mut kind = None;
        let mut inputs = Vec::new();
        let mut domain_facts = Vec::new();
        let mut outputs = Vec::new();
        let mut certified = Vec::new();
        let mut generator = None;
        let mut i = 2;
        while i < items.len() {
            let kw = items[i]
                .as_atom()
                .ok_or_else(|| ctx.invalid(items[i].pos(), "expected a stream keyword"))?;
            let val = items
                .get(i + 1)
                .ok_or_else(|| ctx.invalid(items[i].pos(), format!("missing value after {kw}")))?;
            match kw {
                ":kind" => {
                    let k = val
                        .as_atom()
                        .ok_or_else(|| ctx.invalid(val.pos(), "expected eager or optimistic"))?;
                    kind = Some(match k {
                        "eager" => StreamKind::Eager,
                        "optimistic" => StreamKind::Optimistic,
                        other => {
                            return Err(ctx.invalid(val.pos(), format!("unknown kind '{other}'")))
                        }
                    });
                }
                ":inputs" => {
                    let list = val
                        .as_list()
                        .ok_or_else(|| ctx.invalid(val.pos(), ":inputs takes a list"))?;
                    inputs = parse_typed_list(list, &ctx, "input", true)?;
                }
                ":outputs" => {
                    let list = val
                        .as_list()
                        .ok_or_else(|| ctx.invalid(val.pos(), ":outputs takes a list"))?;
                    outputs = parse_typed_list(list, &ctx, "output", true)?;
                }
                ":domain" => {
                    for lit_form in literal_forms(val, &ctx)? {
                        let lit = parse_literal(lit_form, &ctx)?;
                        if lit.negated {
                            return Err(ctx.invalid(
                                lit_form.pos(),
                                "stream domain facts must be positive",
                            ));
                        }
                        domain_facts.push(lit);
                    }
                }
                ":certified" => {
                    for lit_form in literal_forms(val, &ctx)? {
                        let lit = parse_literal(lit_form, &ctx)?;
                        if lit.negated {
                            return Err(ctx.invalid(
                                lit_form.pos(),
                                "certified facts must be positive",
                            ));
                        }
                        certified.push(lit);
                    }
                }
                ":generator" => {
                    generator = Some(
                        val.as_atom()
                            .ok_or_else(|| ctx.invalid(val.pos(), "expected a generator name"))?
                            .to_owned(),
                    );
                }
                other => {
                    return Err(ctx.invalid(items[i].pos(), format!("unknown stream keyword {other}")))
                }
            }
            i += 2;
        }
        let kind = kind.ok_or_else(|| ctx.invalid(form.pos(), "missing :kind"))?;
        let generator =
            generator.ok_or_else(|| ctx.invalid(form.pos(), "missing :generator"))?;

        // Certified facts may only use known predicates; a single literal is
        // wrapped in (:certified ((p …))) lists above.
        let vars: Vec<&TypedName> = inputs.iter().chain(outputs.iter()).collect();
        for lit in domain_facts.iter().chain(certified.iter()) {
            if dom.predicate(&lit.predicate).is_none()
                && !is_bookkeeping_predicate(&lit.predicate, dom)
            {
                return Err(ctx.invalid(
                    form.pos(),
                    format!("certified fact uses undeclared predicate '{}'", lit.predicate),
                ));
            }
            for a in &lit.args {
                if let Arg::Var(v) = a {
                    if vars.iter().all(|tn| &tn.name != v) {
                        return Err(ctx.invalid(
                            form.pos(),
                            format!("variable '{v}' is neither an input nor an output"),
                        ));
                    }
                }
            }
        }
        for lit in &domain_facts {
            for a in &lit.args {
                if let Arg::Var(v) = a {
                    if inputs.iter().all(|tn| &tn.name != v) {
                        return Err(ctx.invalid(
                            form.pos(),
                            format!("domain fact variable '{v}' is not an input"),
                        ));
                    }
                }
            }
        }
        for out in &outputs {
            let used = certified.iter().any(|lit| {
                lit.args.iter().any(|a| matches!(a, Arg::Var(v) if *v == out.name))
            });
            if !used {
                return Err(ctx.invalid(
                    form.pos(),
                    format!("output '{}' does not appear in any certified fact", out.name),
                ));
            }
        }
        streams.push(StreamSpec {
            name: name.to_owned(),
            kind,
            inputs,
            domain_facts,
            outputs,
            certified,
            generator,
        });
    }
    Ok(StreamSpecSet { streams })
}

/// Accept `((p ?x) (q ?x))`, `(and (p ?x) (q ?x))`, and the bare single
/// literal `(p ?x)`.
fn literal_forms<'a>(val: &'a Sexp, ctx: &Ctx) -> Result<Vec<&'a Sexp>, PddlError> {
    let items = val
        .as_list()
        .ok_or_else(|| ctx.invalid(val.pos(), "expected a list of literals"))?;
    Ok(match items.first() {
        Some(Sexp::Atom { text, .. }) if text == "and" => items[1..].iter().collect(),
        Some(Sexp::Atom { .. }) => vec![val],
        _ => items.iter().collect(),
    })
}

use std::fmt::Write as _;

use crate::pddl::ast::*;

fn write_typed_list(out: &mut String, names: &[TypedName]) {
    let mut first = true;
    let mut i = 0;
    while i < names.len() {
        // Group consecutive entries of the same type: `a b - t`.
        let ty = &names[i].ty;
        let mut j = i;
        while j < names.len() && names[j].ty == *ty {
            if !first {
                out.push(' ');
            }
            first = false;
            out.push_str(&names[j].name);
            j += 1;
        }
        let _ = write!(out, " - {ty}");
        i = j;
    }
}

fn write_literal(out: &mut String, lit: &Literal) {
    if lit.negated {
        out.push_str("(not ");
    }
    out.push('(');
    out.push_str(&lit.predicate);
    for a in &lit.args {
        let _ = write!(out, " {a}");
    }
    out.push(')');
    if lit.negated {
        out.push(')');
    }
}

fn write_condition(out: &mut String, cond: &Condition) {
    match cond.literals.len() {
        0 => out.push_str("(and)"),
        1 => write_literal(out, &cond.literals[0]),
        _ => {
            out.push_str("(and");
            for lit in &cond.literals {
                out.push(' ');
                write_literal(out, lit);
            }
            out.push(')');
        }
    }
}

fn write_cost(out: &mut String, cost: &CostTerm) {
    out.push_str("(increase (total-cost) ");
    match cost {
        CostTerm::Const(c) => {
            let _ = write!(out, "{c}");
        }
        CostTerm::Func(name, args) => {
            out.push('(');
            out.push_str(name);
            for a in args {
                let _ = write!(out, " {a}");
            }
            out.push(')');
        }
    }
    out.push(')');
}

fn write_effect(out: &mut String, eff: &Effect) {
    let mut parts: Vec<String> = Vec::new();
    for lit in &eff.add {
        let mut s = String::new();
        write_literal(&mut s, lit);
        parts.push(s);
    }
    for lit in &eff.del {
        let mut s = String::new();
        s.push_str("(not ");
        write_literal(&mut s, lit);
        s.push(')');
        parts.push(s);
    }
    for ce in &eff.conditionals {
        let mut s = String::new();
        s.push_str("(when ");
        write_condition(&mut s, &ce.cond);
        s.push(' ');
        let branch = Effect {
            add: ce.add.clone(),
            del: ce.del.clone(),
            conditionals: Vec::new(),
            cost: ce.cost.clone(),
        };
        write_effect(&mut s, &branch);
        s.push(')');
        parts.push(s);
    }
    if let Some(cost) = &eff.cost {
        let mut s = String::new();
        write_cost(&mut s, cost);
        parts.push(s);
    }
    match parts.len() {
        0 => out.push_str("(and)"),
        1 => out.push_str(&parts[0]),
        _ => {
            out.push_str("(and");
            for p in &parts {
                out.push(' ');
                out.push_str(p);
            }
            out.push(')');
        }
    }
}

/// Canonical text form; reparses to a structurally equal [`Domain`].
pub fn print_pddl(dom: &Domain) -> SourceText {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", dom.name);
    if !dom.requirements.is_empty() {
        out.push_str("  (:requirements");
        for r in &dom.requirements {
            let _ = write!(out, " {}", r.keyword());
        }
        out.push_str(")\n");
    }
    if !dom.type_hierarchy.is_empty() {
        out.push_str("  (:types");
        for (ty, parent) in &dom.type_hierarchy {
            let _ = write!(out, " {ty} - {parent}");
        }
        out.push_str(")\n");
    }
    if !dom.constants.is_empty() {
        out.push_str("  (:constants ");
        write_typed_list(&mut out, &dom.constants);
        out.push_str(")\n");
    }
    if !dom.predicates.is_empty() {
        out.push_str("  (:predicates");
        for p in &dom.predicates {
            let _ = write!(out, "\n    ({}", p.name);
            if !p.params.is_empty() {
                out.push(' ');
                write_typed_list(&mut out, &p.params);
            }
            out.push(')');
        }
        out.push_str(")\n");
    }
    if !dom.functions.is_empty() {
        out.push_str("  (:functions");
        for f in &dom.functions {
            let _ = write!(out, "\n    ({}", f.name);
            if !f.params.is_empty() {
                out.push(' ');
                write_typed_list(&mut out, &f.params);
            }
            out.push(')');
        }
        out.push_str(")\n");
    }
    for a in &dom.actions {
        let _ = writeln!(out, "  (:action {}", a.name);
        out.push_str("    :parameters (");
        write_typed_list(&mut out, &a.params);
        out.push_str(")\n    :precondition ");
        write_condition(&mut out, &a.precondition);
        out.push_str("\n    :effect ");
        write_effect(&mut out, &a.effect);
        out.push_str(")\n");
    }
    out.push_str(")\n");
    SourceText::new(out, format!("{}.pddl", dom.name))
}

/// Canonical text form; reparses (against the same domain) to a structurally
/// equal [`Problem`].
pub fn print_problem(prob: &Problem) -> SourceText {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", prob.name);
    let _ = writeln!(out, "  (:domain {})", prob.domain_name);
    if !prob.objects.is_empty() {
        out.push_str("  (:objects ");
        write_typed_list(&mut out, &prob.objects);
        out.push_str(")\n");
    }
    out.push_str("  (:init");
    for atom in &prob.init {
        out.push_str("\n    (");
        out.push_str(&atom.predicate);
        for a in &atom.args {
            let _ = write!(out, " {a}");
        }
        out.push(')');
    }
    out.push_str(")\n  (:goal ");
    write_condition(&mut out, &prob.goal);
    out.push_str("))\n");
    SourceText::new(out, format!("{}.pddl", prob.name))
}

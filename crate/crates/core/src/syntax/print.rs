//! Canonical printing. Every printer's output parses back to an equal value.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::deps::{Dependency, Provenance, ViewSpec};
use crate::determinacy::Rewriting;
use crate::model::{Atom, Instance, SymbolKind, Term};
use crate::updates::{Condition, StepKind, UpdateProgram, UpdateStep};

fn is_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_identifier(s: &str) -> bool {
    is_word(s) && !s.starts_with(|c: char| c.is_ascii_digit())
}

fn is_number(s: &str) -> bool {
    is_word(s) && s.starts_with(|c: char| c.is_ascii_digit())
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn null(n: u32) -> String {
    format!("_n{n}")
}

/// A term inside a constraint, definition or goal.
fn rule_term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.to_string(),
        Term::Const(c) if is_number(c) => c.to_string(),
        Term::Const(c) => quote(c),
        Term::Null(n) => null(*n),
    }
}

/// A term inside a facts file.
fn fact_term(t: &Term) -> String {
    match t {
        Term::Const(c) if is_word(c) => c.to_string(),
        Term::Const(c) => quote(c),
        Term::Null(n) => null(*n),
        Term::Var(v) => format!("?{v}"),
    }
}

fn atom_with(a: &Atom, term: &dyn Fn(&Term) -> String) -> String {
    let args: Vec<String> = a.args.iter().map(term).collect();
    format!("{}({})", a.symbol, args.join(", "))
}

fn atoms_with(atoms: &[Atom], term: &dyn Fn(&Term) -> String) -> String {
    atoms.iter().map(|a| atom_with(a, term)).collect::<Vec<_>>().join(", ")
}

pub fn print_fact(a: &Atom) -> String {
    atom_with(a, &fact_term)
}

pub fn print_rule_atom(a: &Atom) -> String {
    atom_with(a, &rule_term)
}

/// `tgd ...` or `egd ...` without a terminating period.
pub fn print_dependency(d: &Dependency) -> String {
    match d {
        Dependency::Tgd(t) => {
            let mut s = String::from("tgd ");
            if !t.body().is_empty() {
                s.push_str(&atoms_with(t.body(), &rule_term));
                s.push(' ');
            }
            s.push_str("-> ");
            if !t.existentials().is_empty() {
                let ex: Vec<&str> = t.existentials().iter().map(|e| &**e).collect();
                let _ = write!(s, "exists {}: ", ex.join(", "));
            }
            s.push_str(&atoms_with(t.head(), &rule_term));
            s
        }
        Dependency::Egd(e) => format!("egd {} -> {} = {}", atoms_with(e.body(), &rule_term), e.left(), e.right()),
    }
}

/// A goal file holding `d`.
pub fn print_goal(d: &Dependency) -> String {
    format!("{}.\n", print_dependency(d))
}

pub fn print_rewriting(rw: &Rewriting) -> String {
    format!(
        "{} :- {}",
        print_rule_atom(&rw.head_atom()),
        atoms_with(rw.query.body(), &rule_term)
    )
}

pub fn print_spec(spec: &ViewSpec) -> String {
    let mut out = String::new();
    let mut section = |lines: Vec<String>| {
        if lines.is_empty() {
            return;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    };
    let decls = |schema: &crate::model::Schema| -> Vec<String> {
        schema
            .symbols()
            .iter()
            .map(|d| {
                let kw = if d.kind == SymbolKind::Database { "schema" } else { "view" };
                format!("{kw} {}/{}.", d.name, d.arity)
            })
            .collect()
    };
    section(decls(spec.db_schema()));
    section(decls(spec.view_schema()));
    section(
        spec.defs()
            .iter()
            .map(|d| {
                format!(
                    "def {} :- {}.",
                    print_rule_atom(&d.head_atom()),
                    atoms_with(d.query.body(), &rule_term)
                )
            })
            .collect(),
    );
    section(
        spec.constraints()
            .entries()
            .iter()
            .map(|(d, p)| {
                let prefix = if *p == Provenance::View { "@view" } else { "@db" };
                format!("{prefix} {}.", print_dependency(d))
            })
            .collect(),
    );
    out
}

pub fn print_facts(inst: &Instance) -> String {
    inst.iter().map(|f| format!("{}.\n", print_fact(f))).collect()
}

fn step_binders(step: &UpdateStep) -> BTreeSet<String> {
    let pattern = (step.kind() != StepKind::Insert).then(|| step.pattern());
    let positive = step.condition().iter().filter_map(|c| match c {
        Condition::Atom(a) => Some(a),
        _ => None,
    });
    pattern
        .into_iter()
        .chain(positive)
        .flat_map(|a| a.vars())
        .map(|v| v.to_string())
        .collect()
}

/// Prints a term of an update step. Bare identifiers are variables exactly
/// when some binding position of the step mentions them.
fn update_term(t: &Term, binders: &BTreeSet<String>, binding: bool) -> String {
    match t {
        Term::Var(v) if binders.contains(&**v) && is_identifier(v) && &**v != "_" => v.to_string(),
        Term::Var(v) => format!("?{v}"),
        Term::Const(c) if is_number(c) => c.to_string(),
        Term::Const(c) if !binding && is_identifier(c) && &**c != "_" && !binders.contains(&**c) => c.to_string(),
        Term::Const(c) => quote(c),
        Term::Null(n) => quote(&null(*n)),
    }
}

pub fn print_step(step: &UpdateStep) -> String {
    let binders = step_binders(step);
    let term = |t: &Term| update_term(t, &binders, false);
    let bind = |t: &Term| update_term(t, &binders, true);
    let mut s = match step.kind() {
        StepKind::Insert => format!("insert {}", atom_with(step.pattern(), &term)),
        StepKind::Delete => format!("delete {}", atom_with(step.pattern(), &bind)),
        StepKind::Replace => format!(
            "replace {} with {}",
            atom_with(step.pattern(), &bind),
            atom_with(step.replacement().expect("replace has a replacement"), &term)
        ),
    };
    if !step.condition().is_empty() {
        let conds: Vec<String> = step
            .condition()
            .iter()
            .map(|c| match c {
                Condition::Atom(a) => atom_with(a, &bind),
                Condition::Not(a) => format!("not {}", atom_with(a, &term)),
                Condition::Eq(l, r) => format!("{} = {}", term(l), term(r)),
                Condition::Neq(l, r) => format!("{} != {}", term(l), term(r)),
            })
            .collect();
        let _ = write!(s, " where {}", conds.join(", "));
    }
    s
}

pub fn print_update(u: &UpdateProgram) -> String {
    let mut out = String::from("update ");
    if let Some(n) = u.name() {
        out.push_str(n);
        out.push(' ');
    }
    out.push_str("{\n");
    for step in u.steps() {
        let _ = writeln!(out, "  {};", print_step(step));
    }
    out.push_str("}\n");
    out
}

//! Name resolution and well-formedness checks turning the syntax tree into
//! model values, with one diagnostic per problem found.

use std::collections::{BTreeMap, BTreeSet};

use super::parser::{RawAtom, RawCond, RawKind, RawStep, RawTerm, Stmt};
use super::{Diagnostic, DiagnosticKind, SourceSpan};
use crate::deps::{ConstraintSet, Dependency, Egd, Provenance, Tgd, ViewDefinition, ViewSpec};
use crate::model::{name, Atom, Cq, Instance, Name, Schema, SymbolDecl, SymbolKind, Term};
use crate::updates::{Condition, StepKind, UpdateError, UpdateProgram, UpdateStep};

/// Hands out names for `_` placeholders that clash with nothing in the
/// enclosing statement.
struct Fresh {
    used: BTreeSet<String>,
    next: usize,
}

impl Fresh {
    fn new<'a>(atoms: impl IntoIterator<Item = &'a RawAtom>) -> Self {
        let used = atoms
            .into_iter()
            .flat_map(|a| a.args.iter())
            .map(|t| t.text.clone())
            .collect();
        Fresh { used, next: 0 }
    }

    fn var(&mut self) -> Term {
        loop {
            self.next += 1;
            let cand = format!("_{}", self.next);
            if !self.used.contains(&cand) {
                self.used.insert(cand.clone());
                return Term::Var(name(&cand));
            }
        }
    }
}

fn is_var_like(t: &RawTerm) -> bool {
    matches!(t.kind, RawKind::Ident | RawKind::Var)
}

fn rule_term(t: &RawTerm, fresh: &mut Fresh) -> Term {
    match t.kind {
        RawKind::Ident if t.text == "_" => fresh.var(),
        RawKind::Ident | RawKind::Var => Term::var(&t.text),
        RawKind::Number | RawKind::Str => Term::constant(&t.text),
    }
}

fn rule_atom(a: &RawAtom, fresh: &mut Fresh) -> Atom {
    Atom::new(&a.symbol, a.args.iter().map(|t| rule_term(t, fresh)).collect())
}

/// Span of the first occurrence of variable `v` among `atoms`.
fn var_span<'a>(atoms: impl IntoIterator<Item = &'a RawAtom>, v: &str) -> Option<SourceSpan> {
    atoms
        .into_iter()
        .flat_map(|a| a.args.iter())
        .find(|t| is_var_like(t) && t.text == v)
        .map(|t| t.span.clone())
}

#[derive(Default)]
pub(crate) struct Elab {
    pub diags: Vec<Diagnostic>,
}

impl Elab {
    fn report(&mut self, kind: DiagnosticKind, message: impl Into<String>, span: &SourceSpan) {
        self.diags.push(Diagnostic::new(kind, message, span.clone()));
    }

    fn check_atom<'s>(&mut self, schema: &'s Schema, a: &RawAtom) -> Option<&'s SymbolDecl> {
        let Some(decl) = schema.get(&a.symbol) else {
            self.report(
                DiagnosticKind::UnknownSymbol,
                format!("unknown symbol `{}`", a.symbol),
                &a.symbol_span,
            );
            return None;
        };
        if decl.arity != a.args.len() {
            self.report(
                DiagnosticKind::ArityMismatch,
                format!("`{}` expects {} argument(s), got {}", a.symbol, decl.arity, a.args.len()),
                &a.symbol_span,
            );
            return None;
        }
        Some(decl)
    }

    /// The provenance of a user constraint: the explicit prefix if given,
    /// otherwise the kind of the symbols it mentions, which must agree.
    fn provenance(&mut self, explicit: &Option<(Provenance, SourceSpan)>, atoms: &[&RawAtom], schema: &Schema) -> Provenance {
        let kinds: Vec<(SymbolKind, &RawAtom)> = atoms
            .iter()
            .filter_map(|a| schema.get(&a.symbol).map(|d| (d.kind, *a)))
            .collect();
        let home = |p: Provenance| match p {
            Provenance::View => SymbolKind::View,
            _ => SymbolKind::Database,
        };
        let prov = match explicit {
            Some((p, _)) => *p,
            None => match kinds.first() {
                Some((SymbolKind::View, _)) => Provenance::View,
                _ => Provenance::Database,
            },
        };
        if let Some((kind, a)) = kinds.iter().find(|(k, _)| *k != home(prov)) {
            let what = if *kind == SymbolKind::View { "view" } else { "database" };
            let msg = match explicit {
                Some(_) => format!(
                    "`@{}` constraint mentions {what} symbol `{}`",
                    if prov == Provenance::View { "view" } else { "db" },
                    a.symbol
                ),
                None => format!("constraint mixes database and view symbols; `{}` is a {what} symbol", a.symbol),
            };
            self.report(DiagnosticKind::MisplacedConstraint, msg, &a.symbol_span);
        }
        prov
    }

    fn tgd(&mut self, body: &[RawAtom], exists: &Option<Vec<(String, SourceSpan)>>, head: &[RawAtom], at: &SourceSpan) -> Option<Tgd> {
        let mut fresh = Fresh::new(body.iter().chain(head));
        let b: Vec<Atom> = body.iter().map(|a| rule_atom(a, &mut fresh)).collect();
        let h: Vec<Atom> = head.iter().map(|a| rule_atom(a, &mut fresh)).collect();
        let body_vars: BTreeSet<&Name> = b.iter().flat_map(Atom::vars).collect();
        let head_vars: BTreeSet<&Name> = h.iter().flat_map(Atom::vars).collect();
        let before = self.diags.len();
        let result = match exists {
            Some(list) => {
                let mut ex: Vec<Name> = Vec::new();
                for (v, span) in list {
                    let v = name(v);
                    if ex.contains(&v) {
                        self.report(DiagnosticKind::Invalid, format!("existential `{v}` is listed twice"), span);
                    } else if body_vars.contains(&v) {
                        self.report(DiagnosticKind::Invalid, format!("existential `{v}` also occurs in the body"), span);
                    } else if !head_vars.contains(&v) {
                        self.report(DiagnosticKind::Invalid, format!("existential `{v}` does not occur in the head"), span);
                    }
                    ex.push(v);
                }
                for v in &head_vars {
                    if !body_vars.contains(v) && !ex.contains(v) {
                        let span = var_span(head, v).unwrap_or_else(|| at.clone());
                        self.report(
                            DiagnosticKind::UnsafeRule,
                            format!("head variable `{v}` is neither in the body nor existential"),
                            &span,
                        );
                    }
                }
                Tgd::new(b.clone(), h.clone(), ex)
            }
            None => Tgd::infer(b.clone(), h.clone()),
        };
        match result {
            Ok(t) if self.diags.len() == before => Some(t),
            Ok(_) => None,
            Err(e) => {
                if self.diags.len() == before {
                    self.report(DiagnosticKind::Invalid, e.to_string(), at);
                }
                None
            }
        }
    }

    fn egd(&mut self, body: &[RawAtom], left: &RawTerm, right: &RawTerm, at: &SourceSpan) -> Option<Egd> {
        let mut fresh = Fresh::new(body);
        let b: Vec<Atom> = body.iter().map(|a| rule_atom(a, &mut fresh)).collect();
        let body_vars: BTreeSet<&Name> = b.iter().flat_map(Atom::vars).collect();
        let mut ok = true;
        for side in [left, right] {
            if !is_var_like(side) || side.text == "_" {
                self.report(DiagnosticKind::Invalid, "both sides of an egd must be variables", &side.span);
                ok = false;
            } else if !body_vars.contains(&name(&side.text)) {
                self.report(
                    DiagnosticKind::UnsafeRule,
                    format!("equated variable `{}` does not occur in the body", side.text),
                    &side.span,
                );
                ok = false;
            }
        }
        if !ok {
            return None;
        }
        match Egd::new(b, name(&left.text), name(&right.text)) {
            Ok(e) => Some(e),
            Err(e) => {
                self.report(DiagnosticKind::Invalid, e.to_string(), at);
                None
            }
        }
    }

    pub fn spec(&mut self, stmts: &[Stmt]) -> Option<ViewSpec> {
        let mut decls: Vec<SymbolDecl> = Vec::new();
        let mut decl_spans: BTreeMap<Name, SourceSpan> = BTreeMap::new();
        for s in stmts {
            if let Stmt::Decl { kind, items } = s {
                for d in items {
                    let n = name(&d.name);
                    if decl_spans.contains_key(&n) {
                        self.report(
                            DiagnosticKind::DuplicateDeclaration,
                            format!("symbol `{}` is declared more than once", d.name),
                            &d.span,
                        );
                        continue;
                    }
                    decl_spans.insert(n.clone(), d.span.clone());
                    decls.push(SymbolDecl {
                        name: n,
                        arity: d.arity,
                        kind: *kind,
                    });
                }
            }
        }
        let all = Schema::new(decls).expect("duplicates filtered");
        let db = all.filter(|d| d.kind == SymbolKind::Database);
        let views = all.filter(|d| d.kind == SymbolKind::View);

        let mut defs: Vec<ViewDefinition> = Vec::new();
        let mut defined: BTreeSet<Name> = BTreeSet::new();
        let mut cs = ConstraintSet::new();
        for s in stmts {
            match s {
                Stmt::Decl { .. } => {}
                Stmt::Def { head, body } => {
                    let before = self.diags.len();
                    if let Some(d) = self.check_atom(&all, head) {
                        if d.kind != SymbolKind::View {
                            self.report(
                                DiagnosticKind::Invalid,
                                format!("`{}` is a database symbol; only view symbols are defined", head.symbol),
                                &head.symbol_span,
                            );
                        }
                    }
                    for a in body {
                        if let Some(d) = self.check_atom(&all, a) {
                            if d.kind == SymbolKind::View {
                                self.report(
                                    DiagnosticKind::Invalid,
                                    format!("definition bodies range over database symbols; `{}` is a view symbol", a.symbol),
                                    &a.symbol_span,
                                );
                            }
                        }
                    }
                    let mut fresh = Fresh::new(body.iter().chain([head]));
                    let b: Vec<Atom> = body.iter().map(|a| rule_atom(a, &mut fresh)).collect();
                    let body_vars: BTreeSet<&Name> = b.iter().flat_map(Atom::vars).collect();
                    let mut h = Vec::new();
                    for t in &head.args {
                        let term = rule_term(t, &mut fresh);
                        if let Term::Var(v) = &term {
                            if !body_vars.contains(v) {
                                self.report(
                                    DiagnosticKind::UnsafeRule,
                                    format!("head variable `{}` does not occur in the body", t.text),
                                    &t.span,
                                );
                            }
                        }
                        h.push(term);
                    }
                    let sym = name(&head.symbol);
                    if !defined.insert(sym.clone()) {
                        self.report(
                            DiagnosticKind::DuplicateDefinition,
                            format!("view `{}` is defined more than once", head.symbol),
                            &head.symbol_span,
                        );
                    }
                    if self.diags.len() == before {
                        match Cq::new(h, b) {
                            Ok(query) => defs.push(ViewDefinition { symbol: sym, query }),
                            Err(e) => self.report(DiagnosticKind::Invalid, e.to_string(), &head.symbol_span),
                        }
                    }
                }
                Stmt::Tgd {
                    keyword,
                    provenance,
                    body,
                    exists,
                    head,
                } => {
                    let before = self.diags.len();
                    for a in body.iter().chain(head) {
                        self.check_atom(&all, a);
                    }
                    let atoms: Vec<&RawAtom> = body.iter().chain(head).collect();
                    let prov = self.provenance(provenance, &atoms, &all);
                    let tgd = self.tgd(body, exists, head, keyword);
                    if let (Some(t), true) = (tgd, self.diags.len() == before) {
                        cs.push(t, prov);
                    }
                }
                Stmt::Egd {
                    keyword,
                    provenance,
                    body,
                    left,
                    right,
                } => {
                    let before = self.diags.len();
                    for a in body {
                        self.check_atom(&all, a);
                    }
                    let atoms: Vec<&RawAtom> = body.iter().collect();
                    let prov = self.provenance(provenance, &atoms, &all);
                    let egd = self.egd(body, left, right, keyword);
                    if let (Some(e), true) = (egd, self.diags.len() == before) {
                        cs.push(e, prov);
                    }
                }
                Stmt::Fact(a) => self.report(
                    DiagnosticKind::Syntax,
                    "facts belong in a facts file, not in a specification",
                    &a.symbol_span,
                ),
                Stmt::Update { keyword, .. } => self.report(
                    DiagnosticKind::Syntax,
                    "updates belong in an update file, not in a specification",
                    keyword,
                ),
            }
        }
        for v in views.symbols() {
            if !defined.contains(&v.name) {
                self.report(
                    DiagnosticKind::MissingDefinition,
                    format!("view `{}` has no definition", v.name),
                    &decl_spans[&v.name],
                );
            }
        }
        if !self.diags.is_empty() {
            return None;
        }
        match ViewSpec::new(db, views, defs, cs) {
            Ok(spec) => Some(spec),
            Err(e) => {
                self.report(DiagnosticKind::Invalid, e.to_string(), &SourceSpan::new(1, 1, 1));
                None
            }
        }
    }

    pub fn goal(&mut self, stmts: &[Stmt], schema: &Schema) -> Option<Dependency> {
        let [stmt] = stmts else {
            let span = match stmts.get(1) {
                Some(s) => stmt_span(s),
                None => SourceSpan::new(1, 1, 1),
            };
            self.report(DiagnosticKind::Syntax, "a goal file holds exactly one tgd or egd", &span);
            return None;
        };
        match stmt {
            Stmt::Tgd {
                keyword,
                provenance,
                body,
                exists,
                head,
            } => {
                if let Some((_, span)) = provenance {
                    self.report(DiagnosticKind::Syntax, "goals take no provenance prefix", span);
                }
                for a in body.iter().chain(head) {
                    self.check_atom(schema, a);
                }
                let t = self.tgd(body, exists, head, keyword)?;
                self.diags.is_empty().then(|| t.into())
            }
            Stmt::Egd {
                keyword,
                provenance,
                body,
                left,
                right,
            } => {
                if let Some((_, span)) = provenance {
                    self.report(DiagnosticKind::Syntax, "goals take no provenance prefix", span);
                }
                for a in body {
                    self.check_atom(schema, a);
                }
                let e = self.egd(body, left, right, keyword)?;
                self.diags.is_empty().then(|| e.into())
            }
            other => {
                self.report(DiagnosticKind::Syntax, "expected a tgd or egd goal", &stmt_span(other));
                None
            }
        }
    }

    pub fn facts(&mut self, stmts: &[Stmt], schema: &Schema) -> Option<Instance> {
        let mut facts = Vec::new();
        for s in stmts {
            let Stmt::Fact(a) = s else {
                self.report(DiagnosticKind::Syntax, "only facts are allowed here", &stmt_span(s));
                continue;
            };
            let known = self.check_atom(schema, a).is_some();
            let mut args = Vec::new();
            for t in &a.args {
                if t.kind == RawKind::Var {
                    self.report(
                        DiagnosticKind::NonGroundFact,
                        format!("`?{}` is a variable; facts must be ground", t.text),
                        &t.span,
                    );
                }
                args.push(Term::constant(&t.text));
            }
            if known {
                facts.push(Atom::new(&a.symbol, args));
            }
        }
        if !self.diags.is_empty() {
            return None;
        }
        Some(Instance::from_facts(schema.clone(), facts).expect("facts checked against the schema"))
    }

    pub fn update(&mut self, stmts: &[Stmt], schema: &Schema) -> Option<UpdateProgram> {
        let mut found = None;
        for s in stmts {
            match s {
                Stmt::Update { .. } if found.is_none() => found = Some(s),
                Stmt::Update { keyword, .. } => {
                    self.report(DiagnosticKind::Syntax, "an update file holds exactly one update", keyword)
                }
                other => self.report(DiagnosticKind::Syntax, "expected `update`", &stmt_span(other)),
            }
        }
        let Some(Stmt::Update { keyword, name: n, steps }) = found else {
            if self.diags.is_empty() {
                self.report(DiagnosticKind::Syntax, "expected `update`", &SourceSpan::new(1, 1, 1));
            }
            return None;
        };
        let mut out = Vec::new();
        for (i, raw) in steps.iter().enumerate() {
            if let Some(step) = self.step(i + 1, raw, schema) {
                out.push(step);
            }
        }
        if !self.diags.is_empty() {
            return None;
        }
        match UpdateProgram::new(n.as_deref().map(name), out) {
            Ok(p) => Some(p),
            Err(e) => {
                self.report(DiagnosticKind::Invalid, e.to_string(), keyword);
                None
            }
        }
    }

    fn step(&mut self, index: usize, raw: &RawStep, schema: &Schema) -> Option<UpdateStep> {
        let before = self.diags.len();
        for a in raw_step_atoms(raw) {
            if let Some(d) = self.check_atom(schema, a) {
                if d.kind != SymbolKind::View {
                    self.report(
                        DiagnosticKind::Invalid,
                        format!("updates range over view symbols; `{}` is a database symbol", a.symbol),
                        &a.symbol_span,
                    );
                }
            }
        }
        let bound = binding_names(raw);
        let mut fresh = Fresh::new(raw_step_atoms(raw));
        for c in &raw.condition {
            if let RawCond::Eq(l, r) | RawCond::Neq(l, r) = c {
                fresh.used.insert(l.text.clone());
                fresh.used.insert(r.text.clone());
            }
        }
        let mut term = |t: &RawTerm| match t.kind {
            RawKind::Ident if t.text == "_" => fresh.var(),
            RawKind::Ident if bound.contains(&t.text) => Term::var(&t.text),
            RawKind::Var => Term::var(&t.text),
            RawKind::Ident | RawKind::Number | RawKind::Str => Term::constant(&t.text),
        };
        let atom = |a: &RawAtom, term: &mut dyn FnMut(&RawTerm) -> Term| {
            Atom::new(&a.symbol, a.args.iter().map(&mut *term).collect())
        };
        let pattern = atom(&raw.pattern, &mut term);
        let replacement = raw.replacement.as_ref().map(|r| atom(r, &mut term));
        let condition: Vec<Condition> = raw
            .condition
            .iter()
            .map(|c| match c {
                RawCond::Atom(a) => Condition::Atom(atom(a, &mut term)),
                RawCond::Not(a) => Condition::Not(atom(a, &mut term)),
                RawCond::Eq(l, r) => Condition::Eq(term(l), term(r)),
                RawCond::Neq(l, r) => Condition::Neq(term(l), term(r)),
            })
            .collect();
        if self.diags.len() != before {
            return None;
        }
        match UpdateStep::new(index, raw.kind, pattern, replacement, condition) {
            Ok(s) => Some(s),
            Err(e) => {
                let span = match &e {
                    UpdateError::UnsafeVariable { var, .. } => step_var_span(raw, var),
                    UpdateError::NonGroundInsert { .. } => raw
                        .pattern
                        .args
                        .iter()
                        .find(|t| t.kind == RawKind::Var || t.text == "_")
                        .map(|t| t.span.clone()),
                    UpdateError::ReplacementArity { .. } => raw.replacement.as_ref().map(|r| r.symbol_span.clone()),
                    _ => None,
                };
                let kind = match e {
                    UpdateError::ReplacementArity { .. } => DiagnosticKind::ArityMismatch,
                    UpdateError::UnsafeVariable { .. } | UpdateError::NonGroundInsert { .. } => {
                        DiagnosticKind::UnsafeUpdate
                    }
                    _ => DiagnosticKind::Invalid,
                };
                self.report(kind, e.to_string(), &span.unwrap_or_else(|| raw.keyword.clone()));
                None
            }
        }
    }
}

fn raw_step_atoms(raw: &RawStep) -> impl Iterator<Item = &RawAtom> {
    std::iter::once(&raw.pattern)
        .chain(raw.replacement.iter())
        .chain(raw.condition.iter().filter_map(|c| match c {
            RawCond::Atom(a) | RawCond::Not(a) => Some(a),
            _ => None,
        }))
}

/// Identifiers occurring where matching binds them: the pattern of a delete
/// or replace and the positive condition atoms. Elsewhere in the step an
/// identifier outside this set reads as a constant.
pub(crate) fn binding_names(raw: &RawStep) -> BTreeSet<String> {
    let pattern = (raw.kind != StepKind::Insert).then_some(&raw.pattern);
    let positive = raw.condition.iter().filter_map(|c| match c {
        RawCond::Atom(a) => Some(a),
        _ => None,
    });
    pattern
        .into_iter()
        .chain(positive)
        .flat_map(|a| a.args.iter())
        .filter(|t| is_var_like(t) && t.text != "_")
        .map(|t| t.text.clone())
        .collect()
}

fn step_var_span(raw: &RawStep, var: &str) -> Option<SourceSpan> {
    let cond_terms = raw.condition.iter().flat_map(|c| match c {
        RawCond::Eq(l, r) | RawCond::Neq(l, r) => vec![l, r],
        _ => vec![],
    });
    raw_step_atoms(raw)
        .flat_map(|a| a.args.iter())
        .chain(cond_terms)
        .find(|t| is_var_like(t) && t.text == var)
        .map(|t| t.span.clone())
}

fn stmt_span(s: &Stmt) -> SourceSpan {
    match s {
        Stmt::Decl { items, .. } => items[0].span.clone(),
        Stmt::Def { head, .. } => head.symbol_span.clone(),
        Stmt::Tgd { keyword, .. } | Stmt::Egd { keyword, .. } | Stmt::Update { keyword, .. } => keyword.clone(),
        Stmt::Fact(a) => a.symbol_span.clone(),
    }
}

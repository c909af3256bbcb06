//! View updates: transactions of conditional insertions, deletions and
//! replacements over view symbols, and their translation onto the database
//! through an invertible view.
//!
//! For an invertible view the translation of `u` at `I` is forced: the only
//! candidate is the rewriting-reconstructed preimage of `u(f(I))`, so
//! translatability reduces to checking that candidate.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;

use crate::chase::{chase, ChaseOutcome};
use crate::deps::{ConstraintSet, Dependency, Provenance, Tgd, ViewSpec};
use crate::determinacy::{is_invertible, primed, reconstruct, synthesize_rewriting, Rewriting};
use crate::implication::{chase_entails, Conclusion};
use crate::matcher::{self, Binding};
use crate::model::{diff, name, Atom, GroundDelta, Instance, ModelError, Name, Schema, SymbolDecl, SymbolKind, Term};
use crate::options::{Options, Tri};
use crate::oracle::{candidate_facts, domain_with_fresh, ModelEnumerator};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UpdateError {
    #[error("an update needs at least one step")]
    EmptyProgram,
    #[error("step {step}: replace needs a replacement atom")]
    MissingReplacement { step: usize },
    #[error("step {step}: only replace takes a replacement atom")]
    UnexpectedReplacement { step: usize },
    #[error("step {step}: replacement arity {found} differs from pattern arity {expected}")]
    ReplacementArity { step: usize, expected: usize, found: usize },
    #[error("step {step}: variable `{var}` is not bound by the pattern or a condition atom")]
    UnsafeVariable { step: usize, var: String },
    #[error("step {step}: inserted atom {atom} is not ground after binding the condition")]
    NonGroundInsert { step: usize, atom: String },
    #[error("`{0}` is not a view symbol")]
    NotAViewSymbol(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("view state contains labeled nulls")]
    NonGroundState,
    #[error("the view is not known to be invertible (verdict: {0:?})")]
    NotInvertible(Tri),
    #[error("no rewriting of `{0}` found within the atom bound")]
    NoRewriting(String),
    #[error("the database instance violates the constraints")]
    InconsistentInstance,
    #[error("the update is not translatable at this instance: {0}")]
    NotTranslatable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Insert,
    Delete,
    Replace,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    Atom(Atom),
    Eq(Term, Term),
    Neq(Term, Term),
    /// Holds when no fact matches; variables occurring only here are local.
    Not(Atom),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UpdateStep {
    kind: StepKind,
    pattern: Atom,
    replacement: Option<Atom>,
    condition: Vec<Condition>,
}

fn term_vars(t: &Term) -> Option<&Name> {
    match t {
        Term::Var(v) => Some(v),
        _ => None,
    }
}

impl UpdateStep {
    /// Validates shape and safety; `index` is only used in error messages.
    pub fn new(
        index: usize,
        kind: StepKind,
        pattern: Atom,
        replacement: Option<Atom>,
        condition: Vec<Condition>,
    ) -> Result<Self, UpdateError> {
        match (kind, &replacement) {
            (StepKind::Replace, None) => return Err(UpdateError::MissingReplacement { step: index }),
            (StepKind::Replace, Some(r)) if r.arity() != pattern.arity() => {
                return Err(UpdateError::ReplacementArity {
                    step: index,
                    expected: pattern.arity(),
                    found: r.arity(),
                })
            }
            (StepKind::Insert | StepKind::Delete, Some(_)) => {
                return Err(UpdateError::UnexpectedReplacement { step: index })
            }
            _ => {}
        }
        let step = UpdateStep {
            kind,
            pattern,
            replacement,
            condition,
        };
        let bound = step.bound_vars();
        if step.kind == StepKind::Insert && step.pattern.vars().any(|v| !bound.contains(v)) {
            return Err(UpdateError::NonGroundInsert {
                step: index,
                atom: step.pattern.to_string(),
            });
        }
        let mut must_bind: Vec<&Name> = step.replacement.iter().flat_map(Atom::vars).collect();
        for c in &step.condition {
            if let Condition::Eq(a, b) | Condition::Neq(a, b) = c {
                must_bind.extend(term_vars(a));
                must_bind.extend(term_vars(b));
            }
        }
        if let Some(v) = must_bind.into_iter().find(|v| !bound.contains(*v)) {
            return Err(UpdateError::UnsafeVariable {
                step: index,
                var: v.to_string(),
            });
        }
        Ok(step)
    }

    pub fn kind(&self) -> StepKind {
        self.kind
    }

    pub fn pattern(&self) -> &Atom {
        &self.pattern
    }

    pub fn replacement(&self) -> Option<&Atom> {
        self.replacement.as_ref()
    }

    pub fn condition(&self) -> &[Condition] {
        &self.condition
    }

    fn positive_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.condition.iter().filter_map(|c| match c {
            Condition::Atom(a) => Some(a),
            _ => None,
        })
    }

    /// Variables bound by matching the step against a state.
    fn bound_vars(&self) -> BTreeSet<Name> {
        let pattern = (self.kind != StepKind::Insert).then_some(&self.pattern);
        pattern
            .into_iter()
            .chain(self.positive_atoms())
            .flat_map(Atom::vars)
            .cloned()
            .collect()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        let negated = self.condition.iter().filter_map(|c| match c {
            Condition::Not(a) => Some(a),
            _ => None,
        });
        std::iter::once(&self.pattern)
            .chain(self.replacement.iter())
            .chain(self.positive_atoms())
            .chain(negated)
    }

    fn constants(&self) -> BTreeSet<Name> {
        let mut terms: Vec<&Term> = self.atoms().flat_map(|a| a.args.iter()).collect();
        for c in &self.condition {
            if let Condition::Eq(a, b) | Condition::Neq(a, b) = c {
                terms.push(a);
                terms.push(b);
            }
        }
        terms
            .into_iter()
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                _ => None,
            })
            .collect()
    }

    /// Every binding under which the step applies to `state`.
    fn matches(&self, state: &Instance) -> Vec<Binding> {
        let mut atoms: Vec<Atom> = Vec::new();
        if self.kind != StepKind::Insert {
            atoms.push(self.pattern.clone());
        }
        atoms.extend(self.positive_atoms().cloned());
        matcher::all_matches(&atoms, state, &Binding::new(), Term::is_var)
            .into_iter()
            .filter(|b| {
                self.condition.iter().all(|c| match c {
                    Condition::Atom(_) => true,
                    Condition::Eq(x, y) => matcher::resolve(b, x) == matcher::resolve(b, y),
                    Condition::Neq(x, y) => matcher::resolve(b, x) != matcher::resolve(b, y),
                    Condition::Not(a) => {
                        matcher::first_match(std::slice::from_ref(a), state, b, Term::is_var).is_none()
                    }
                })
            })
            .collect()
    }

    fn apply(&self, index: usize, state: &Instance) -> Result<Instance, UpdateError> {
        let matches = self.matches(state);
        let mut out = state.clone();
        let mut added = Vec::new();
        for b in &matches {
            match self.kind {
                StepKind::Insert => added.push(matcher::resolve_atom(b, &self.pattern)),
                StepKind::Delete => {
                    out.remove(&matcher::resolve_atom(b, &self.pattern));
                }
                StepKind::Replace => {
                    out.remove(&matcher::resolve_atom(b, &self.pattern));
                    let r = self.replacement.as_ref().expect("validated");
                    added.push(matcher::resolve_atom(b, r));
                }
            }
        }
        for f in added {
            if !f.is_ground() {
                return Err(UpdateError::NonGroundInsert {
                    step: index,
                    atom: f.to_string(),
                });
            }
            out.insert(f)?;
        }
        Ok(out)
    }
}

/// A transaction: steps run in order on the evolving state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UpdateProgram {
    name: Option<Name>,
    steps: Vec<UpdateStep>,
}

impl UpdateProgram {
    pub fn new(name: Option<Name>, steps: Vec<UpdateStep>) -> Result<Self, UpdateError> {
        if steps.is_empty() {
            return Err(UpdateError::EmptyProgram);
        }
        Ok(UpdateProgram { name, steps })
    }

    pub fn name(&self) -> Option<&Name> {
        self.name.as_ref()
    }

    pub fn steps(&self) -> &[UpdateStep] {
        &self.steps
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.steps.iter().flat_map(UpdateStep::constants).collect()
    }

    /// Checks every atom against the view schema.
    pub fn check_schema(&self, view_schema: &Schema) -> Result<(), UpdateError> {
        for a in self.steps.iter().flat_map(UpdateStep::atoms) {
            if !view_schema.contains(&a.symbol) {
                return Err(UpdateError::NotAViewSymbol(a.symbol.to_string()));
            }
            view_schema.check_atom(a)?;
        }
        Ok(())
    }

    /// Only insertions, so the post-state grows monotonically.
    pub fn is_insert_only(&self) -> bool {
        self.steps.iter().all(|s| s.kind == StepKind::Insert)
    }
}

/// Runs `u` on a ground view state. Each step evaluates its condition on the
/// state left by the previous step.
pub fn apply(u: &UpdateProgram, view_state: &Instance) -> Result<Instance, UpdateError> {
    if view_state.has_nulls() {
        return Err(UpdateError::NonGroundState);
    }
    let mut state = view_state.clone();
    for (i, step) in u.steps.iter().enumerate() {
        state = step.apply(i + 1, &state)?;
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    /// The updated view state violates the view constraints, or no database
    /// state satisfying the database constraints reconstructs it.
    InconsistentPostState,
    /// The updated view state is consistent but outside the image of the view.
    NoPreimage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranslatabilityVerdict {
    Translatable(GroundDelta),
    NotTranslatable { reason: Reason, detail: String },
    Unknown(String),
}

impl TranslatabilityVerdict {
    pub fn tri(&self) -> Tri {
        match self {
            TranslatabilityVerdict::Translatable(_) => Tri::Yes,
            TranslatabilityVerdict::NotTranslatable { .. } => Tri::No,
            TranslatabilityVerdict::Unknown(_) => Tri::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Everywhere {
    Yes,
    /// A consistent database state at which the update fails, with its view.
    No { database: Instance, view: Instance, reason: Reason },
    Unknown(String),
}

impl Everywhere {
    pub fn tri(&self) -> Tri {
        match self {
            Everywhere::Yes => Tri::Yes,
            Everywhere::No { .. } => Tri::No,
            Everywhere::Unknown(_) => Tri::Unknown,
        }
    }
}

/// An invertible view with one rewriting per database symbol, ready to
/// translate updates.
#[derive(Debug, Clone)]
pub struct Translator {
    spec: ViewSpec,
    opts: Options,
    rewritings: Vec<Rewriting>,
}

impl Translator {
    /// Fails unless the view is invertible and every database symbol has a
    /// rewriting within `opts.max_atoms` atoms.
    pub fn new(spec: &ViewSpec, opts: &Options) -> Result<Self, UpdateError> {
        let inv = is_invertible(spec, opts);
        if inv.invertible != Tri::Yes {
            return Err(UpdateError::NotInvertible(inv.invertible));
        }
        let mut rewritings = Vec::new();
        for s in spec.db_schema().symbols() {
            match synthesize_rewriting(spec, &s.name, opts).expect("database symbol") {
                Some(rw) => rewritings.push(rw),
                None => return Err(UpdateError::NoRewriting(s.name.to_string())),
            }
        }
        Ok(Translator {
            spec: spec.clone(),
            opts: *opts,
            rewritings,
        })
    }

    pub fn spec(&self) -> &ViewSpec {
        &self.spec
    }

    pub fn rewritings(&self) -> &[Rewriting] {
        &self.rewritings
    }

    pub fn translatable_at(&self, u: &UpdateProgram, db: &Instance) -> Result<TranslatabilityVerdict, UpdateError> {
        u.check_schema(self.spec.view_schema())?;
        if db.has_nulls() || !self.spec.is_consistent(db) {
            return Err(UpdateError::InconsistentInstance);
        }
        let post = apply(u, &self.spec.view_of(db))?;
        Ok(self.translate_state(db, &post))
    }

    fn translate_state(&self, db: &Instance, post: &Instance) -> TranslatabilityVerdict {
        let not = |reason, detail: String| TranslatabilityVerdict::NotTranslatable { reason, detail };
        if let Some(d) = self.spec.view_constraints().deps().find(|d| !d.is_satisfied_by(post)) {
            return not(Reason::InconsistentPostState, format!("updated view violates {d}"));
        }
        let candidate = reconstruct(self.spec.db_schema(), &self.rewritings, post);
        let chased = chase(&candidate, &self.spec.db_constraints(), self.opts.budget).expect("schema checked");
        let rebuilt = match chased.outcome {
            ChaseOutcome::Success(i) => i,
            ChaseOutcome::EgdFailure { left, right, .. } => {
                return not(
                    Reason::InconsistentPostState,
                    format!("reconstructed database would need {left} = {right}"),
                )
            }
            ChaseOutcome::BudgetExhausted { steps, .. } => {
                return TranslatabilityVerdict::Unknown(format!("chase stopped after {steps} steps"))
            }
        };
        if rebuilt.has_nulls() {
            return not(Reason::NoPreimage, "reconstruction leaves unknown values".into());
        }
        let image = self.spec.view_of(&rebuilt);
        if image.facts() != post.facts() {
            return not(Reason::NoPreimage, format!("reconstruction has view {image}, not {post}"));
        }
        TranslatabilityVerdict::Translatable(diff(db, &rebuilt))
    }

    /// The translation; an error unless `translatable_at` says translatable.
    pub fn translate(&self, u: &UpdateProgram, db: &Instance) -> Result<GroundDelta, UpdateError> {
        match self.translatable_at(u, db)? {
            TranslatabilityVerdict::Translatable(d) => Ok(d),
            TranslatabilityVerdict::NotTranslatable { detail, .. } => Err(UpdateError::NotTranslatable(detail)),
            TranslatabilityVerdict::Unknown(why) => Err(UpdateError::NotTranslatable(why)),
        }
    }

    /// Whether `u` is translatable at every consistent database state.
    pub fn translatable_everywhere(&self, u: &UpdateProgram) -> Result<Everywhere, UpdateError> {
        u.check_schema(self.spec.view_schema())?;
        let encoded = if u.is_insert_only() {
            Some(Encoding::new(self, u).check())
        } else {
            None
        };
        if encoded == Some(Tri::Yes) {
            return Ok(Everywhere::Yes);
        }
        if let Some(no) = self.search_failure(u)? {
            return Ok(no);
        }
        Ok(Everywhere::Unknown(match encoded {
            None => "deletions and replacements are outside the implication encoding; \
                     no failing state found by bounded search"
                .into(),
            Some(_) => "implication check inconclusive; no failing state found by bounded search".into(),
        }))
    }

    /// Bounded search over consistent database states for one where `u`
    /// cannot be translated.
    fn search_failure(&self, u: &UpdateProgram) -> Result<Option<Everywhere>, UpdateError> {
        let mut consts = self.spec.constants();
        consts.extend(u.constants());
        let domain = domain_with_fresh(&consts, self.opts.domain_bound);
        let states = ModelEnumerator::new(
            &self.spec.db_constraints(),
            Instance::empty(self.spec.db_schema().clone()),
            candidate_facts(self.spec.db_schema(), &domain),
        )
        .with_limit(self.opts.search_limit);
        let sigma_v = self.spec.view_constraints();
        let mut seen = HashSet::new();
        for db in states {
            let view = self.spec.view_of(&db);
            if !sigma_v.is_satisfied_by(&view) || !seen.insert(view.facts().clone()) {
                continue;
            }
            let post = apply(u, &view)?;
            if let TranslatabilityVerdict::NotTranslatable { reason, .. } = self.translate_state(&db, &post) {
                return Ok(Some(Everywhere::No {
                    database: db,
                    view,
                    reason,
                }));
            }
        }
        Ok(None)
    }
}

pub fn translatable_at(
    spec: &ViewSpec,
    u: &UpdateProgram,
    db: &Instance,
    opts: &Options,
) -> Result<TranslatabilityVerdict, UpdateError> {
    Translator::new(spec, opts)?.translatable_at(u, db)
}

pub fn translate(spec: &ViewSpec, u: &UpdateProgram, db: &Instance, opts: &Options) -> Result<GroundDelta, UpdateError> {
    Translator::new(spec, opts)?.translate(u, db)
}

pub fn translatable_everywhere(spec: &ViewSpec, u: &UpdateProgram, opts: &Options) -> Result<Everywhere, UpdateError> {
    Translator::new(spec, opts)?.translatable_everywhere(u)
}

/// Where an atom of the encoding lives: the view after `j` steps, or the
/// reconstructed post-update database.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag {
    Level(usize),
    Post,
}

#[derive(Debug, Clone)]
struct Tagged {
    atom: Atom,
    tag: Tag,
}

#[derive(Debug, Clone)]
struct Guard {
    level: usize,
    cond: Condition,
    /// Variables local to a negated atom.
    local: BTreeSet<Name>,
}

#[derive(Debug, Clone, Default)]
struct Case {
    subst: BTreeMap<Name, Term>,
    kept: Vec<Tagged>,
    guards: Vec<Guard>,
}

impl Case {
    fn walk(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Term::Var(v) = &cur {
            match self.subst.get(v) {
                Some(next) => cur = next.clone(),
                None => break,
            }
        }
        cur
    }

    fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let (a, b) = (self.walk(a), self.walk(b));
        match (&a, &b) {
            _ if a == b => true,
            (Term::Var(v), _) => {
                self.subst.insert(v.clone(), b);
                true
            }
            (_, Term::Var(v)) => {
                self.subst.insert(v.clone(), a);
                true
            }
            _ => false,
        }
    }

    fn apply(&self, a: &Atom) -> Atom {
        a.map_terms(|t| self.walk(t))
    }
}

/// The post-update state of an insert-only program described by
/// dependencies over level copies `V@j` of the view symbols and a primed copy
/// `R'` of the database symbols rebuilt by the rewritings.
struct Encoding<'a> {
    tr: &'a Translator,
    u: &'a UpdateProgram,
    n: usize,
    fresh: usize,
}

impl<'a> Encoding<'a> {
    fn new(tr: &'a Translator, u: &'a UpdateProgram) -> Self {
        Encoding {
            tr,
            u,
            n: u.steps.len(),
            fresh: 0,
        }
    }

    fn level_name(symbol: &str, j: usize) -> Name {
        if j == 0 {
            name(symbol)
        } else {
            name(&format!("{symbol}@{j}"))
        }
    }

    fn materialize(&self, t: &Tagged) -> Atom {
        match t.tag {
            Tag::Level(j) => t.atom.with_symbol(Self::level_name(&t.atom.symbol, j)),
            Tag::Post => t.atom.with_symbol(primed(&t.atom.symbol)),
        }
    }

    fn schema(&self) -> Schema {
        let spec = &self.tr.spec;
        let mut decls: Vec<SymbolDecl> = spec.schema().symbols().to_vec();
        for j in 1..=self.n {
            decls.extend(spec.view_schema().symbols().iter().map(|s| SymbolDecl {
                name: Self::level_name(&s.name, j),
                arity: s.arity,
                kind: SymbolKind::View,
            }));
        }
        decls.extend(spec.db_schema().symbols().iter().map(|s| SymbolDecl {
            name: primed(&s.name),
            arity: s.arity,
            kind: SymbolKind::Database,
        }));
        Schema::new(decls).expect("level and primed names are fresh")
    }

    fn rename_apart(&mut self, vars: impl IntoIterator<Item = Name>) -> BTreeMap<Name, Term> {
        self.fresh += 1;
        let k = self.fresh;
        vars.into_iter()
            .map(|v| {
                let t = Term::Var(name(&format!("{v}#{k}")));
                (v, t)
            })
            .collect()
    }

    fn premises(&self) -> ConstraintSet {
        let spec = &self.tr.spec;
        let mut cs = spec.global_constraints();
        for j in 1..=self.n {
            for s in spec.view_schema().symbols() {
                let xs: Vec<Term> = (0..s.arity).map(|i| Term::var(&format!("x{i}"))).collect();
                let tgd = Tgd::new(
                    vec![Atom { symbol: Self::level_name(&s.name, j - 1), args: xs.clone() }],
                    vec![Atom { symbol: Self::level_name(&s.name, j), args: xs }],
                    Vec::new(),
                )
                .expect("copy rule");
                cs.push(tgd, Provenance::Definition);
            }
        }
        for (i, step) in self.u.steps.iter().enumerate() {
            let j = i + 1;
            let guarded = step
                .condition
                .iter()
                .any(|c| matches!(c, Condition::Neq(..) | Condition::Not(_)));
            if guarded {
                continue;
            }
            let mut case = Case::default();
            let consistent = step.condition.iter().all(|c| match c {
                Condition::Eq(a, b) => case.unify(a, b),
                _ => true,
            });
            if !consistent {
                continue;
            }
            let body: Vec<Atom> = step
                .positive_atoms()
                .map(|a| case.apply(a).with_symbol(Self::level_name(&a.symbol, j - 1)))
                .collect();
            let head = case.apply(&step.pattern).with_symbol(Self::level_name(&step.pattern.symbol, j));
            if let Ok(t) = Tgd::infer(body, vec![head]) {
                cs.push(t, Provenance::Definition);
            }
        }
        for rw in &self.tr.rewritings {
            let body = rw
                .query
                .body()
                .iter()
                .map(|a| a.with_symbol(Self::level_name(&a.symbol, self.n)))
                .collect();
            let head = Atom {
                symbol: primed(&rw.target),
                args: rw.query.head().to_vec(),
            };
            cs.push(Tgd::infer(body, vec![head]).expect("safe rewriting"), Provenance::Definition);
        }
        cs
    }

    /// Goals over the post state: view constraints, database constraints on
    /// the rebuilt database, and both directions of every view definition.
    fn goals(&self) -> Vec<(Vec<Tagged>, Conclusion)> {
        let spec = &self.tr.spec;
        let top = Tag::Level(self.n);
        let tag_all = |atoms: &[Atom], tag: Tag| atoms.iter().map(|a| Tagged { atom: a.clone(), tag }).collect::<Vec<_>>();
        let mut out = Vec::new();
        let from_dep = |d: &Dependency, tag: Tag, out: &mut Vec<(Vec<Tagged>, Conclusion)>| {
            let body = tag_all(d.body(), tag);
            let conclusion = match d {
                Dependency::Tgd(t) => Conclusion::Atoms(t.head().to_vec()),
                Dependency::Egd(e) => Conclusion::Equal(Term::Var(e.left().clone()), Term::Var(e.right().clone())),
            };
            out.push((body, conclusion));
        };
        for d in spec.view_constraints().deps() {
            from_dep(d, top, &mut out);
        }
        for d in spec.db_constraints().deps() {
            from_dep(d, Tag::Post, &mut out);
        }
        for d in spec.defs() {
            out.push((tag_all(d.query.body(), Tag::Post), Conclusion::Atoms(vec![d.head_atom()])));
            out.push((tag_all(&[d.head_atom()], top), Conclusion::Atoms(d.query.body().to_vec())));
        }
        // Conclusion atoms are tagged by symbol kind when materialized.
        out.into_iter()
            .map(|(body, c)| {
                let c = match c {
                    Conclusion::Atoms(atoms) => Conclusion::Atoms(
                        atoms
                            .into_iter()
                            .map(|a| {
                                let tag = if spec.view_schema().contains(&a.symbol) { top } else { Tag::Post };
                                self.materialize(&Tagged { atom: a, tag })
                            })
                            .collect(),
                    ),
                    eq => eq,
                };
                (body, c)
            })
            .collect()
    }

    /// Every way the body atoms can have come about, down to level 0.
    fn expand(&mut self, body: Vec<Tagged>) -> Vec<Case> {
        let mut done = Vec::new();
        let mut stack = vec![(Case::default(), body)];
        while let Some((mut case, mut pending)) = stack.pop() {
            let Some(t) = pending.pop() else {
                done.push(case);
                continue;
            };
            match t.tag {
                Tag::Level(0) => {
                    case.kept.push(t);
                    stack.push((case, pending));
                }
                Tag::Post => {
                    let rw = self
                        .tr
                        .rewritings
                        .iter()
                        .find(|r| r.target == t.atom.symbol)
                        .expect("one rewriting per symbol")
                        .clone();
                    let vars: BTreeSet<Name> = rw.query.body().iter().flat_map(Atom::vars).cloned().collect();
                    let ren = self.rename_apart(vars);
                    let rename = |a: &Atom| a.map_terms(|x| matcher::resolve(&to_binding(&ren), x));
                    let head: Vec<Term> = rw.query.head().iter().map(|x| matcher::resolve(&to_binding(&ren), x)).collect();
                    if head.iter().zip(&t.atom.args).all(|(h, a)| case.unify(h, a)) {
                        pending.extend(rw.query.body().iter().map(|a| Tagged {
                            atom: rename(a),
                            tag: Tag::Level(self.n),
                        }));
                        case.kept.push(t);
                        stack.push((case, pending));
                    }
                }
                Tag::Level(j) => {
                    let mut copy_case = case.clone();
                    let mut copy_pending = pending.clone();
                    copy_pending.push(Tagged {
                        atom: t.atom.clone(),
                        tag: Tag::Level(j - 1),
                    });
                    copy_case.kept.push(t.clone());
                    let step = &self.u.steps[j - 1];
                    if step.pattern.symbol == t.atom.symbol {
                        let vars: BTreeSet<Name> = step.atoms().flat_map(Atom::vars).cloned().collect();
                        let ren = to_binding(&self.rename_apart(vars));
                        let r = |x: &Term| matcher::resolve(&ren, x);
                        let mut c = case;
                        let mut p = pending;
                        let pattern = step.pattern.map_terms(r);
                        let mut ok = pattern.args.iter().zip(&t.atom.args).all(|(x, y)| c.unify(x, y));
                        let bound = step.bound_vars();
                        for cond in &step.condition {
                            match cond {
                                Condition::Atom(a) => p.push(Tagged {
                                    atom: a.map_terms(r),
                                    tag: Tag::Level(j - 1),
                                }),
                                Condition::Eq(x, y) => ok &= c.unify(&r(x), &r(y)),
                                Condition::Neq(x, y) => c.guards.push(Guard {
                                    level: j - 1,
                                    cond: Condition::Neq(r(x), r(y)),
                                    local: BTreeSet::new(),
                                }),
                                Condition::Not(a) => c.guards.push(Guard {
                                    level: j - 1,
                                    cond: Condition::Not(a.map_terms(r)),
                                    local: a
                                        .vars()
                                        .filter(|v| !bound.contains(*v))
                                        .filter_map(|v| match r(&Term::Var(v.clone())) {
                                            Term::Var(w) => Some(w),
                                            _ => None,
                                        })
                                        .collect(),
                                }),
                            }
                        }
                        if ok {
                            c.kept.push(t);
                            stack.push((c, p));
                        }
                    }
                    stack.push((copy_case, copy_pending));
                }
            }
        }
        done
    }

    /// A case is impossible when one of its guards contradicts its atoms.
    fn vacuous(case: &Case) -> bool {
        case.guards.iter().any(|g| match &g.cond {
            Condition::Neq(x, y) => case.walk(x) == case.walk(y),
            Condition::Not(a) => {
                let neg = case.apply(a);
                case.kept.iter().any(|k| {
                    let level_ok = matches!(k.tag, Tag::Level(l) if l <= g.level);
                    level_ok && k.atom.symbol == neg.symbol && {
                        let fact = case.apply(&k.atom);
                        let mut local: BTreeMap<&Term, &Term> = BTreeMap::new();
                        neg.args.iter().zip(&fact.args).all(|(p, v)| match p {
                            Term::Var(w) if g.local.contains(w) => *local.entry(p).or_insert(v) == v,
                            _ => p == v,
                        })
                    }
                })
            }
            _ => false,
        })
    }

    fn check(&mut self) -> Tri {
        let premises = self.premises();
        let schema = self.schema();
        let mut verdict = Tri::Yes;
        for (body, conclusion) in self.goals() {
            for case in self.expand(body) {
                if Self::vacuous(&case) {
                    continue;
                }
                let atoms: Vec<Atom> = case.kept.iter().map(|t| case.apply(&self.materialize(t))).collect();
                let conclusion = match &conclusion {
                    Conclusion::Atoms(h) => Conclusion::Atoms(h.iter().map(|a| case.apply(a)).collect()),
                    Conclusion::Equal(l, r) => Conclusion::Equal(case.walk(l), case.walk(r)),
                };
                match chase_entails(&premises, &schema, &atoms, &conclusion, self.tr.opts.budget) {
                    Some(true) => {}
                    Some(false) => return Tri::No,
                    None => verdict = Tri::Unknown,
                }
            }
        }
        verdict
    }
}

fn to_binding(m: &BTreeMap<Name, Term>) -> Binding {
    m.iter().map(|(k, v)| (Term::Var(k.clone()), v.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deps::{Egd, ViewDefinition};
    use crate::model::Cq;

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    fn c(s: &str) -> Term {
        Term::constant(s)
    }

    fn atom(sym: &str, args: Vec<Term>) -> Atom {
        Atom::new(sym, args)
    }

    fn step(kind: StepKind, pattern: Atom, replacement: Option<Atom>, cond: Vec<Condition>) -> UpdateStep {
        UpdateStep::new(1, kind, pattern, replacement, cond).unwrap()
    }

    fn program(steps: Vec<UpdateStep>) -> UpdateProgram {
        UpdateProgram::new(None, steps).unwrap()
    }

    fn view2() -> Schema {
        Schema::view(&[("V", 2)]).unwrap()
    }

    fn state(facts: &[(&str, &str)]) -> Instance {
        Instance::from_facts(view2(), facts.iter().map(|(a, b)| Atom::fact("V", &[a, b]))).unwrap()
    }

    #[test]
    fn insert_into_empty_state() {
        let u = program(vec![step(StepKind::Insert, atom("V", vec![c("a"), c("b")]), None, vec![])]);
        assert_eq!(apply(&u, &state(&[])).unwrap(), state(&[("a", "b")]));
    }

    #[test]
    fn delete_by_pattern() {
        let u = program(vec![step(StepKind::Delete, atom("V", vec![v("x"), c("b")]), None, vec![])]);
        let before = state(&[("a", "b"), ("c", "b"), ("a", "d")]);
        assert_eq!(apply(&u, &before).unwrap(), state(&[("a", "d")]));
    }

    #[test]
    fn transaction_runs_in_order() {
        let u = program(vec![
            step(StepKind::Insert, atom("V", vec![c("a"), c("b")]), None, vec![]),
            step(
                StepKind::Replace,
                atom("V", vec![c("a"), v("y")]),
                Some(atom("V", vec![c("c"), v("y")])),
                vec![],
            ),
        ]);
        assert_eq!(apply(&u, &state(&[])).unwrap(), state(&[("c", "b")]));
    }

    #[test]
    fn unbound_insert_is_rejected() {
        let e = UpdateStep::new(2, StepKind::Insert, atom("V", vec![v("x"), c("b")]), None, vec![]);
        assert!(matches!(e, Err(UpdateError::NonGroundInsert { step: 2, .. })));
        let e = UpdateStep::new(
            1,
            StepKind::Replace,
            atom("V", vec![v("x"), c("b")]),
            Some(atom("V", vec![v("z"), c("b")])),
            vec![],
        );
        assert!(matches!(e, Err(UpdateError::UnsafeVariable { .. })));
    }

    #[test]
    fn negated_guard_blocks_insert() {
        let u = program(vec![step(
            StepKind::Insert,
            atom("V", vec![c("a"), c("b")]),
            None,
            vec![Condition::Not(atom("V", vec![c("a"), v("y")]))],
        )]);
        assert_eq!(apply(&u, &state(&[("a", "c")])).unwrap(), state(&[("a", "c")]));
        assert_eq!(apply(&u, &state(&[])).unwrap(), state(&[("a", "b")]));
    }

    fn split() -> ViewSpec {
        let mut cs = ConstraintSet::new();
        cs.push(Egd::functional("R", 3, &[1], 2), Provenance::Database);
        let body = vec![atom("R", vec![v("x"), v("y"), v("z")])];
        ViewSpec::new(
            Schema::database(&[("R", 3)]).unwrap(),
            Schema::view(&[("V1", 2), ("V2", 2)]).unwrap(),
            vec![
                ViewDefinition { symbol: name("V1"), query: Cq::new(vec![v("x"), v("y")], body.clone()).unwrap() },
                ViewDefinition { symbol: name("V2"), query: Cq::new(vec![v("y"), v("z")], body).unwrap() },
            ],
            cs,
        )
        .unwrap()
    }

    fn copy_with_view_fd() -> ViewSpec {
        let mut cs = ConstraintSet::new();
        cs.push(Egd::functional("V", 2, &[0], 1), Provenance::View);
        ViewSpec::new(
            Schema::database(&[("R", 2)]).unwrap(),
            view2(),
            vec![ViewDefinition {
                symbol: name("V"),
                query: Cq::new(vec![v("x"), v("y")], vec![atom("R", vec![v("x"), v("y")])]).unwrap(),
            }],
            cs,
        )
        .unwrap()
    }

    #[test]
    fn split_insert_reuses_existing_value() {
        let spec = split();
        let tr = Translator::new(&spec, &Options::default()).unwrap();
        let db = Instance::from_facts(spec.db_schema().clone(), [Atom::fact("R", &["a", "b", "c"])]).unwrap();
        let u = program(vec![step(StepKind::Insert, atom("V1", vec![c("d"), c("b")]), None, vec![])]);
        let delta = tr.translate(&u, &db).unwrap();
        assert_eq!(delta.insertions.iter().cloned().collect::<Vec<_>>(), vec![Atom::fact("R", &["d", "b", "c"])]);
        assert!(delta.deletions.is_empty());

        let clash = program(vec![step(StepKind::Insert, atom("V2", vec![c("b"), c("e")]), None, vec![])]);
        assert!(matches!(
            tr.translatable_at(&clash, &db).unwrap(),
            TranslatabilityVerdict::NotTranslatable { reason: Reason::InconsistentPostState, .. }
        ));
    }

    #[test]
    fn guarded_insert_under_view_fd() {
        let spec = copy_with_view_fd();
        let tr = Translator::new(&spec, &Options::default()).unwrap();
        let plain = program(vec![step(StepKind::Insert, atom("V", vec![c("a"), c("b")]), None, vec![])]);
        let Everywhere::No { view, .. } = tr.translatable_everywhere(&plain).unwrap() else { panic!() };
        assert!(tr.translate_state(&Instance::empty(spec.db_schema().clone()), &apply(&plain, &view).unwrap()).tri() == Tri::No);

        let guarded = program(vec![step(
            StepKind::Insert,
            atom("V", vec![c("a"), c("b")]),
            None,
            vec![Condition::Not(atom("V", vec![c("a"), v("y")]))],
        )]);
        assert_eq!(tr.translatable_everywhere(&guarded).unwrap(), Everywhere::Yes);
    }

    #[test]
    fn copy_view_insert_is_translatable_everywhere() {
        let spec = ViewSpec::new(
            Schema::database(&[("R", 2)]).unwrap(),
            view2(),
            vec![ViewDefinition {
                symbol: name("V"),
                query: Cq::new(vec![v("x"), v("y")], vec![atom("R", vec![v("x"), v("y")])]).unwrap(),
            }],
            ConstraintSet::new(),
        )
        .unwrap();
        let u = program(vec![step(StepKind::Insert, atom("V", vec![c("a"), c("b")]), None, vec![])]);
        assert_eq!(translatable_everywhere(&spec, &u, &Options::default()).unwrap(), Everywhere::Yes);
    }
}

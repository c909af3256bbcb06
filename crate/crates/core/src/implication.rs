//! Logical implication between dependencies, decided by chasing the frozen
//! body of the goal.
//!
//! Goal variables are frozen to labeled nulls rather than constants: an egd
//! in the premise may legitimately identify two of them, which a constant
//! freeze would misreport as an inconsistency.

use std::collections::{BTreeMap, BTreeSet};

use crate::chase::{ground_nulls, Engine, Halt};
use crate::deps::{ConstraintSet, Dependency};
use crate::matcher::{self, Binding};
use crate::model::{Atom, Instance, Name, Schema, SymbolDecl, SymbolKind, Term};
use crate::options::Options;
use crate::oracle::{candidate_facts, domain_with_fresh, ModelEnumerator};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImplicationVerdict {
    Valid,
    /// A finite model of the premises violating the goal.
    Invalid(Instance),
    Unknown(String),
}

impl ImplicationVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, ImplicationVerdict::Valid)
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, ImplicationVerdict::Invalid(_))
    }
}

/// Which part of the procedure produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Chase,
    Enumeration,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Implication {
    pub verdict: ImplicationVerdict,
    pub method: Method,
    pub chase_steps: usize,
}

/// The smallest schema covering every atom of `deps`; `None` if some
/// symbol is used with two arities.
pub fn schema_of<'a>(deps: impl IntoIterator<Item = &'a Dependency>) -> Option<Schema> {
    let mut arities: BTreeMap<Name, usize> = BTreeMap::new();
    for a in deps.into_iter().flat_map(Dependency::atoms) {
        if *arities.entry(a.symbol.clone()).or_insert(a.arity()) != a.arity() {
            return None;
        }
    }
    Schema::new(arities.into_iter().map(|(name, arity)| SymbolDecl {
        name,
        arity,
        kind: SymbolKind::Database,
    }))
    .ok()
}

/// `cs ⊨ goal`, with the default bounded fallback.
pub fn implies(cs: &ConstraintSet, goal: &Dependency, budget: usize) -> ImplicationVerdict {
    implies_with(cs, goal, &Options::default().with_budget(budget), true).verdict
}

/// `cs ⊨ goal`. When the chase runs out of budget and `fallback` is set, a
/// countermodel is searched among instances over the constants of the input
/// plus `opts.domain_bound` fresh ones.
pub fn implies_with(cs: &ConstraintSet, goal: &Dependency, opts: &Options, fallback: bool) -> Implication {
    let unknown = |reason: &str, steps| Implication {
        verdict: ImplicationVerdict::Unknown(reason.to_string()),
        method: Method::None,
        chase_steps: steps,
    };
    let Some(schema) = schema_of(cs.deps().chain(std::iter::once(goal))) else {
        return unknown("a symbol is used with two different arities", 0);
    };

    let (frozen, freeze) = freeze_body(goal, &schema);
    let mut engine = Engine::new(frozen, cs.deps().cloned().collect(), opts.budget);
    let halt = engine.run(&mut |e| goal_holds(e, goal, &freeze));
    let steps = engine.steps();
    match halt {
        Halt::Stopped | Halt::Failed { .. } => Implication {
            verdict: ImplicationVerdict::Valid,
            method: Method::Chase,
            chase_steps: steps,
        },
        Halt::Fixpoint if goal_holds(&engine, goal, &freeze) => Implication {
            verdict: ImplicationVerdict::Valid,
            method: Method::Chase,
            chase_steps: steps,
        },
        Halt::Fixpoint => {
            let mut avoid = cs.constants();
            avoid.extend(goal.constants());
            let (model, _) = ground_nulls(engine.instance(), &avoid);
            if cs.is_satisfied_by(&model) && goal.violation(&model).is_some() {
                Implication {
                    verdict: ImplicationVerdict::Invalid(model),
                    method: Method::Chase,
                    chase_steps: steps,
                }
            } else {
                unknown("chase result failed countermodel verification", steps)
            }
        }
        Halt::Exhausted if fallback => match search_countermodel(cs, goal, &schema, opts) {
            Some(m) => Implication {
                verdict: ImplicationVerdict::Invalid(m),
                method: Method::Enumeration,
                chase_steps: steps,
            },
            None => unknown(
                &format!(
                    "chase budget of {} steps exhausted; no countermodel over {} fresh constants",
                    opts.budget, opts.domain_bound
                ),
                steps,
            ),
        },
        Halt::Exhausted => unknown(&format!("chase budget of {} steps exhausted", opts.budget), steps),
    }
}

/// Conclusion of a goal stated directly over a conjunction of atoms.
#[derive(Debug, Clone)]
pub(crate) enum Conclusion {
    Atoms(Vec<Atom>),
    Equal(Term, Term),
}

/// Chase-only entailment of `body -> conclusion` (variables in the
/// conclusion but not the body are existential). `None` if the budget runs out.
pub(crate) fn chase_entails(cs: &ConstraintSet, schema: &Schema, body: &[Atom], conclusion: &Conclusion, budget: usize) -> Option<bool> {
    let mut freeze = Binding::new();
    let mut next = 1u32;
    for t in body.iter().flat_map(|a| a.args.iter()) {
        if t.is_var() && !freeze.contains_key(t) {
            freeze.insert(t.clone(), Term::Null(next));
            next += 1;
        }
    }
    let facts: BTreeSet<_> = body.iter().map(|a| matcher::resolve_atom(&freeze, a)).collect();
    let mut engine = Engine::new(Instance::trusted(schema.clone(), facts), cs.deps().cloned().collect(), budget);
    let holds = |e: &Engine| {
        let current: Binding = freeze.iter().map(|(v, n)| (v.clone(), e.resolve(n))).collect();
        match conclusion {
            Conclusion::Atoms(head) => matcher::first_match(head, e.store(), &current, Term::is_var).is_some(),
            Conclusion::Equal(l, r) => {
                e.resolve(&matcher::resolve(&current, l)) == e.resolve(&matcher::resolve(&current, r))
            }
        }
    };
    match engine.run(&mut |e| holds(e)) {
        Halt::Stopped | Halt::Failed { .. } => Some(true),
        Halt::Fixpoint => Some(holds(&engine)),
        Halt::Exhausted => None,
    }
}

/// The goal body with every variable replaced by a distinct null, numbered
/// in order of first occurrence.
fn freeze_body(goal: &Dependency, schema: &Schema) -> (Instance, Binding) {
    let mut freeze = Binding::new();
    let mut next = 1u32;
    for a in goal.body() {
        for t in &a.args {
            if t.is_var() && !freeze.contains_key(t) {
                freeze.insert(t.clone(), Term::Null(next));
                next += 1;
            }
        }
    }
    let facts: BTreeSet<_> = goal.body().iter().map(|a| matcher::resolve_atom(&freeze, a)).collect();
    (Instance::trusted(schema.clone(), facts), freeze)
}

fn goal_holds(engine: &Engine, goal: &Dependency, freeze: &Binding) -> bool {
    let current: Binding = freeze.iter().map(|(v, n)| (v.clone(), engine.resolve(n))).collect();
    goal.head_holds(engine.store(), &current)
}

fn search_countermodel(cs: &ConstraintSet, goal: &Dependency, schema: &Schema, opts: &Options) -> Option<Instance> {
    let mut consts = cs.constants();
    consts.extend(goal.constants());
    let domain = domain_with_fresh(&consts, opts.domain_bound);
    ModelEnumerator::new(cs, Instance::empty(schema.clone()), candidate_facts(schema, &domain))
        .with_limit(opts.search_limit)
        .find(|m| goal.violation(m).is_some())
}

//! The standard (restricted) chase over tgds and egds.
//!
//! A tgd trigger fires only when its head cannot already be satisfied by
//! extending the body match. Egds identify terms, preferring constants over
//! nulls and lower null indices otherwise; equating two distinct constants
//! fails the chase. Triggers are visited round-robin by dependency index and,
//! within a dependency, in fact order, so runs are reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use crate::deps::{ConstraintSet, Dependency};
use crate::matcher::{self, Binding, IndexedInstance};
use crate::model::{name, Atom, Fact, Instance, ModelError, Name, Term};

pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChaseOutcome {
    Success(Instance),
    EgdFailure {
        /// Index of the offending egd in the dependency list.
        dependency: usize,
        trigger: Binding,
        left: Term,
        right: Term,
    },
    BudgetExhausted {
        partial: Instance,
        steps: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChaseResult {
    pub outcome: ChaseOutcome,
    pub steps: usize,
    merges: BTreeMap<u32, Term>,
}

impl ChaseResult {
    /// Follows the null identifications performed by egd steps.
    pub fn resolve(&self, t: &Term) -> Term {
        resolve_merges(&self.merges, t)
    }

    pub fn instance(&self) -> Option<&Instance> {
        match &self.outcome {
            ChaseOutcome::Success(i) => Some(i),
            _ => None,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self.outcome, ChaseOutcome::Success(_))
    }

    pub fn is_failure(&self) -> bool {
        matches!(self.outcome, ChaseOutcome::EgdFailure { .. })
    }
}

fn resolve_merges(merges: &BTreeMap<u32, Term>, t: &Term) -> Term {
    let mut cur = t.clone();
    while let Term::Null(n) = cur {
        match merges.get(&n) {
            Some(next) => cur = next.clone(),
            None => break,
        }
    }
    cur
}

/// Chases `inst` with `cs`, performing at most `budget` steps.
pub fn chase(inst: &Instance, cs: &ConstraintSet, budget: usize) -> Result<ChaseResult, ModelError> {
    for a in cs.deps().flat_map(Dependency::atoms) {
        inst.schema().check_atom(a)?;
    }
    let mut engine = Engine::new(inst.clone(), cs.deps().cloned().collect(), budget);
    let halt = engine.run(&mut |_| false);
    Ok(engine.finish(halt))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Halt {
    Fixpoint,
    Stopped,
    Failed {
        dependency: usize,
        trigger: Binding,
        left: Term,
        right: Term,
    },
    Exhausted,
}

pub(crate) struct Engine {
    deps: Vec<Dependency>,
    store: IndexedInstance,
    /// Every fact added or rewritten, in order; drives semi-naive matching.
    log: Vec<Fact>,
    /// Per dependency, the log length at its last visit.
    seen: Vec<Option<usize>>,
    next_null: u32,
    merges: BTreeMap<u32, Term>,
    steps: usize,
    budget: usize,
}

enum EgdStep {
    Done,
    Merged,
    Exhausted,
    Failed(Binding, Term, Term),
}

/// Binds the variables of `atom` so that it equals `fact`.
fn unify(atom: &Atom, fact: &Fact) -> Option<Binding> {
    if atom.symbol != fact.symbol || atom.arity() != fact.arity() {
        return None;
    }
    let mut b = Binding::new();
    for (p, v) in atom.args.iter().zip(&fact.args) {
        match p {
            Term::Var(_) => match b.get(p) {
                Some(w) if w != v => return None,
                Some(_) => {}
                None => {
                    b.insert(p.clone(), v.clone());
                }
            },
            _ if p != v => return None,
            _ => {}
        }
    }
    Some(b)
}

impl Engine {
    pub(crate) fn new(inst: Instance, deps: Vec<Dependency>, budget: usize) -> Self {
        let next_null = inst.nulls().last().map_or(1, |n| n + 1);
        let log: Vec<Fact> = inst.iter().cloned().collect();
        Engine {
            seen: vec![None; deps.len()],
            deps,
            store: IndexedInstance::new(inst),
            log,
            next_null,
            merges: BTreeMap::new(),
            steps: 0,
            budget,
        }
    }

    pub(crate) fn instance(&self) -> &Instance {
        self.store.instance()
    }

    pub(crate) fn store(&self) -> &IndexedInstance {
        &self.store
    }

    pub(crate) fn resolve(&self, t: &Term) -> Term {
        resolve_merges(&self.merges, t)
    }

    pub(crate) fn steps(&self) -> usize {
        self.steps
    }

    /// Body matches of dependency `idx` that use at least one fact logged
    /// since its last visit (all matches on the first visit), ordered by the
    /// matched facts.
    fn new_matches(&mut self, idx: usize) -> Vec<Binding> {
        let since = self.seen[idx];
        self.seen[idx] = Some(self.log.len());
        let body = self.deps[idx].body();
        let mut found: BTreeMap<Vec<Fact>, Binding> = BTreeMap::new();
        let mut record = |b: &Binding| {
            let key = body.iter().map(|a| matcher::resolve_atom(b, a)).collect();
            found.entry(key).or_insert_with(|| b.clone());
            ControlFlow::Continue(())
        };
        match since {
            None => {
                let _ = matcher::for_each_match(body, &self.store, &Binding::new(), Term::is_var, &mut record);
            }
            Some(start) => {
                for fact in &self.log[start..] {
                    if !self.store.instance().contains(fact) {
                        continue;
                    }
                    for (i, atom) in body.iter().enumerate() {
                        let Some(init) = unify(atom, fact) else { continue };
                        let rest: Vec<Atom> = body
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| j != i)
                            .map(|(_, a)| a.clone())
                            .collect();
                        let _ = matcher::for_each_match(&rest, &self.store, &init, Term::is_var, &mut record);
                    }
                }
            }
        }
        found.into_values().collect()
    }

    fn add(&mut self, fact: Fact) {
        if self.store.insert(fact.clone()) {
            self.log.push(fact);
        }
    }

    /// Runs to a fixpoint, a failure, budget exhaustion, or until `stop`
    /// returns true (checked before the first round and after every change).
    pub(crate) fn run(&mut self, stop: &mut dyn FnMut(&Engine) -> bool) -> Halt {
        if stop(self) {
            return Halt::Stopped;
        }
        loop {
            let mut changed = false;
            for idx in 0..self.deps.len() {
                let progressed = match self.deps[idx].clone() {
                    Dependency::Tgd(t) => {
                        let mut fired = false;
                        for mut b in self.new_matches(idx) {
                            if matcher::first_match(t.head(), &self.store, &b, Term::is_var).is_some() {
                                continue;
                            }
                            if self.steps >= self.budget {
                                return Halt::Exhausted;
                            }
                            for e in t.existentials() {
                                b.insert(Term::Var(e.clone()), Term::Null(self.next_null));
                                self.next_null += 1;
                            }
                            for h in t.head() {
                                self.add(matcher::resolve_atom(&b, h));
                            }
                            self.steps += 1;
                            fired = true;
                        }
                        fired
                    }
                    Dependency::Egd(_) => {
                        let mut merged = false;
                        loop {
                            match self.egd_pass(idx) {
                                EgdStep::Done => break,
                                EgdStep::Merged => merged = true,
                                EgdStep::Exhausted => return Halt::Exhausted,
                                EgdStep::Failed(trigger, left, right) => {
                                    return Halt::Failed {
                                        dependency: idx,
                                        trigger,
                                        left,
                                        right,
                                    }
                                }
                            }
                        }
                        merged
                    }
                };
                if progressed {
                    changed = true;
                    if stop(self) {
                        return Halt::Stopped;
                    }
                }
            }
            if !changed {
                return Halt::Fixpoint;
            }
        }
    }

    /// Applies egd `idx` to every new match; `Merged` if anything changed,
    /// in which case rewritten facts await another pass.
    fn egd_pass(&mut self, idx: usize) -> EgdStep {
        if self.seen[idx] == Some(self.log.len()) {
            return EgdStep::Done;
        }
        let Dependency::Egd(e) = &self.deps[idx] else { unreachable!() };
        let (l, r) = (Term::Var(e.left().clone()), Term::Var(e.right().clone()));
        let mut merged = false;
        for b in self.new_matches(idx) {
            let a = self.resolve(&matcher::resolve(&b, &l));
            let c = self.resolve(&matcher::resolve(&b, &r));
            if a == c {
                continue;
            }
            if let (Term::Const(_), Term::Const(_)) = (&a, &c) {
                return EgdStep::Failed(b, a, c);
            }
            if self.steps >= self.budget {
                return EgdStep::Exhausted;
            }
            let (old, new) = match (&a, &c) {
                (Term::Const(_), Term::Null(_)) => (c, a),
                (Term::Null(_), Term::Const(_)) => (a, c),
                (Term::Null(x), Term::Null(y)) if x < y => (c, a),
                _ => (a, c),
            };
            let Term::Null(n) = old else { unreachable!("only nulls are replaced") };
            self.merges.insert(n, new.clone());
            for f in self.store.containing(&old) {
                self.store.remove(&f);
                self.add(f.map_terms(|t| if *t == old { new.clone() } else { t.clone() }));
            }
            self.steps += 1;
            merged = true;
        }
        if merged {
            EgdStep::Merged
        } else {
            EgdStep::Done
        }
    }

    pub(crate) fn finish(self, halt: Halt) -> ChaseResult {
        let inst = self.store.into_instance();
        let outcome = match halt {
            Halt::Fixpoint | Halt::Stopped => ChaseOutcome::Success(inst),
            Halt::Failed {
                dependency,
                trigger,
                left,
                right,
            } => ChaseOutcome::EgdFailure {
                dependency,
                trigger,
                left,
                right,
            },
            Halt::Exhausted => ChaseOutcome::BudgetExhausted {
                partial: inst,
                steps: self.steps,
            },
        };
        ChaseResult {
            outcome,
            steps: self.steps,
            merges: self.merges,
        }
    }
}

/// Endless supply of constant names `a, b, ..., z, a1, b1, ...` skipping
/// those in `avoid`.
pub(crate) fn fresh_constants(avoid: &BTreeSet<Name>) -> impl Iterator<Item = Name> + '_ {
    (0usize..)
        .map(|i| {
            let letter = (b'a' + (i % 26) as u8) as char;
            match i / 26 {
                0 => letter.to_string(),
                round => format!("{letter}{round}"),
            }
        })
        .map(|s| name(&s))
        .filter(move |n| !avoid.contains(n))
}

/// Replaces every null by a distinct fresh constant, in null-index order.
pub fn ground_nulls(inst: &Instance, avoid: &BTreeSet<Name>) -> (Instance, BTreeMap<u32, Name>) {
    let mut avoid = avoid.clone();
    avoid.extend(inst.constants());
    let mapping: BTreeMap<u32, Name> = inst.nulls().into_iter().zip(fresh_constants(&avoid)).collect();
    let facts = inst
        .iter()
        .map(|f| {
            f.map_terms(|t| match t {
                Term::Null(n) => Term::Const(mapping[n].clone()),
                other => other.clone(),
            })
        })
        .collect();
    (Instance::trusted(inst.schema().clone(), facts), mapping)
}

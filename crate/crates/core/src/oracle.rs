//! Brute-force finite model enumeration, used as an independent check on the
//! chase-based procedures and as their bounded fallback.
//!
//! Models are enumerated over a finite domain by increasing number of facts,
//! and lexicographically (in candidate-fact order) among models of equal size.
//! Partial instances that already violate an egd are pruned, since adding
//! facts can never repair such a violation.

use std::collections::{BTreeSet, HashMap};

use crate::deps::{ConstraintSet, Dependency, ViewSpec};
use crate::model::{name, Atom, Fact, Instance, Name, Schema, Term};

/// `existing` followed by `k` fresh constants `c1, c2, ...` not in it.
pub fn domain_with_fresh(existing: &BTreeSet<Name>, k: usize) -> Vec<Name> {
    let mut out: Vec<Name> = existing.iter().cloned().collect();
    out.extend(
        (1..)
            .map(|i| name(&format!("c{i}")))
            .filter(|c| !existing.contains(c))
            .take(k),
    );
    out
}

/// Every fact over `schema` with arguments drawn from `domain`, sorted.
pub fn candidate_facts(schema: &Schema, domain: &[Name]) -> Vec<Fact> {
    let mut out = Vec::new();
    for decl in schema.symbols() {
        let mut tuple = vec![0usize; decl.arity];
        if decl.arity > 0 && domain.is_empty() {
            continue;
        }
        loop {
            out.push(Atom {
                symbol: decl.name.clone(),
                args: tuple.iter().map(|&i| Term::Const(domain[i].clone())).collect(),
            });
            // odometer increment
            let mut pos = decl.arity;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < domain.len() {
                    break;
                }
                tuple[pos] = 0;
            }
            if tuple.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    out.sort();
    out
}

type Prune = Box<dyn Fn(&Instance) -> bool>;

/// Lazily enumerates the models of a dependency set that extend a base
/// instance with facts drawn from a fixed candidate list.
pub struct ModelEnumerator {
    deps: Vec<Dependency>,
    egds: Vec<Dependency>,
    candidates: Vec<Fact>,
    prune: Option<Prune>,
    current: Instance,
    cursor: Vec<usize>,
    next_pos: usize,
    level: usize,
    max_level: usize,
    started: bool,
    examined: usize,
    limit: Option<usize>,
    completed: bool,
    hit_limit: bool,
}

impl ModelEnumerator {
    pub fn new(cs: &ConstraintSet, base: Instance, candidates: Vec<Fact>) -> Self {
        let deps: Vec<Dependency> = cs.deps().cloned().collect();
        let egds = deps
            .iter()
            .filter(|d| matches!(d, Dependency::Egd(_)))
            .cloned()
            .collect();
        let candidates: Vec<Fact> = candidates.into_iter().filter(|f| !base.contains(f)).collect();
        let max_level = candidates.len();
        let mut e = ModelEnumerator {
            deps,
            egds,
            candidates,
            prune: None,
            current: base,
            cursor: Vec::new(),
            next_pos: 0,
            level: 0,
            max_level,
            started: false,
            examined: 0,
            limit: None,
            completed: false,
            hit_limit: false,
        };
        if e.pruned() {
            e.completed = true;
        }
        e
    }

    /// Stops after examining `n` complete candidate instances.
    pub fn with_limit(mut self, n: usize) -> Self {
        self.limit = Some(n);
        self
    }

    /// Only instances with at most `n` facts beyond the base.
    pub fn with_max_extra_facts(mut self, n: usize) -> Self {
        self.max_level = self.max_level.min(n);
        self
    }

    /// Adds an anti-monotone rejection test: once it holds for a partial
    /// instance it must hold for every extension.
    pub fn with_prune(mut self, prune: impl Fn(&Instance) -> bool + 'static) -> Self {
        let already = prune(&self.current);
        self.prune = Some(Box::new(prune));
        if already {
            self.completed = true;
        }
        self
    }

    /// True once every candidate subset has been considered.
    pub fn is_exhausted(&self) -> bool {
        self.completed && !self.hit_limit
    }

    pub fn examined(&self) -> usize {
        self.examined
    }

    fn pruned(&self) -> bool {
        self.egds.iter().any(|d| !d.is_satisfied_by(&self.current))
            || self.prune.as_ref().is_some_and(|p| p(&self.current))
    }

    fn push(&mut self, i: usize) {
        self.cursor.push(i);
        self.current.insert_trusted(self.candidates[i].clone());
    }

    fn pop(&mut self) -> Option<usize> {
        let i = self.cursor.pop()?;
        self.current.remove(&self.candidates[i]);
        Some(i)
    }

    /// Moves to the next candidate subset of size `level`.
    fn advance(&mut self) -> bool {
        if self.started {
            if self.level == 0 {
                return false;
            }
            let last = self.pop().expect("positioned on a leaf");
            self.next_pos = last + 1;
        } else {
            self.started = true;
            self.next_pos = 0;
            if self.level == 0 {
                return true;
            }
        }
        loop {
            if self.cursor.len() == self.level {
                return true;
            }
            let need = self.level - self.cursor.len();
            if self.next_pos + need > self.candidates.len() {
                match self.pop() {
                    Some(i) => {
                        self.next_pos = i + 1;
                        continue;
                    }
                    None => return false,
                }
            }
            let i = self.next_pos;
            self.push(i);
            self.next_pos = i + 1;
            if self.pruned() {
                self.pop();
            }
        }
    }
}

impl Iterator for ModelEnumerator {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        while !self.completed {
            if self.limit.is_some_and(|l| self.examined >= l) {
                self.completed = true;
                self.hit_limit = true;
                break;
            }
            if self.advance() {
                self.examined += 1;
                if self.deps.iter().all(|d| d.is_satisfied_by(&self.current)) {
                    return Some(self.current.clone());
                }
            } else if self.level < self.max_level {
                self.level += 1;
                self.started = false;
            } else {
                self.completed = true;
            }
        }
        None
    }
}

/// Every instance over `schema` with constants from `cs` plus `k` fresh
/// constants that satisfies `cs`, smallest first.
pub fn enumerate_models(cs: &ConstraintSet, schema: &Schema, k: usize) -> ModelEnumerator {
    let domain = domain_with_fresh(&cs.constants(), k);
    ModelEnumerator::new(cs, Instance::empty(schema.clone()), candidate_facts(schema, &domain))
}

/// Outcome of a bounded search for two consistent database instances that
/// agree on the view but differ on one database symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeterminacySearch {
    Counterexample(Instance, Instance),
    /// No pair found; `exhaustive` tells whether the whole space was covered.
    NotFound { exhaustive: bool },
}

pub fn search_determinacy_counterexample(
    spec: &ViewSpec,
    target: &str,
    domain: &[Name],
    limit: usize,
) -> DeterminacySearch {
    let sigma_v = spec.view_constraints();
    let mut seen: HashMap<BTreeSet<Fact>, Instance> = HashMap::new();
    let mut models = ModelEnumerator::new(
        &spec.db_constraints(),
        Instance::empty(spec.db_schema().clone()),
        candidate_facts(spec.db_schema(), domain),
    )
    .with_limit(limit);
    for db in models.by_ref() {
        let view = spec.view_of(&db);
        if !sigma_v.is_satisfied_by(&view) {
            continue;
        }
        let key = view.into_facts();
        match seen.get(&key) {
            Some(other) if differ_on(other, &db, target) => {
                return DeterminacySearch::Counterexample(other.clone(), db)
            }
            Some(_) => {}
            None => {
                seen.insert(key, db);
            }
        }
    }
    DeterminacySearch::NotFound {
        exhaustive: models.is_exhausted(),
    }
}

pub(crate) fn differ_on(a: &Instance, b: &Instance, symbol: &str) -> bool {
    !a.facts_of(symbol).eq(b.facts_of(symbol))
}

/// Enumerates consistent database instances over `domain` whose view image is
/// exactly `view_state`.
pub fn preimages(spec: &ViewSpec, view_state: &Instance, domain: &[Name]) -> impl Iterator<Item = Instance> {
    let single = |f: &Fact| {
        let mut i = Instance::empty(spec.db_schema().clone());
        i.insert_trusted(f.clone());
        spec.view_of(&i)
    };
    let target: BTreeSet<Fact> = view_state.facts().clone();
    let candidates: Vec<Fact> = candidate_facts(spec.db_schema(), domain)
        .into_iter()
        .filter(|f| single(f).facts().is_subset(&target))
        .collect();
    let prune_spec = spec.clone();
    let prune_target = target.clone();
    let final_spec = spec.clone();
    ModelEnumerator::new(
        &spec.db_constraints(),
        Instance::empty(spec.db_schema().clone()),
        candidates,
    )
    .with_prune(move |i| !prune_spec.view_of(i).facts().is_subset(&prune_target))
    .filter(move |i| final_spec.view_of(i).facts() == &target)
}

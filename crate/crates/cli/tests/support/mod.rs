//! Naive reference implementations used as oracles. Everything here works on
//! plain fact sets by exhaustive backtracking and shares no code with the
//! library's matcher, chase or enumerator.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use viewlens::deps::{Dependency, ViewSpec};
use viewlens::model::{Atom, Name, Term};
use viewlens::updates::{Condition, StepKind, UpdateProgram};

pub type Facts = BTreeSet<Atom>;
pub type Subst = BTreeMap<Name, Term>;

pub fn bind(t: &Term, s: &Subst) -> Term {
    match t {
        Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
        other => other.clone(),
    }
}

pub fn subst_atom(a: &Atom, s: &Subst) -> Atom {
    Atom {
        symbol: a.symbol.clone(),
        args: a.args.iter().map(|t| bind(t, s)).collect(),
    }
}

/// Every extension of `init` mapping all of `atoms` into `facts`.
pub fn matches(atoms: &[Atom], facts: &Facts, init: &Subst) -> Vec<Subst> {
    let Some((first, rest)) = atoms.split_first() else {
        return vec![init.clone()];
    };
    let mut out = Vec::new();
    for f in facts {
        if f.symbol != first.symbol || f.args.len() != first.args.len() {
            continue;
        }
        let mut s = init.clone();
        let mut ok = true;
        for (p, v) in first.args.iter().zip(&f.args) {
            match p {
                Term::Var(x) => match s.get(x) {
                    Some(bound) if bound != v => ok = false,
                    Some(_) => {}
                    None => {
                        s.insert(x.clone(), v.clone());
                    }
                },
                other => ok &= other == v,
            }
            if !ok {
                break;
            }
        }
        if ok {
            out.extend(matches(rest, facts, &s));
        }
    }
    out
}

pub fn satisfies(facts: &Facts, dep: &Dependency) -> bool {
    match dep {
        Dependency::Tgd(t) => matches(t.body(), facts, &Subst::new())
            .iter()
            .all(|m| !matches(t.head(), facts, m).is_empty()),
        Dependency::Egd(e) => matches(e.body(), facts, &Subst::new())
            .iter()
            .all(|m| m.get(e.left()) == m.get(e.right())),
    }
}

pub fn satisfies_all<'a>(facts: &Facts, deps: impl IntoIterator<Item = &'a Dependency>) -> bool {
    deps.into_iter().all(|d| satisfies(facts, d))
}

/// The view image of a database instance, by evaluating every definition.
pub fn view_of(spec: &ViewSpec, db: &Facts) -> Facts {
    let mut out = Facts::new();
    for d in spec.defs() {
        for m in matches(d.query.body(), db, &Subst::new()) {
            out.insert(Atom {
                symbol: d.symbol.clone(),
                args: d.query.head().iter().map(|t| bind(t, &m)).collect(),
            });
        }
    }
    out
}

pub fn restrict(facts: &Facts, symbol: &str) -> Facts {
    facts.iter().filter(|f| &*f.symbol == symbol).cloned().collect()
}

/// Whether `src` maps into `dst` by a homomorphism that fixes constants
/// (labeled nulls of `src` may go anywhere).
pub fn homomorphic(src: &Facts, dst: &Facts) -> bool {
    let pattern: Vec<Atom> = src
        .iter()
        .map(|f| Atom {
            symbol: f.symbol.clone(),
            args: f
                .args
                .iter()
                .map(|t| match t {
                    Term::Null(n) => Term::Var(format!("null{n}").as_str().into()),
                    other => other.clone(),
                })
                .collect(),
        })
        .collect();
    !matches(&pattern, dst, &Subst::new()).is_empty()
}

/// All facts over the given symbols with arguments from `domain`.
pub fn all_facts(symbols: &[(Name, usize)], domain: &[Name]) -> Vec<Atom> {
    let mut out = Vec::new();
    for (sym, arity) in symbols {
        let mut tuples: Vec<Vec<Term>> = vec![vec![]];
        for _ in 0..*arity {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    domain.iter().map(move |c| {
                        let mut t = t.clone();
                        t.push(Term::Const(c.clone()));
                        t
                    })
                })
                .collect();
        }
        out.extend(tuples.into_iter().map(|args| Atom {
            symbol: sym.clone(),
            args,
        }));
    }
    out
}

/// Visits `base ∪ S` for every subset `S` of `candidates` with at most
/// `max_size` elements. `prune` rejects a partial set together with all its
/// supersets. `visit` returns true to stop early. Returns true when the whole
/// space was visited.
pub fn subsets(
    base: &Facts,
    candidates: &[Atom],
    max_size: usize,
    prune: &dyn Fn(&Facts) -> bool,
    visit: &mut dyn FnMut(&Facts) -> bool,
) -> bool {
    fn go(
        cur: &mut Facts,
        rest: &[Atom],
        left: usize,
        prune: &dyn Fn(&Facts) -> bool,
        visit: &mut dyn FnMut(&Facts) -> bool,
    ) -> bool {
        let Some((first, rest)) = rest.split_first() else {
            return !visit(cur);
        };
        if !go(cur, rest, left, prune, visit) {
            return false;
        }
        if left == 0 {
            return true;
        }
        cur.insert(first.clone());
        let ok = prune(cur) || go(cur, rest, left - 1, prune, visit);
        cur.remove(first);
        ok
    }
    if prune(base) {
        return true;
    }
    let fresh: Vec<Atom> = candidates.iter().filter(|c| !base.contains(c)).cloned().collect();
    let mut cur = base.clone();
    go(&mut cur, &fresh, max_size, prune, visit) && max_size >= fresh.len()
}

/// Every fact set over `candidates` satisfying `deps`, found exhaustively.
pub fn models(base: &Facts, candidates: &[Atom], deps: &[Dependency]) -> Vec<Facts> {
    let prune = egd_prune(deps.to_vec());
    let mut out = Vec::new();
    subsets(base, candidates, usize::MAX, &prune, &mut |f| {
        if satisfies_all(f, deps) {
            out.push(f.clone());
        }
        false
    });
    out
}

/// Prunes sets that already violate an egd; adding facts cannot repair that.
pub fn egd_prune(deps: Vec<Dependency>) -> impl Fn(&Facts) -> bool {
    move |f: &Facts| {
        deps.iter()
            .any(|d| matches!(d, Dependency::Egd(_)) && !satisfies(f, d))
    }
}

fn holds(c: &Condition, state: &Facts, s: &Subst) -> bool {
    match c {
        Condition::Atom(_) => true,
        Condition::Eq(l, r) => bind(l, s) == bind(r, s),
        Condition::Neq(l, r) => bind(l, s) != bind(r, s),
        Condition::Not(a) => matches(&[subst_atom(a, s)], state, s).is_empty(),
    }
}

/// Update semantics: each step matches against the state before it,
/// deletes, then inserts.
pub fn apply(u: &UpdateProgram, state: &Facts) -> Facts {
    let mut cur = state.clone();
    for step in u.steps() {
        let mut pattern: Vec<Atom> = Vec::new();
        if step.kind() != StepKind::Insert {
            pattern.push(step.pattern().clone());
        }
        for c in step.condition() {
            if let Condition::Atom(a) = c {
                pattern.push(a.clone());
            }
        }
        let found: Vec<Subst> = matches(&pattern, &cur, &Subst::new())
            .into_iter()
            .filter(|s| step.condition().iter().all(|c| holds(c, &cur, s)))
            .collect();
        let mut next = cur.clone();
        let mut added = Vec::new();
        for s in &found {
            match step.kind() {
                StepKind::Insert => added.push(subst_atom(step.pattern(), s)),
                StepKind::Delete => {
                    next.remove(&subst_atom(step.pattern(), s));
                }
                StepKind::Replace => {
                    next.remove(&subst_atom(step.pattern(), s));
                    added.push(subst_atom(step.replacement().unwrap(), s));
                }
            }
        }
        next.extend(added);
        cur = next;
    }
    cur
}

pub fn db_deps(spec: &ViewSpec) -> Vec<Dependency> {
    spec.db_constraints().deps().cloned().collect()
}

pub fn view_deps(spec: &ViewSpec) -> Vec<Dependency> {
    spec.view_constraints().deps().cloned().collect()
}

/// The database satisfies its constraints and its view satisfies the view
/// constraints.
pub fn consistent(spec: &ViewSpec, db: &Facts) -> bool {
    satisfies_all(db, &db_deps(spec)) && satisfies_all(&view_of(spec, db), &view_deps(spec))
}

pub fn db_symbols(spec: &ViewSpec) -> Vec<(Name, usize)> {
    spec.db_schema().symbols().iter().map(|s| (s.name.clone(), s.arity)).collect()
}

/// Every consistent database instance over `domain`.
pub fn consistent_instances(spec: &ViewSpec, domain: &[Name]) -> Vec<Facts> {
    let deps = db_deps(spec);
    let prune = egd_prune(deps);
    let mut out = Vec::new();
    subsets(&Facts::new(), &all_facts(&db_symbols(spec), domain), usize::MAX, &prune, &mut |f| {
        if consistent(spec, f) {
            out.push(f.clone());
        }
        false
    });
    out
}

/// Consistent database instances over `domain` whose view is exactly
/// `target`, at most `limit` of them. Views are monotone, so only facts whose
/// own view lies inside `target` can take part.
pub fn preimages(spec: &ViewSpec, target: &Facts, domain: &[Name], limit: usize) -> Vec<Facts> {
    let candidates: Vec<Atom> = all_facts(&db_symbols(spec), domain)
        .into_iter()
        .filter(|f| view_of(spec, &Facts::from([f.clone()])).is_subset(target))
        .collect();
    preimages_among(spec, target, &candidates, limit)
}

pub fn preimages_among(spec: &ViewSpec, target: &Facts, candidates: &[Atom], limit: usize) -> Vec<Facts> {
    let prune = egd_prune(db_deps(spec));
    let mut found = Vec::new();
    subsets(&Facts::new(), candidates, usize::MAX, &prune, &mut |f| {
        if &view_of(spec, f) == target && consistent(spec, f) {
            found.push(f.clone());
        }
        found.len() >= limit
    });
    found
}

pub fn constants(facts: &Facts) -> Vec<Name> {
    let set: BTreeSet<Name> = facts
        .iter()
        .flat_map(|f| f.args.iter())
        .filter_map(|t| match t {
            Term::Const(c) => Some(c.clone()),
            _ => None,
        })
        .collect();
    set.into_iter().collect()
}


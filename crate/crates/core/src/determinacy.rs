//! Determinacy of database symbols by the view under constraints, view
//! invertibility, and synthesis of conjunctive rewritings.
//!
//! Determinacy is reduced to implication over a doubled schema: every
//! database symbol `R` gets a primed copy `R'`, both copies are tied to one
//! shared view, and `R` is determined iff `R(x̄) -> R'(x̄)` follows.

use std::collections::{BTreeMap, BTreeSet};

use crate::chase::{Engine, Halt};
use crate::deps::{exact_view_rules, ConstraintSet, Dependency, Egd, Provenance, Tgd, ViewSpec};
use crate::implication::{implies_with, ImplicationVerdict};
use crate::model::{evaluate_cq, name, Atom, Cq, Instance, Name, Schema, SymbolDecl, SymbolKind, Term};
use crate::options::{Options, Tri};
use crate::oracle::{differ_on, domain_with_fresh, enumerate_models, search_determinacy_counterexample, DeterminacySearch};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeterminacyError {
    #[error("`{0}` is not a database symbol")]
    NotADatabaseSymbol(String),
}

/// A conjunctive query over the view symbols defining one database symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewriting {
    pub target: Name,
    pub query: Cq,
}

impl Rewriting {
    /// The target atom with the query head as arguments.
    pub fn head_atom(&self) -> Atom {
        Atom {
            symbol: self.target.clone(),
            args: self.query.head().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    /// The two-copy chase reached the primed target.
    ChaseWitness { steps: usize },
    Rewriting(Rewriting),
}

/// Two consistent database instances with the same view image that differ
/// on the target symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub first: Instance,
    pub second: Instance,
    pub view: Instance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeterminacyVerdict {
    Determined(Certificate),
    NotDetermined(Counterexample),
    Unknown(String),
}

impl DeterminacyVerdict {
    pub fn tri(&self) -> Tri {
        match self {
            DeterminacyVerdict::Determined(_) => Tri::Yes,
            DeterminacyVerdict::NotDetermined(_) => Tri::No,
            DeterminacyVerdict::Unknown(_) => Tri::Unknown,
        }
    }
}

pub(crate) fn primed(symbol: &str) -> Name {
    name(&format!("{symbol}'"))
}

/// The doubled constraint set and its schema.
pub(crate) fn two_copy(spec: &ViewSpec) -> (ConstraintSet, Schema) {
    let db = spec.db_schema();
    let rename = |s: &str| if db.contains(s) { primed(s) } else { name(s) };
    let mut cs = spec.db_constraints();
    let defs: Vec<Dependency> = exact_view_rules(spec).into_iter().map(Dependency::from).collect();
    for d in &defs {
        cs.push(d.clone(), Provenance::Definition);
    }
    for d in spec.db_constraints().deps() {
        cs.push(d.rename_symbols(&rename), Provenance::Database);
    }
    for d in &defs {
        cs.push(d.rename_symbols(&rename), Provenance::Definition);
    }
    cs.extend(&spec.view_constraints());
    let copy = db.symbols().iter().map(|s| SymbolDecl {
        name: primed(&s.name),
        arity: s.arity,
        kind: SymbolKind::Database,
    });
    let schema = Schema::new(
        db.symbols()
            .iter()
            .cloned()
            .chain(copy)
            .chain(spec.view_schema().symbols().iter().cloned()),
    )
    .expect("primed names are fresh");
    (cs, schema)
}

fn distinct_vars(n: usize) -> Vec<Term> {
    const NAMES: [&str; 6] = ["x", "y", "z", "w", "u", "v"];
    if n <= NAMES.len() {
        NAMES[..n].iter().map(|v| Term::var(v)).collect()
    } else {
        (1..=n).map(|i| Term::var(&format!("x{i}"))).collect()
    }
}

fn target_arity(spec: &ViewSpec, target: &str) -> Result<usize, DeterminacyError> {
    spec.db_schema()
        .arity(target)
        .ok_or_else(|| DeterminacyError::NotADatabaseSymbol(target.to_string()))
}

/// Checks a counterexample directly: both instances satisfy Σ_R, their view
/// images coincide and satisfy Σ_V, and they differ on `target`.
pub fn verify_counterexample(spec: &ViewSpec, target: &str, cx: &Counterexample) -> bool {
    let sigma_r = spec.db_constraints();
    let v1 = spec.view_of(&cx.first);
    let v2 = spec.view_of(&cx.second);
    !cx.first.has_nulls()
        && !cx.second.has_nulls()
        && sigma_r.is_satisfied_by(&cx.first)
        && sigma_r.is_satisfied_by(&cx.second)
        && v1.facts() == v2.facts()
        && v1.facts() == cx.view.facts()
        && spec.view_constraints().is_satisfied_by(&v1)
        && differ_on(&cx.first, &cx.second, target)
}

pub fn determines(spec: &ViewSpec, target: &str, opts: &Options) -> Result<DeterminacyVerdict, DeterminacyError> {
    let n = target_arity(spec, target)?;
    let (cs, _) = two_copy(spec);
    let xs = distinct_vars(n);
    let goal: Dependency = Tgd::new(
        vec![Atom::new(target, xs.clone())],
        vec![Atom {
            symbol: primed(target),
            args: xs,
        }],
        Vec::new(),
    )
    .expect("full tgd")
    .into();
    let out = implies_with(&cs, &goal, opts, false);
    match out.verdict {
        ImplicationVerdict::Valid => {
            return Ok(DeterminacyVerdict::Determined(Certificate::ChaseWitness {
                steps: out.chase_steps,
            }))
        }
        ImplicationVerdict::Invalid(m) => {
            let first = m.restrict(spec.db_schema());
            let second = m
                .facts()
                .iter()
                .filter_map(|f| f.symbol.strip_suffix('\'').map(|s| f.with_symbol(name(s))))
                .filter(|f| spec.db_schema().contains(&f.symbol))
                .collect::<BTreeSet<_>>();
            let second = Instance::from_facts(spec.db_schema().clone(), second).expect("renamed copy fits");
            let view = m.restrict(spec.view_schema());
            let cx = Counterexample { first, second, view };
            if verify_counterexample(spec, target, &cx) {
                return Ok(DeterminacyVerdict::NotDetermined(cx));
            }
        }
        ImplicationVerdict::Unknown(_) => {}
    }
    let domain = domain_with_fresh(&spec.constants(), opts.domain_bound);
    match search_determinacy_counterexample(spec, target, &domain, opts.search_limit) {
        DeterminacySearch::Counterexample(first, second) => {
            let view = spec.view_of(&first);
            let cx = Counterexample { first, second, view };
            debug_assert!(verify_counterexample(spec, target, &cx));
            Ok(DeterminacyVerdict::NotDetermined(cx))
        }
        DeterminacySearch::NotFound { exhaustive } => Ok(DeterminacyVerdict::Unknown(format!(
            "two-copy chase exceeded the budget of {} steps; no counterexample over {} fresh constants{}",
            opts.budget,
            opts.domain_bound,
            if exhaustive { "" } else { " within the search limit" }
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invertibility {
    pub invertible: Tri,
    /// One verdict per database symbol, in schema order.
    pub verdicts: Vec<(Name, DeterminacyVerdict)>,
}

pub fn is_invertible(spec: &ViewSpec, opts: &Options) -> Invertibility {
    let verdicts: Vec<(Name, DeterminacyVerdict)> = spec
        .db_schema()
        .symbols()
        .iter()
        .map(|s| (s.name.clone(), determines(spec, &s.name, opts).expect("symbol from the schema")))
        .collect();
    let invertible = verdicts.iter().fold(Tri::Yes, |acc, (_, v)| acc.and(v.tri()));
    Invertibility { invertible, verdicts }
}

/// Equivalence of `rw` and its target under the global constraints,
/// spot-checked on small consistent instances.
pub fn verify_rewriting(spec: &ViewSpec, rw: &Rewriting, opts: &Options) -> bool {
    let Some(arity) = spec.db_schema().arity(&rw.target) else { return false };
    let head = rw.query.head();
    if head.len() != arity || !head.iter().all(Term::is_var) {
        return false;
    }
    if rw.query.body().iter().any(|a| spec.view_schema().check_atom(a).is_err()) {
        return false;
    }
    let cs = spec.global_constraints();
    let target = rw.head_atom();
    // A repeated head variable needs the constraints to force the equality.
    let xs = distinct_vars(arity);
    let generic = Atom::new(&rw.target, xs.clone());
    let mut goals: Vec<Dependency> = Vec::new();
    for i in 0..arity {
        if let Some(j) = (0..i).find(|&j| head[j] == head[i]) {
            let (Term::Var(l), Term::Var(r)) = (&xs[j], &xs[i]) else { unreachable!() };
            let Ok(egd) = Egd::new(vec![generic.clone()], l.clone(), r.clone()) else { return false };
            goals.push(egd.into());
        }
    }
    let Ok(down) = Tgd::new(vec![target.clone()], rw.query.body().to_vec(), rw.query.existential_vars()) else {
        return false;
    };
    let Ok(up) = Tgd::infer(rw.query.body().to_vec(), vec![target]) else { return false };
    goals.push(down.into());
    goals.push(up.into());
    for goal in goals {
        if !implies_with(&cs, &goal, opts, true).verdict.is_valid() {
            return false;
        }
    }
    spot_check(spec, rw, opts)
}

const SPOT_CHECK_DOMAIN: usize = 2;
const SPOT_CHECK_INSTANCES: usize = 64;

fn spot_check(spec: &ViewSpec, rw: &Rewriting, opts: &Options) -> bool {
    let mut cs = spec.db_constraints();
    cs.extend(&ConstraintSet::new());
    enumerate_models(&cs, spec.db_schema(), SPOT_CHECK_DOMAIN)
        .with_limit(opts.search_limit)
        .filter(|db| spec.view_constraints().is_satisfied_by(&spec.view_of(db)))
        .take(SPOT_CHECK_INSTANCES)
        .all(|db| {
            let expected: BTreeSet<Vec<Term>> = db.facts_of(&rw.target).map(|f| f.args.clone()).collect();
            evaluate_cq(&rw.query, &spec.view_of(&db)) == expected
        })
}

/// Most view facts considered when assembling rewriting bodies.
const MAX_CANDIDATE_ATOMS: usize = 24;

/// Chase-and-backchase: chases the canonical instance of `target` with the
/// global constraints and tries bodies built from the resulting view facts,
/// smallest first.
pub fn synthesize_rewriting(
    spec: &ViewSpec,
    target: &str,
    opts: &Options,
) -> Result<Option<Rewriting>, DeterminacyError> {
    let n = target_arity(spec, target)?;
    let canonical = Atom::new(target, (1..=n as u32).map(Term::Null).collect());
    let mut start = Instance::empty(spec.schema());
    start.insert_trusted(canonical);
    let cs = spec.global_constraints();
    let mut engine = Engine::new(start, cs.deps().cloned().collect(), opts.budget);
    if engine.run(&mut |_| false) != Halt::Fixpoint {
        return Ok(None);
    }
    // Egds may have merged head positions or bound them to constants.
    let head_terms: Vec<Term> = (1..=n as u32).map(|i| engine.resolve(&Term::Null(i))).collect();
    let xs = distinct_vars(n);
    let mut rename: BTreeMap<Term, Term> = BTreeMap::new();
    for (t, x) in head_terms.iter().zip(&xs) {
        if t.is_null() && !rename.contains_key(t) {
            rename.insert(t.clone(), x.clone());
        }
    }
    let candidates: Vec<Atom> = engine
        .instance()
        .iter()
        .filter(|f| spec.view_schema().contains(&f.symbol))
        .take(MAX_CANDIDATE_ATOMS)
        .cloned()
        .collect();

    for size in 1..=opts.max_atoms.min(candidates.len()) {
        let mut pick: Vec<usize> = (0..size).collect();
        loop {
            let body: Vec<&Atom> = pick.iter().map(|&i| &candidates[i]).collect();
            if let Some(rw) = build_candidate(target, &head_terms, &rename, &body) {
                if verify_rewriting(spec, &rw, opts) {
                    return Ok(Some(rw));
                }
            }
            if !next_combination(&mut pick, candidates.len()) {
                break;
            }
        }
    }
    Ok(None)
}

/// Lexicographic successor of a strictly increasing index vector.
fn next_combination(pick: &mut [usize], n: usize) -> bool {
    let k = pick.len();
    for i in (0..k).rev() {
        if pick[i] < n - k + i {
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn build_candidate(
    target: &str,
    head_terms: &[Term],
    rename: &BTreeMap<Term, Term>,
    body: &[&Atom],
) -> Option<Rewriting> {
    let head: Vec<Term> = head_terms.iter().map(|t| rename.get(t).unwrap_or(t).clone()).collect();
    let mut rename = rename.clone();
    let mut next = 1;
    let body: Vec<Atom> = body
        .iter()
        .map(|a| Atom {
            symbol: a.symbol.clone(),
            args: a
                .args
                .iter()
                .map(|t| match t {
                    Term::Null(_) => rename
                        .entry(t.clone())
                        .or_insert_with(|| {
                            let v = Term::var(&format!("e{next}"));
                            next += 1;
                            v
                        })
                        .clone(),
                    other => other.clone(),
                })
                .collect(),
        })
        .collect();
    let query = Cq::new(head, body).ok()?;
    Some(Rewriting {
        target: name(target),
        query,
    })
}

/// Rebuilds a database instance from a view instance by evaluating one
/// rewriting per database symbol.
pub fn reconstruct(db_schema: &Schema, rewritings: &[Rewriting], view: &Instance) -> Instance {
    let mut out = Instance::empty(db_schema.clone());
    for rw in rewritings {
        for args in evaluate_cq(&rw.query, view) {
            out.insert_trusted(Atom {
                symbol: rw.target.clone(),
                args,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deps::{Egd, ViewDefinition};

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    fn atom(sym: &str, vars: &[&str]) -> Atom {
        Atom::new(sym, vars.iter().map(|x| v(x)).collect())
    }

    fn def(sym: &str, head: &[&str], body: Vec<Atom>) -> ViewDefinition {
        ViewDefinition {
            symbol: name(sym),
            query: Cq::new(head.iter().map(|x| v(x)).collect(), body).unwrap(),
        }
    }

    fn copy_view() -> ViewSpec {
        ViewSpec::new(
            Schema::database(&[("R", 1)]).unwrap(),
            Schema::view(&[("V", 1)]).unwrap(),
            vec![def("V", &["x"], vec![atom("R", &["x"])])],
            ConstraintSet::new(),
        )
        .unwrap()
    }

    fn lossy() -> ViewSpec {
        ViewSpec::new(
            Schema::database(&[("R", 2)]).unwrap(),
            Schema::view(&[("V", 1)]).unwrap(),
            vec![def("V", &["x"], vec![atom("R", &["x", "y"])])],
            ConstraintSet::new(),
        )
        .unwrap()
    }

    fn split(with_fd: bool) -> ViewSpec {
        let mut cs = ConstraintSet::new();
        if with_fd {
            cs.push(Egd::functional("R", 3, &[1], 2), Provenance::Database);
        }
        ViewSpec::new(
            Schema::database(&[("R", 3)]).unwrap(),
            Schema::view(&[("V1", 2), ("V2", 2)]).unwrap(),
            vec![
                def("V1", &["x", "y"], vec![atom("R", &["x", "y", "z"])]),
                def("V2", &["y", "z"], vec![atom("R", &["x", "y", "z"])]),
            ],
            cs,
        )
        .unwrap()
    }

    #[test]
    fn copy_view_determines() {
        let o = Options::default();
        assert_eq!(determines(&copy_view(), "R", &o).unwrap().tri(), Tri::Yes);
        let rw = synthesize_rewriting(&copy_view(), "R", &o).unwrap().unwrap();
        assert_eq!(rw.query.body(), &[atom("V", &["x"])]);
    }

    #[test]
    fn lossy_projection_counterexample() {
        let o = Options::default();
        let DeterminacyVerdict::NotDetermined(cx) = determines(&lossy(), "R", &o).unwrap() else { panic!() };
        assert_eq!(cx.first.facts().iter().cloned().collect::<Vec<_>>(), vec![Atom::fact("R", &["a", "b"])]);
        assert_eq!(cx.second.facts().iter().cloned().collect::<Vec<_>>(), vec![Atom::fact("R", &["a", "c"])]);
        assert!(synthesize_rewriting(&lossy(), "R", &o).unwrap().is_none());
        assert_eq!(is_invertible(&lossy(), &o).invertible, Tri::No);
    }

    #[test]
    fn split_with_fd_is_joined_back() {
        let o = Options::default();
        assert_eq!(is_invertible(&split(true), &o).invertible, Tri::Yes);
        let rw = synthesize_rewriting(&split(true), "R", &o).unwrap().unwrap();
        assert_eq!(rw.query.body(), &[atom("V1", &["x", "y"]), atom("V2", &["y", "z"])]);
        assert!(!verify_rewriting(&split(false), &rw, &o));
        assert_eq!(determines(&split(false), "R", &o).unwrap().tri(), Tri::No);
    }

    #[test]
    fn unknown_symbol_is_an_error() {
        assert!(determines(&copy_view(), "V", &Options::default()).is_err());
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut p = vec![0, 1];
        let mut seen = vec![p.clone()];
        while next_combination(&mut p, 4) {
            seen.push(p.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }
}

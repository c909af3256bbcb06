//! Constraints (tgds, egds), their classification, exact view definitions and
//! the view specification tying database and view schemas together.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::matcher::{self, Binding, FactSource};
use crate::model::{evaluate_cq, Atom, Cq, Instance, ModelError, Name, Schema, SymbolKind, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DependencyError {
    #[error("head variable `{0}` is neither in the body nor declared existential")]
    UnsafeHead(String),
    #[error("existential variable `{0}` also occurs in the body")]
    ExistentialInBody(String),
    #[error("existential variable `{0}` does not occur in the head")]
    UnusedExistential(String),
    #[error("equated variable `{0}` does not occur in the body")]
    UnboundEquality(String),
    #[error("tgd head is empty")]
    EmptyHead,
}

/// Tuple-generating dependency `body -> exists existentials: head`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tgd {
    body: Vec<Atom>,
    head: Vec<Atom>,
    existentials: Vec<Name>,
}

impl Tgd {
    pub fn new(body: Vec<Atom>, head: Vec<Atom>, existentials: Vec<Name>) -> Result<Self, DependencyError> {
        if head.is_empty() {
            return Err(DependencyError::EmptyHead);
        }
        let body_vars: BTreeSet<&Name> = body.iter().flat_map(Atom::vars).collect();
        let head_vars: BTreeSet<&Name> = head.iter().flat_map(Atom::vars).collect();
        for e in &existentials {
            if body_vars.contains(e) {
                return Err(DependencyError::ExistentialInBody(e.to_string()));
            }
            if !head_vars.contains(e) {
                return Err(DependencyError::UnusedExistential(e.to_string()));
            }
        }
        for v in head_vars {
            if !body_vars.contains(v) && !existentials.contains(v) {
                return Err(DependencyError::UnsafeHead(v.to_string()));
            }
        }
        Ok(Tgd {
            body,
            head,
            existentials,
        })
    }

    /// Builds a tgd treating every head-only variable as existential.
    pub fn infer(body: Vec<Atom>, head: Vec<Atom>) -> Result<Self, DependencyError> {
        let body_vars: BTreeSet<Name> = body.iter().flat_map(Atom::vars).cloned().collect();
        let mut existentials: Vec<Name> = Vec::new();
        for v in head.iter().flat_map(Atom::vars) {
            if !body_vars.contains(v) && !existentials.contains(v) {
                existentials.push(v.clone());
            }
        }
        Tgd::new(body, head, existentials)
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn head(&self) -> &[Atom] {
        &self.head
    }

    pub fn existentials(&self) -> &[Name] {
        &self.existentials
    }

    pub fn is_full(&self) -> bool {
        self.existentials.is_empty()
    }
}

/// Equality-generating dependency `body -> left = right`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Egd {
    body: Vec<Atom>,
    left: Name,
    right: Name,
}

impl Egd {
    pub fn new(body: Vec<Atom>, left: Name, right: Name) -> Result<Self, DependencyError> {
        let body_vars: BTreeSet<&Name> = body.iter().flat_map(Atom::vars).collect();
        for v in [&left, &right] {
            if !body_vars.contains(v) {
                return Err(DependencyError::UnboundEquality(v.to_string()));
            }
        }
        Ok(Egd { body, left, right })
    }

    /// The egd expressing the functional dependency `lhs -> rhs` on `symbol`.
    pub fn functional(symbol: &str, arity: usize, lhs: &[usize], rhs: usize) -> Self {
        let var = |p: usize, copy: usize| {
            if lhs.contains(&p) {
                Term::Var(crate::model::name(&format!("k{p}")))
            } else {
                Term::Var(crate::model::name(&format!("v{p}_{copy}")))
            }
        };
        let a1 = Atom::new(symbol, (0..arity).map(|p| var(p, 1)).collect());
        let a2 = Atom::new(symbol, (0..arity).map(|p| var(p, 2)).collect());
        Egd::new(
            vec![a1, a2],
            crate::model::name(&format!("v{rhs}_1")),
            crate::model::name(&format!("v{rhs}_2")),
        )
        .expect("fd egd is well formed")
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn left(&self) -> &Name {
        &self.left
    }

    pub fn right(&self) -> &Name {
        &self.right
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Dependency {
    Tgd(Tgd),
    Egd(Egd),
}

impl Dependency {
    pub fn body(&self) -> &[Atom] {
        match self {
            Dependency::Tgd(t) => t.body(),
            Dependency::Egd(e) => e.body(),
        }
    }

    /// Every atom mentioned, body first.
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        let head: &[Atom] = match self {
            Dependency::Tgd(t) => t.head(),
            Dependency::Egd(_) => &[],
        };
        self.body().iter().chain(head.iter())
    }

    pub fn symbols(&self) -> BTreeSet<Name> {
        self.atoms().map(|a| a.symbol.clone()).collect()
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.atoms()
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                _ => None,
            })
            .collect()
    }

    /// Renames every symbol through `f`.
    pub fn rename_symbols(&self, f: &dyn Fn(&str) -> Name) -> Dependency {
        let ren = |atoms: &[Atom]| atoms.iter().map(|a| a.with_symbol(f(&a.symbol))).collect::<Vec<_>>();
        match self {
            Dependency::Tgd(t) => Dependency::Tgd(Tgd {
                body: ren(&t.body),
                head: ren(&t.head),
                existentials: t.existentials.clone(),
            }),
            Dependency::Egd(e) => Dependency::Egd(Egd {
                body: ren(&e.body),
                left: e.left.clone(),
                right: e.right.clone(),
            }),
        }
    }

    /// A body match witnessing that `inst` violates this dependency.
    pub fn violation(&self, inst: &Instance) -> Option<Binding> {
        let mut found = None;
        let _ = matcher::for_each_match(self.body(), inst, &Binding::new(), Term::is_var, &mut |b| {
            if !self.head_holds(inst, b) {
                found = Some(b.clone());
                return std::ops::ControlFlow::Break(());
            }
            std::ops::ControlFlow::Continue(())
        });
        found
    }

    pub fn is_satisfied_by(&self, inst: &Instance) -> bool {
        self.violation(inst).is_none()
    }

    /// Whether the head holds in `inst` under the body match `b`.
    pub(crate) fn head_holds<S: FactSource + ?Sized>(&self, inst: &S, b: &Binding) -> bool {
        match self {
            Dependency::Tgd(t) => matcher::first_match(&t.head, inst, b, Term::is_var).is_some(),
            Dependency::Egd(e) => {
                matcher::resolve(b, &Term::Var(e.left.clone()))
                    == matcher::resolve(b, &Term::Var(e.right.clone()))
            }
        }
    }
}

impl From<Tgd> for Dependency {
    fn from(t: Tgd) -> Self {
        Dependency::Tgd(t)
    }
}

impl From<Egd> for Dependency {
    fn from(e: Egd) -> Self {
        Dependency::Egd(e)
    }
}

fn write_atoms(f: &mut fmt::Formatter<'_>, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

impl fmt::Display for Dependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dependency::Tgd(t) => {
                write_atoms(f, &t.body)?;
                write!(f, " -> ")?;
                if !t.existentials.is_empty() {
                    let ex: Vec<&str> = t.existentials.iter().map(|e| &**e).collect();
                    write!(f, "exists {}: ", ex.join(", "))?;
                }
                write_atoms(f, &t.head)
            }
            Dependency::Egd(e) => {
                write_atoms(f, &e.body)?;
                write!(f, " -> {} = {}", e.left, e.right)
            }
        }
    }
}

/// Where a dependency comes from: database constraints, view constraints or
/// the exact view definitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Database,
    View,
    Definition,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintSet {
    entries: Vec<(Dependency, Provenance)>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_deps(deps: impl IntoIterator<Item = Dependency>, provenance: Provenance) -> Self {
        ConstraintSet {
            entries: deps.into_iter().map(|d| (d, provenance)).collect(),
        }
    }

    pub fn push(&mut self, dep: impl Into<Dependency>, provenance: Provenance) {
        self.entries.push((dep.into(), provenance));
    }

    pub fn extend(&mut self, other: &ConstraintSet) {
        self.entries.extend(other.entries.iter().cloned());
    }

    pub fn entries(&self) -> &[(Dependency, Provenance)] {
        &self.entries
    }

    pub fn deps(&self) -> impl Iterator<Item = &Dependency> {
        self.entries.iter().map(|(d, _)| d)
    }

    pub fn with_provenance(&self, p: Provenance) -> impl Iterator<Item = &Dependency> {
        self.entries.iter().filter(move |(_, q)| *q == p).map(|(d, _)| d)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_satisfied_by(&self, inst: &Instance) -> bool {
        self.deps().all(|d| d.is_satisfied_by(inst))
    }

    /// Symbol arities used by the dependencies, in first-use order.
    pub fn signature(&self) -> Vec<(Name, usize)> {
        let mut out: Vec<(Name, usize)> = Vec::new();
        for a in self.deps().flat_map(Dependency::atoms) {
            if !out.iter().any(|(n, _)| *n == a.symbol) {
                out.push((a.symbol.clone(), a.arity()));
            }
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.deps().flat_map(Dependency::constants).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DepKind {
    Tgd,
    Egd,
}

/// Functional dependency `lhs -> rhs` over positions of one symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionalDependency {
    pub symbol: String,
    pub lhs: Vec<usize>,
    pub rhs: usize,
}

/// Join dependency: the symbol equals the join of its projections on the
/// listed position sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JoinDependency {
    pub symbol: String,
    pub components: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub full: bool,
    pub kind: DepKind,
    pub fd: Option<FunctionalDependency>,
    pub jd: Option<JoinDependency>,
}

pub fn classify(dep: &Dependency) -> Classification {
    match dep {
        Dependency::Tgd(t) => Classification {
            full: t.is_full(),
            kind: DepKind::Tgd,
            fd: None,
            jd: as_join_dependency(t),
        },
        Dependency::Egd(e) => Classification {
            full: true,
            kind: DepKind::Egd,
            fd: as_functional_dependency(e),
            jd: None,
        },
    }
}

fn var_counts<'a>(atoms: impl Iterator<Item = &'a Atom>) -> BTreeMap<&'a Name, usize> {
    let mut counts = BTreeMap::new();
    for v in atoms.flat_map(Atom::vars) {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts
}

fn as_functional_dependency(e: &Egd) -> Option<FunctionalDependency> {
    let [a, b] = e.body() else { return None };
    if a.symbol != b.symbol || !a.args.iter().chain(&b.args).all(Term::is_var) {
        return None;
    }
    let counts = var_counts([a, b].into_iter());
    let mut lhs = Vec::new();
    let mut rhs = None;
    for (p, (x, y)) in a.args.iter().zip(&b.args).enumerate() {
        let (Term::Var(xv), Term::Var(yv)) = (x, y) else { return None };
        if xv == yv {
            if counts[xv] != 2 {
                return None;
            }
            lhs.push(p);
        } else {
            if counts[xv] != 1 || counts[yv] != 1 {
                return None;
            }
            let equated = (xv == e.left() && yv == e.right()) || (xv == e.right() && yv == e.left());
            if equated {
                rhs = Some(p);
            }
        }
    }
    Some(FunctionalDependency {
        symbol: a.symbol.to_string(),
        lhs,
        rhs: rhs?,
    })
}

fn as_join_dependency(t: &Tgd) -> Option<JoinDependency> {
    let [head] = t.head() else { return None };
    if t.body().len() < 2 || !t.is_full() {
        return None;
    }
    let head_vars: Vec<&Name> = head
        .args
        .iter()
        .map(|a| match a {
            Term::Var(v) => Some(v),
            _ => None,
        })
        .collect::<Option<_>>()?;
    if head_vars.iter().collect::<BTreeSet<_>>().len() != head_vars.len() {
        return None;
    }
    let counts = var_counts(t.body().iter());
    let mut components = Vec::new();
    let mut covered = BTreeSet::new();
    for atom in t.body() {
        if atom.symbol != head.symbol || atom.arity() != head.arity() {
            return None;
        }
        let mut comp = Vec::new();
        for (p, arg) in atom.args.iter().enumerate() {
            let Term::Var(v) = arg else { return None };
            if v == head_vars[p] {
                comp.push(p);
                covered.insert(p);
            } else if head_vars.contains(&v) || counts[v] != 1 {
                return None;
            }
        }
        components.push(comp);
    }
    (covered.len() == head.arity()).then(|| JoinDependency {
        symbol: head.symbol.to_string(),
        components,
    })
}

/// Exact definition `V(head) :- body` of one view symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewDefinition {
    pub symbol: Name,
    pub query: Cq,
}

impl ViewDefinition {
    pub fn head_atom(&self) -> Atom {
        Atom {
            symbol: self.symbol.clone(),
            args: self.query.head().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("view symbol `{0}` has no definition")]
    MissingDefinition(String),
    #[error("view symbol `{0}` is defined more than once")]
    DuplicateDefinition(String),
    #[error("`{0}` is not a view symbol")]
    NotAViewSymbol(String),
    #[error("definition of `{0}` must range over database symbols only")]
    DefinitionOverViews(String),
    #[error("{provenance:?} constraint mentions `{symbol}` of the wrong schema")]
    MisplacedConstraint { provenance: Provenance, symbol: String },
    #[error("definition dependencies are derived, not declared")]
    DeclaredDefinitionRule,
}

/// Database and view schemas, exact view definitions and constraints; it
/// induces the view mapping `f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewSpec {
    db_schema: Schema,
    view_schema: Schema,
    defs: Vec<ViewDefinition>,
    constraints: ConstraintSet,
}

impl ViewSpec {
    /// Checks every structural invariant. `constraints` holds the database and
    /// view constraints; definition rules are derived from `defs`.
    pub fn new(
        db_schema: Schema,
        view_schema: Schema,
        defs: Vec<ViewDefinition>,
        constraints: ConstraintSet,
    ) -> Result<Self, SpecError> {
        let all = db_schema.union(&view_schema)?;
        let mut seen = BTreeSet::new();
        for d in &defs {
            let decl = all
                .get(&d.symbol)
                .ok_or_else(|| ModelError::UnknownSymbol(d.symbol.to_string()))?;
            if decl.kind != SymbolKind::View {
                return Err(SpecError::NotAViewSymbol(d.symbol.to_string()));
            }
            all.check_atom(&d.head_atom())?;
            if !seen.insert(d.symbol.clone()) {
                return Err(SpecError::DuplicateDefinition(d.symbol.to_string()));
            }
            for a in d.query.body() {
                db_schema.check_atom(a).map_err(|e| match e {
                    ModelError::UnknownSymbol(s) if view_schema.contains(&s) => {
                        SpecError::DefinitionOverViews(d.symbol.to_string())
                    }
                    e => e.into(),
                })?;
            }
        }
        if let Some(v) = view_schema.symbols().iter().find(|v| !seen.contains(&v.name)) {
            return Err(SpecError::MissingDefinition(v.name.to_string()));
        }
        for (dep, prov) in constraints.entries() {
            let home = match prov {
                Provenance::Database => &db_schema,
                Provenance::View => &view_schema,
                Provenance::Definition => return Err(SpecError::DeclaredDefinitionRule),
            };
            for a in dep.atoms() {
                all.check_atom(a)?;
                if !home.contains(&a.symbol) {
                    return Err(SpecError::MisplacedConstraint {
                        provenance: *prov,
                        symbol: a.symbol.to_string(),
                    });
                }
            }
        }
        let mut defs = defs;
        defs.sort_by_key(|d| view_schema.symbols().iter().position(|s| s.name == d.symbol));
        Ok(ViewSpec {
            db_schema,
            view_schema,
            defs,
            constraints,
        })
    }

    pub fn db_schema(&self) -> &Schema {
        &self.db_schema
    }

    pub fn view_schema(&self) -> &Schema {
        &self.view_schema
    }

    /// Union of database and view schemas.
    pub fn schema(&self) -> Schema {
        self.db_schema.union(&self.view_schema).expect("validated disjoint")
    }

    /// Definitions in view-schema order.
    pub fn defs(&self) -> &[ViewDefinition] {
        &self.defs
    }

    pub fn definition(&self, symbol: &str) -> Option<&ViewDefinition> {
        self.defs.iter().find(|d| &*d.symbol == symbol)
    }

    /// Declared database and view constraints.
    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn db_constraints(&self) -> ConstraintSet {
        ConstraintSet::from_deps(
            self.constraints.with_provenance(Provenance::Database).cloned(),
            Provenance::Database,
        )
    }

    pub fn view_constraints(&self) -> ConstraintSet {
        ConstraintSet::from_deps(
            self.constraints.with_provenance(Provenance::View).cloned(),
            Provenance::View,
        )
    }

    /// Σ_R, then the definition rules, then Σ_V.
    pub fn global_constraints(&self) -> ConstraintSet {
        let mut cs = self.db_constraints();
        for t in exact_view_rules(self) {
            cs.push(t, Provenance::Definition);
        }
        cs.extend(&self.view_constraints());
        cs
    }

    /// The view mapping: evaluates every definition on a database instance.
    pub fn view_of(&self, db: &Instance) -> Instance {
        let mut out = Instance::empty(self.view_schema.clone());
        for d in &self.defs {
            for tuple in evaluate_cq(&d.query, db) {
                out.insert_trusted(Atom {
                    symbol: d.symbol.clone(),
                    args: tuple,
                });
            }
        }
        out
    }

    /// `db` satisfies Σ_R and its view image satisfies Σ_V.
    pub fn is_consistent(&self, db: &Instance) -> bool {
        self.db_constraints().is_satisfied_by(db) && self.view_constraints().is_satisfied_by(&self.view_of(db))
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        let mut out = self.constraints.constants();
        for d in &self.defs {
            for t in d.query.head().iter().chain(d.query.body().iter().flat_map(|a| a.args.iter())) {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        }
        out
    }
}

/// The two containment tgds per view symbol that make its definition exact:
/// `body -> V(head)` and `V(head) -> exists ȳ: body`.
pub fn exact_view_rules(spec: &ViewSpec) -> Vec<Tgd> {
    let mut out = Vec::with_capacity(2 * spec.defs.len());
    for d in &spec.defs {
        let head = d.head_atom();
        out.push(
            Tgd::new(d.query.body().to_vec(), vec![head.clone()], Vec::new())
                .expect("safe definition gives a full forward rule"),
        );
        out.push(
            Tgd::new(vec![head], d.query.body().to_vec(), d.query.existential_vars())
                .expect("backward rule is safe"),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::name;

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    fn atom(sym: &str, vars: &[&str]) -> Atom {
        Atom::new(sym, vars.iter().map(|x| v(x)).collect())
    }

    #[test]
    fn classify_examples() {
        let full = Tgd::infer(vec![atom("R", &["x", "y"])], vec![atom("S", &["x", "y"])]).unwrap();
        let c = classify(&full.into());
        assert!(c.full);
        assert_eq!(c.kind, DepKind::Tgd);

        let emb = Tgd::infer(vec![atom("R", &["x", "y"])], vec![atom("S", &["y", "z"])]).unwrap();
        let c = classify(&emb.into());
        assert!(!c.full);
        assert_eq!(c.kind, DepKind::Tgd);

        let fd = Egd::new(
            vec![atom("R", &["x", "y"]), atom("R", &["x", "z"])],
            name("y"),
            name("z"),
        )
        .unwrap();
        let c = classify(&fd.into());
        assert!(c.full);
        assert_eq!(c.kind, DepKind::Egd);
        assert_eq!(
            c.fd,
            Some(FunctionalDependency {
                symbol: "R".into(),
                lhs: vec![0],
                rhs: 1
            })
        );
    }

    #[test]
    fn functional_constructor_is_recognised() {
        let e = Egd::functional("R", 3, &[1], 2);
        let c = classify(&e.into());
        assert_eq!(c.fd.unwrap().lhs, vec![1]);
    }

    #[test]
    fn join_dependency_is_recognised() {
        let jd = Tgd::infer(
            vec![atom("R", &["x", "y", "z1"]), atom("R", &["x1", "y", "z"])],
            vec![atom("R", &["x", "y", "z"])],
        )
        .unwrap();
        let c = classify(&jd.into());
        assert_eq!(
            c.jd,
            Some(JoinDependency {
                symbol: "R".into(),
                components: vec![vec![0, 1], vec![1, 2]]
            })
        );
    }

    #[test]
    fn egd_needing_a_constant_is_not_an_fd() {
        let e = Egd::new(
            vec![Atom::new("R", vec![v("x"), v("y")]), Atom::new("R", vec![v("x"), v("x")])],
            name("x"),
            name("y"),
        )
        .unwrap();
        assert_eq!(classify(&e.into()).fd, None);
    }

    #[test]
    fn tgd_validation() {
        assert_eq!(
            Tgd::new(vec![atom("R", &["x"])], vec![atom("S", &["y"])], vec![]),
            Err(DependencyError::UnsafeHead("y".into()))
        );
        assert_eq!(
            Tgd::new(vec![atom("R", &["x"])], vec![atom("S", &["x"])], vec![name("x")]),
            Err(DependencyError::ExistentialInBody("x".into()))
        );
        assert!(Egd::new(vec![atom("R", &["x"])], name("x"), name("y")).is_err());
    }

    fn spec(defs: Vec<(&str, Vec<&str>, Vec<Atom>)>, db: &[(&str, usize)], view: &[(&str, usize)]) -> ViewSpec {
        ViewSpec::new(
            Schema::database(db).unwrap(),
            Schema::view(view).unwrap(),
            defs.into_iter()
                .map(|(s, head, body)| ViewDefinition {
                    symbol: name(s),
                    query: Cq::new(head.into_iter().map(v).collect(), body).unwrap(),
                })
                .collect(),
            ConstraintSet::new(),
        )
        .unwrap()
    }

    #[test]
    fn exact_rules_for_copy_view() {
        let s = spec(vec![("V", vec!["x"], vec![atom("R", &["x"])])], &[("R", 1)], &[("V", 1)]);
        let rules = exact_view_rules(&s);
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[0].body(), &[atom("R", &["x"])]);
        assert_eq!(rules[0].head(), &[atom("V", &["x"])]);
        assert_eq!(rules[1].body(), &[atom("V", &["x"])]);
        assert!(rules.iter().all(Tgd::is_full));
    }

    #[test]
    fn exact_rules_for_projection_and_join() {
        let s = spec(
            vec![("V", vec!["x", "y"], vec![atom("R", &["x", "y", "z"])])],
            &[("R", 3)],
            &[("V", 2)],
        );
        let rules = exact_view_rules(&s);
        assert!(rules[0].is_full());
        assert_eq!(rules[1].existentials(), &[name("z")]);

        let s = spec(
            vec![("V", vec!["x", "z"], vec![atom("R", &["x", "y"]), atom("S", &["y", "z"])])],
            &[("R", 2), ("S", 2)],
            &[("V", 2)],
        );
        let rules = exact_view_rules(&s);
        assert!(rules[0].is_full());
        assert_eq!(rules[1].existentials(), &[name("y")]);
        assert_eq!(rules[1].head().len(), 2);
    }

    #[test]
    fn spec_rejects_missing_and_misplaced() {
        let err = ViewSpec::new(
            Schema::database(&[("R", 1)]).unwrap(),
            Schema::view(&[("V", 1)]).unwrap(),
            vec![],
            ConstraintSet::new(),
        )
        .unwrap_err();
        assert_eq!(err, SpecError::MissingDefinition("V".into()));

        let mut cs = ConstraintSet::new();
        cs.push(
            Tgd::infer(vec![atom("V", &["x"])], vec![atom("V", &["x"])]).unwrap(),
            Provenance::Database,
        );
        let err = ViewSpec::new(
            Schema::database(&[("R", 1)]).unwrap(),
            Schema::view(&[("V", 1)]).unwrap(),
            vec![ViewDefinition {
                symbol: name("V"),
                query: Cq::new(vec![v("x")], vec![atom("R", &["x"])]).unwrap(),
            }],
            cs,
        )
        .unwrap_err();
        assert!(matches!(err, SpecError::MisplacedConstraint { .. }));
    }
}

//! Relational vocabulary: schemas, terms, atoms, instances, homomorphisms,
//! conjunctive queries and instance deltas.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::matcher::{self, Binding};

/// Interned identifier used for symbol, constant and variable names.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("symbol `{0}` is declared more than once")]
    SchemaCollision(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{symbol}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("fact `{0}` contains a variable")]
    NonGroundFact(String),
    #[error("unsafe query: head variable `{0}` does not occur in the body")]
    UnsafeQuery(String),
}

/// A first-order term. Variables only occur inside rules, queries and
/// updates; stored instances hold constants and labeled nulls.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Name),
    Null(u32),
    Var(Name),
}

impl Term {
    pub fn constant(s: &str) -> Self {
        Term::Const(name(s))
    }

    pub fn var(s: &str) -> Self {
        Term::Var(name(s))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_ground(&self) -> bool {
        !self.is_var()
    }
}

pub(crate) fn is_plain_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) if is_plain_identifier(c) => write!(f, "{c}"),
            Term::Const(c) => write!(f, "{c:?}"),
            Term::Null(i) => write!(f, "_n{i}"),
            Term::Var(v) => write!(f, "?{v}"),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A relational atom. When all arguments are constants or nulls it is a fact.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub symbol: Name,
    pub args: Vec<Term>,
}

pub type Fact = Atom;

impl Atom {
    pub fn new(symbol: &str, args: Vec<Term>) -> Self {
        Atom {
            symbol: name(symbol),
            args,
        }
    }

    /// Builds a fact from constant names.
    pub fn fact(symbol: &str, args: &[&str]) -> Self {
        Atom::new(symbol, args.iter().map(|a| Term::constant(a)).collect())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Name> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            _ => None,
        })
    }

    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> Atom {
        Atom {
            symbol: self.symbol.clone(),
            args: self.args.iter().map(f).collect(),
        }
    }

    pub fn with_symbol(&self, symbol: Name) -> Atom {
        Atom {
            symbol,
            args: self.args.clone(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.symbol)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Database,
    View,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolDecl {
    pub name: Name,
    pub arity: usize,
    pub kind: SymbolKind,
}

/// An ordered set of relation symbols. Cheap to clone.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    symbols: Arc<Vec<SymbolDecl>>,
}

impl Schema {
    pub fn new(decls: impl IntoIterator<Item = SymbolDecl>) -> Result<Self, ModelError> {
        let mut symbols: Vec<SymbolDecl> = Vec::new();
        for d in decls {
            if symbols.iter().any(|s| s.name == d.name) {
                return Err(ModelError::SchemaCollision(d.name.to_string()));
            }
            symbols.push(d);
        }
        Ok(Schema {
            symbols: Arc::new(symbols),
        })
    }

    pub fn of_kind(kind: SymbolKind, symbols: &[(&str, usize)]) -> Result<Self, ModelError> {
        Schema::new(symbols.iter().map(|(n, a)| SymbolDecl {
            name: name(n),
            arity: *a,
            kind,
        }))
    }

    pub fn database(symbols: &[(&str, usize)]) -> Result<Self, ModelError> {
        Schema::of_kind(SymbolKind::Database, symbols)
    }

    pub fn view(symbols: &[(&str, usize)]) -> Result<Self, ModelError> {
        Schema::of_kind(SymbolKind::View, symbols)
    }

    pub fn symbols(&self) -> &[SymbolDecl] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, symbol: &str) -> Option<&SymbolDecl> {
        self.symbols.iter().find(|s| &*s.name == symbol)
    }

    pub fn arity(&self, symbol: &str) -> Option<usize> {
        self.get(symbol).map(|s| s.arity)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.get(symbol).is_some()
    }

    /// Union of two schemas; fails if any symbol name is shared.
    pub fn union(&self, other: &Schema) -> Result<Schema, ModelError> {
        Schema::new(self.symbols.iter().chain(other.symbols.iter()).cloned())
    }

    /// The subschema of symbols accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(&SymbolDecl) -> bool) -> Schema {
        Schema {
            symbols: Arc::new(self.symbols.iter().filter(|s| keep(s)).cloned().collect()),
        }
    }

    pub fn check_atom(&self, atom: &Atom) -> Result<(), ModelError> {
        let expected = self
            .arity(&atom.symbol)
            .ok_or_else(|| ModelError::UnknownSymbol(atom.symbol.to_string()))?;
        if expected != atom.arity() {
            return Err(ModelError::ArityMismatch {
                symbol: atom.symbol.to_string(),
                expected,
                found: atom.arity(),
            });
        }
        Ok(())
    }
}

/// A finite set of facts over a schema.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instance {
    schema: Schema,
    facts: BTreeSet<Fact>,
}

impl Instance {
    pub fn empty(schema: Schema) -> Self {
        Instance {
            schema,
            facts: BTreeSet::new(),
        }
    }

    pub fn from_facts(
        schema: Schema,
        facts: impl IntoIterator<Item = Fact>,
    ) -> Result<Self, ModelError> {
        let mut inst = Instance::empty(schema);
        for f in facts {
            inst.insert(f)?;
        }
        Ok(inst)
    }

    /// Builds an instance whose facts are known to fit `schema`.
    pub(crate) fn trusted(schema: Schema, facts: BTreeSet<Fact>) -> Self {
        debug_assert!(facts
            .iter()
            .all(|f| f.is_ground() && schema.check_atom(f).is_ok()));
        Instance { schema, facts }
    }

    pub fn insert(&mut self, fact: Fact) -> Result<bool, ModelError> {
        self.schema.check_atom(&fact)?;
        if !fact.is_ground() {
            return Err(ModelError::NonGroundFact(fact.to_string()));
        }
        Ok(self.facts.insert(fact))
    }

    pub(crate) fn insert_trusted(&mut self, fact: Fact) -> bool {
        debug_assert!(fact.is_ground() && self.schema.check_atom(&fact).is_ok());
        self.facts.insert(fact)
    }

    pub(crate) fn remove(&mut self, fact: &Fact) -> bool {
        self.facts.remove(fact)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn facts(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    pub fn into_facts(self) -> BTreeSet<Fact> {
        self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    /// Facts of one symbol, in instance order.
    pub fn facts_of<'a>(&'a self, symbol: &'a str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.with_prefix(symbol, Vec::new())
    }

    /// Facts of `symbol` whose leading arguments equal `prefix`.
    pub(crate) fn with_prefix<'a>(
        &'a self,
        symbol: &'a str,
        prefix: Vec<Term>,
    ) -> impl Iterator<Item = &'a Fact> + 'a {
        let low = Atom {
            symbol: name(symbol),
            args: prefix,
        };
        self.facts
            .range(low.clone()..)
            .take_while(move |f| &*f.symbol == symbol && f.args.starts_with(&low.args))
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.terms()
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn nulls(&self) -> BTreeSet<u32> {
        self.terms()
            .filter_map(|t| match t {
                Term::Null(n) => Some(*n),
                _ => None,
            })
            .collect()
    }

    pub fn has_nulls(&self) -> bool {
        self.terms().any(Term::is_null)
    }

    fn terms(&self) -> impl Iterator<Item = &Term> {
        self.facts.iter().flat_map(|f| f.args.iter())
    }

    /// Restriction to the symbols of `schema`, re-typed over that schema.
    pub fn restrict(&self, schema: &Schema) -> Instance {
        Instance {
            schema: schema.clone(),
            facts: self
                .facts
                .iter()
                .filter(|f| schema.contains(&f.symbol))
                .cloned()
                .collect(),
        }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, fact) in self.facts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{fact}")?;
        }
        write!(f, "}}")
    }
}

/// Combines a database instance and a view instance over the union schema.
pub fn disjoint_union(db: &Instance, view: &Instance) -> Result<Instance, ModelError> {
    let schema = db.schema.union(&view.schema)?;
    Ok(Instance {
        schema,
        facts: db.facts.union(&view.facts).cloned().collect(),
    })
}

/// A mapping of labeled nulls to terms; constants map to themselves.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Homomorphism {
    pub mapping: BTreeMap<Term, Term>,
}

impl Homomorphism {
    pub fn apply(&self, t: &Term) -> Term {
        self.mapping.get(t).cloned().unwrap_or_else(|| t.clone())
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        a.map_terms(|t| self.apply(t))
    }
}

/// Searches for a mapping of the nulls of `src` that sends every fact of
/// `src` into `dst`.
pub fn find_homomorphism(src: &Instance, dst: &Instance) -> Option<Homomorphism> {
    let atoms: Vec<Atom> = src.facts.iter().cloned().collect();
    matcher::first_match(&atoms, dst, &Binding::new(), Term::is_null).map(|b| Homomorphism {
        mapping: b,
    })
}

/// A conjunctive query `q(head) :- body`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cq {
    head: Vec<Term>,
    body: Vec<Atom>,
}

impl Cq {
    pub fn new(head: Vec<Term>, body: Vec<Atom>) -> Result<Self, ModelError> {
        let body_vars: BTreeSet<&Name> = body.iter().flat_map(Atom::vars).collect();
        for t in &head {
            match t {
                Term::Var(v) if !body_vars.contains(v) => {
                    return Err(ModelError::UnsafeQuery(v.to_string()))
                }
                Term::Null(_) => return Err(ModelError::UnsafeQuery(t.to_string())),
                _ => {}
            }
        }
        Ok(Cq { head, body })
    }

    /// The boolean query whose body is `inst` with nulls read as variables.
    pub fn boolean_from_instance(inst: &Instance) -> Cq {
        let body = inst
            .facts
            .iter()
            .map(|f| {
                f.map_terms(|t| match t {
                    Term::Null(n) => Term::Var(name(&format!("n{n}"))),
                    other => other.clone(),
                })
            })
            .collect();
        Cq {
            head: Vec::new(),
            body,
        }
    }

    pub fn head(&self) -> &[Term] {
        &self.head
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn arity(&self) -> usize {
        self.head.len()
    }

    pub fn head_vars(&self) -> BTreeSet<Name> {
        self.head
            .iter()
            .filter_map(|t| match t {
                Term::Var(v) => Some(v.clone()),
                _ => None,
            })
            .collect()
    }

    /// Body variables that do not occur in the head, in order of appearance.
    pub fn existential_vars(&self) -> Vec<Name> {
        let head = self.head_vars();
        let mut out: Vec<Name> = Vec::new();
        for v in self.body.iter().flat_map(Atom::vars) {
            if !head.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        }
        out
    }
}

/// Evaluates `q` on `inst` under set semantics; nulls are ordinary values.
pub fn evaluate_cq(q: &Cq, inst: &Instance) -> BTreeSet<Vec<Term>> {
    let mut out = BTreeSet::new();
    let _ = matcher::for_each_match(&q.body, inst, &Binding::new(), Term::is_var, &mut |b| {
        out.insert(q.head.iter().map(|t| matcher::resolve(b, t)).collect());
        std::ops::ControlFlow::Continue(())
    });
    out
}

/// Insertions and deletions turning one instance into another.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct GroundDelta {
    #[serde(serialize_with = "serialize_facts")]
    pub insertions: BTreeSet<Fact>,
    #[serde(serialize_with = "serialize_facts")]
    pub deletions: BTreeSet<Fact>,
}

fn serialize_facts<S: serde::Serializer>(facts: &BTreeSet<Fact>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(facts.iter().map(ToString::to_string))
}

impl GroundDelta {
    pub fn is_empty(&self) -> bool {
        self.insertions.is_empty() && self.deletions.is_empty()
    }

    pub fn apply_to(&self, inst: &Instance) -> Instance {
        let mut facts = inst.facts.clone();
        for d in &self.deletions {
            facts.remove(d);
        }
        facts.extend(self.insertions.iter().cloned());
        Instance {
            schema: inst.schema.clone(),
            facts,
        }
    }
}

pub fn diff(before: &Instance, after: &Instance) -> GroundDelta {
    GroundDelta {
        insertions: after.facts.difference(&before.facts).cloned().collect(),
        deletions: before.facts.difference(&after.facts).cloned().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db(symbols: &[(&str, usize)]) -> Schema {
        Schema::database(symbols).unwrap()
    }

    fn inst(schema: &Schema, facts: Vec<Fact>) -> Instance {
        Instance::from_facts(schema.clone(), facts).unwrap()
    }

    #[test]
    fn union_of_empty_instances_is_empty() {
        let u = disjoint_union(&Instance::empty(db(&[])), &Instance::empty(Schema::default())).unwrap();
        assert!(u.is_empty());
    }

    #[test]
    fn union_combines_facts() {
        let r = db(&[("R", 1)]);
        let v = Schema::view(&[("V", 1)]).unwrap();
        let u = disjoint_union(
            &inst(&r, vec![Atom::fact("R", &["a"])]),
            &inst(&v, vec![Atom::fact("V", &["a"])]),
        )
        .unwrap();
        assert_eq!(u.len(), 2);
        assert!(u.schema().contains("R") && u.schema().contains("V"));
    }

    #[test]
    fn union_rejects_shared_symbols() {
        let r = db(&[("R", 1)]);
        let a = inst(&r, vec![Atom::fact("R", &["a"])]);
        assert_eq!(
            disjoint_union(&a, &a),
            Err(ModelError::SchemaCollision("R".into()))
        );
    }

    #[test]
    fn homomorphism_examples() {
        let r = db(&[("R", 2)]);
        let ab = inst(&r, vec![Atom::fact("R", &["a", "b"])]);
        assert_eq!(find_homomorphism(&ab, &ab), Some(Homomorphism::default()));

        let src = inst(
            &r,
            vec![Atom::new("R", vec![Term::Null(1), Term::constant("b")])],
        );
        let h = find_homomorphism(&src, &ab).unwrap();
        assert_eq!(h.apply(&Term::Null(1)), Term::constant("a"));

        let loop_ = inst(&r, vec![Atom::new("R", vec![Term::Null(1), Term::Null(1)])]);
        assert_eq!(find_homomorphism(&loop_, &ab), None);
    }

    #[test]
    fn cq_projection_and_join() {
        let r = db(&[("R", 2)]);
        let i = inst(&r, vec![Atom::fact("R", &["a", "b"]), Atom::fact("R", &["a", "c"])]);
        let q = Cq::new(
            vec![Term::var("x")],
            vec![Atom::new("R", vec![Term::var("x"), Term::var("y")])],
        )
        .unwrap();
        assert_eq!(evaluate_cq(&q, &i), BTreeSet::from([vec![Term::constant("a")]]));
        assert!(evaluate_cq(&q, &Instance::empty(r)).is_empty());

        let v = Schema::view(&[("V1", 2), ("V2", 2)]).unwrap();
        let j = inst(&v, vec![Atom::fact("V1", &["a", "b"]), Atom::fact("V2", &["b", "c"])]);
        let q = Cq::new(
            vec![Term::var("x"), Term::var("z")],
            vec![
                Atom::new("V1", vec![Term::var("x"), Term::var("y")]),
                Atom::new("V2", vec![Term::var("y"), Term::var("z")]),
            ],
        )
        .unwrap();
        assert_eq!(
            evaluate_cq(&q, &j),
            BTreeSet::from([vec![Term::constant("a"), Term::constant("c")]])
        );
    }

    #[test]
    fn unsafe_query_is_rejected() {
        let err = Cq::new(
            vec![Term::var("x")],
            vec![Atom::new("R", vec![Term::var("y")])],
        )
        .unwrap_err();
        assert_eq!(err, ModelError::UnsafeQuery("x".into()));
    }

    #[test]
    fn diff_examples() {
        let r = db(&[("R", 1)]);
        let a = inst(&r, vec![Atom::fact("R", &["a"])]);
        let ab = inst(&r, vec![Atom::fact("R", &["a"]), Atom::fact("R", &["b"])]);
        let b = inst(&r, vec![Atom::fact("R", &["b"])]);

        assert!(diff(&a, &a).is_empty());
        let d = diff(&a, &ab);
        assert_eq!(d.insertions, BTreeSet::from([Atom::fact("R", &["b"])]));
        assert!(d.deletions.is_empty());
        let d = diff(&a, &b);
        assert_eq!(d.insertions, BTreeSet::from([Atom::fact("R", &["b"])]));
        assert_eq!(d.deletions, BTreeSet::from([Atom::fact("R", &["a"])]));
        assert_eq!(d.apply_to(&a), b);
    }

    #[test]
    fn facts_are_checked_against_the_schema() {
        let r = db(&[("R", 2)]);
        let mut i = Instance::empty(r);
        assert!(matches!(
            i.insert(Atom::fact("R", &["a"])),
            Err(ModelError::ArityMismatch { .. })
        ));
        assert!(matches!(
            i.insert(Atom::fact("S", &["a"])),
            Err(ModelError::UnknownSymbol(_))
        ));
        assert!(matches!(
            i.insert(Atom::new("R", vec![Term::var("x"), Term::constant("a")])),
            Err(ModelError::NonGroundFact(_))
        ));
    }
}

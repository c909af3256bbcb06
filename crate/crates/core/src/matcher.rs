//! Backtracking matcher of atom conjunctions into fact stores. Shared by CQ
//! evaluation, homomorphism search, dependency checking and the chase.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;

use crate::model::{Atom, Fact, Instance, Name, Term};

/// Assignment of flexible terms (variables or nulls) to values.
pub type Binding = BTreeMap<Term, Term>;

pub fn resolve(b: &Binding, t: &Term) -> Term {
    b.get(t).cloned().unwrap_or_else(|| t.clone())
}

pub fn resolve_atom(b: &Binding, a: &Atom) -> Atom {
    a.map_terms(|t| resolve(b, t))
}

/// Something facts can be looked up in by symbol and partially known
/// arguments. Every fact of `symbol` agreeing with the known arguments must
/// be returned, in fact order; extra facts are allowed.
pub trait FactSource {
    fn lookup<'a>(&'a self, symbol: &'a str, pattern: &[Option<Term>]) -> Box<dyn Iterator<Item = &'a Fact> + 'a>;
}

impl FactSource for Instance {
    fn lookup<'a>(&'a self, symbol: &'a str, pattern: &[Option<Term>]) -> Box<dyn Iterator<Item = &'a Fact> + 'a> {
        let prefix: Vec<Term> = pattern.iter().map_while(Clone::clone).collect();
        Box::new(self.with_prefix(symbol, prefix))
    }
}

/// An instance with a per-position index, for workloads that look facts up
/// by non-leading arguments.
#[derive(Debug, Clone, Default)]
pub struct IndexedInstance {
    inst: Instance,
    by_position: HashMap<(Name, usize, Term), BTreeSet<Fact>>,
}

impl IndexedInstance {
    pub fn new(inst: Instance) -> Self {
        let mut out = IndexedInstance {
            inst: Instance::empty(inst.schema().clone()),
            by_position: HashMap::new(),
        };
        for f in inst.into_facts() {
            out.insert(f);
        }
        out
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn into_instance(self) -> Instance {
        self.inst
    }

    pub fn insert(&mut self, fact: Fact) -> bool {
        if self.inst.contains(&fact) {
            return false;
        }
        for (i, t) in fact.args.iter().enumerate() {
            self.by_position
                .entry((fact.symbol.clone(), i, t.clone()))
                .or_default()
                .insert(fact.clone());
        }
        self.inst.insert_trusted(fact)
    }

    pub fn remove(&mut self, fact: &Fact) -> bool {
        if !self.inst.remove(fact) {
            return false;
        }
        for (i, t) in fact.args.iter().enumerate() {
            let key = (fact.symbol.clone(), i, t.clone());
            if let Some(set) = self.by_position.get_mut(&key) {
                set.remove(fact);
                if set.is_empty() {
                    self.by_position.remove(&key);
                }
            }
        }
        true
    }

    /// Every fact with `t` among its arguments.
    pub fn containing(&self, t: &Term) -> BTreeSet<Fact> {
        let mut out = BTreeSet::new();
        for decl in self.inst.schema().symbols() {
            for i in 0..decl.arity {
                if let Some(set) = self.by_position.get(&(decl.name.clone(), i, t.clone())) {
                    out.extend(set.iter().cloned());
                }
            }
        }
        out
    }
}

impl FactSource for IndexedInstance {
    fn lookup<'a>(&'a self, symbol: &'a str, pattern: &[Option<Term>]) -> Box<dyn Iterator<Item = &'a Fact> + 'a> {
        let sym: Name = Name::from(symbol);
        let mut best: Option<&'a BTreeSet<Fact>> = None;
        for (i, t) in pattern.iter().enumerate() {
            let Some(t) = t else { continue };
            match self.by_position.get(&(sym.clone(), i, t.clone())) {
                None => return Box::new(std::iter::empty()),
                Some(set) if best.is_none_or(|b| set.len() < b.len()) => best = Some(set),
                Some(_) => {}
            }
        }
        match best {
            Some(set) => Box::new(set.iter()),
            None => Box::new(self.inst.facts_of(symbol)),
        }
    }
}

/// Greedy join order: repeatedly pick the atom with the most bound
/// arguments, keeping the original order on ties.
fn plan(atoms: &[Atom], init: &Binding, flexible: &dyn Fn(&Term) -> bool) -> Vec<usize> {
    let mut bound: BTreeSet<Term> = init.keys().cloned().collect();
    let mut left: Vec<usize> = (0..atoms.len()).collect();
    let mut order = Vec::with_capacity(atoms.len());
    while !left.is_empty() {
        let score = |i: usize| {
            atoms[i]
                .args
                .iter()
                .filter(|t| !flexible(t) || bound.contains(*t))
                .count()
        };
        let (pos, _) = left
            .iter()
            .enumerate()
            .max_by(|(pa, a), (pb, b)| score(**a).cmp(&score(**b)).then(pb.cmp(pa)))
            .expect("nonempty");
        let i = left.remove(pos);
        bound.extend(atoms[i].args.iter().filter(|t| flexible(t)).cloned());
        order.push(i);
    }
    order
}

/// Calls `f` with every extension of `init` that maps all `atoms` into
/// `inst`. Terms accepted by `flexible` are bound; all others must match
/// literally. Enumeration order is deterministic.
pub fn for_each_match<S: FactSource + ?Sized>(
    atoms: &[Atom],
    inst: &S,
    init: &Binding,
    flexible: impl Fn(&Term) -> bool,
    f: &mut dyn FnMut(&Binding) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let order = plan(atoms, init, &flexible);
    let mut binding = init.clone();
    step(atoms, &order, 0, inst, &mut binding, &flexible, f)
}

fn step<S: FactSource + ?Sized>(
    atoms: &[Atom],
    order: &[usize],
    depth: usize,
    inst: &S,
    binding: &mut Binding,
    flexible: &dyn Fn(&Term) -> bool,
    f: &mut dyn FnMut(&Binding) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let Some(&idx) = order.get(depth) else {
        return f(binding);
    };
    let atom = &atoms[idx];
    let pattern: Vec<Option<Term>> = atom
        .args
        .iter()
        .map(|t| if flexible(t) { binding.get(t).cloned() } else { Some(t.clone()) })
        .collect();
    for fact in inst.lookup(&atom.symbol, &pattern) {
        if fact.args.len() != atom.args.len() {
            continue;
        }
        let mut added: Vec<Term> = Vec::new();
        let mut ok = true;
        for (pat, val) in atom.args.iter().zip(&fact.args) {
            if flexible(pat) {
                match binding.get(pat) {
                    Some(bound) if bound != val => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        binding.insert(pat.clone(), val.clone());
                        added.push(pat.clone());
                    }
                }
            } else if pat != val {
                ok = false;
                break;
            }
        }
        let flow = if ok {
            step(atoms, order, depth + 1, inst, binding, flexible, f)
        } else {
            ControlFlow::Continue(())
        };
        for t in added {
            binding.remove(&t);
        }
        flow?;
    }
    ControlFlow::Continue(())
}

pub fn first_match<S: FactSource + ?Sized>(
    atoms: &[Atom],
    inst: &S,
    init: &Binding,
    flexible: impl Fn(&Term) -> bool,
) -> Option<Binding> {
    let mut found = None;
    let _ = for_each_match(atoms, inst, init, flexible, &mut |b| {
        found = Some(b.clone());
        ControlFlow::Break(())
    });
    found
}

pub fn all_matches<S: FactSource + ?Sized>(
    atoms: &[Atom],
    inst: &S,
    init: &Binding,
    flexible: impl Fn(&Term) -> bool,
) -> Vec<Binding> {
    let mut out = Vec::new();
    let _ = for_each_match(atoms, inst, init, flexible, &mut |b| {
        out.push(b.clone());
        ControlFlow::Continue(())
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Schema;

    #[test]
    fn repeated_variables_must_agree() {
        let s = Schema::database(&[("R", 2)]).unwrap();
        let i = Instance::from_facts(
            s,
            vec![Atom::fact("R", &["a", "a"]), Atom::fact("R", &["a", "b"])],
        )
        .unwrap();
        let q = [Atom::new("R", vec![Term::var("x"), Term::var("x")])];
        let m = all_matches(&q, &i, &Binding::new(), Term::is_var);
        assert_eq!(m.len(), 1);
        assert_eq!(resolve(&m[0], &Term::var("x")), Term::constant("a"));
    }

    #[test]
    fn empty_conjunction_matches_once() {
        let i = Instance::empty(Schema::default());
        assert_eq!(all_matches(&[], &i, &Binding::new(), Term::is_var).len(), 1);
    }
}

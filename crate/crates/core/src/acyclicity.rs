//! Weak acyclicity of tgd sets via the position dependency graph.
//!
//! A position is a pair (symbol, argument index). For every tgd and every
//! body variable `x` there is a regular edge from each body position of `x`
//! to each head position of `x`, and a special edge from each body position
//! of `x` to each position holding an existential variable. Special edges
//! leave every body position, not only those of variables propagated to the
//! head, so `R(x) -> exists y: R(y)` is rejected. The set is accepted iff no
//! cycle goes through a special edge, which guarantees chase termination.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::deps::{ConstraintSet, Dependency, Tgd};
use crate::model::{Name, Term};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Position {
    pub symbol: String,
    /// Zero-based argument index.
    pub index: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.symbol, self.index + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PositionEdge {
    pub from: Position,
    pub to: Position,
    pub special: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PositionGraph {
    pub edges: BTreeSet<PositionEdge>,
}

impl PositionGraph {
    pub fn build<'a>(tgds: impl IntoIterator<Item = &'a Tgd>) -> Self {
        let mut edges = BTreeSet::new();
        for t in tgds {
            let positions_of = |atoms: &[crate::model::Atom], v: &Name| -> Vec<Position> {
                atoms
                    .iter()
                    .flat_map(|a| {
                        a.args.iter().enumerate().filter_map(move |(i, arg)| match arg {
                            Term::Var(w) if w == v => Some(Position {
                                symbol: a.symbol.to_string(),
                                index: i,
                            }),
                            _ => None,
                        })
                    })
                    .collect()
            };
            let existential_positions: Vec<Position> = t
                .existentials()
                .iter()
                .flat_map(|e| positions_of(t.head(), e))
                .collect();
            let body_vars: BTreeSet<&Name> = t.body().iter().flat_map(|a| a.vars()).collect();
            for x in body_vars {
                let head_pos = positions_of(t.head(), x);
                for from in positions_of(t.body(), x) {
                    for to in &head_pos {
                        edges.insert(PositionEdge {
                            from: from.clone(),
                            to: to.clone(),
                            special: false,
                        });
                    }
                    for to in &existential_positions {
                        edges.insert(PositionEdge {
                            from: from.clone(),
                            to: to.clone(),
                            special: true,
                        });
                    }
                }
            }
        }
        PositionGraph { edges }
    }

    fn successors(&self) -> BTreeMap<&Position, Vec<&Position>> {
        let mut succ: BTreeMap<&Position, Vec<&Position>> = BTreeMap::new();
        for e in &self.edges {
            succ.entry(&e.from).or_default().push(&e.to);
        }
        succ
    }

    fn reaches(succ: &BTreeMap<&Position, Vec<&Position>>, from: &Position, to: &Position) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(p) = stack.pop() {
            if p == to {
                return true;
            }
            if seen.insert(p) {
                stack.extend(succ.get(p).into_iter().flatten().copied());
            }
        }
        false
    }

    /// The first special edge lying on a cycle, if any.
    pub fn special_cycle_edge(&self) -> Option<&PositionEdge> {
        let succ = self.successors();
        self.edges
            .iter()
            .filter(|e| e.special)
            .find(|e| Self::reaches(&succ, &e.to, &e.from))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeakAcyclicity {
    pub acyclic: bool,
    pub graph: PositionGraph,
    pub witness: Option<PositionEdge>,
}

pub fn is_weakly_acyclic(cs: &ConstraintSet) -> WeakAcyclicity {
    let graph = PositionGraph::build(cs.deps().filter_map(|d| match d {
        Dependency::Tgd(t) => Some(t),
        Dependency::Egd(_) => None,
    }));
    let witness = graph.special_cycle_edge().cloned();
    WeakAcyclicity {
        acyclic: witness.is_none(),
        graph,
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deps::Provenance;
    use crate::model::Atom;

    fn tgd(body: Vec<Atom>, head: Vec<Atom>) -> Dependency {
        Tgd::infer(body, head).unwrap().into()
    }

    fn a(sym: &str, vars: &[&str]) -> Atom {
        Atom::new(sym, vars.iter().map(|v| Term::var(v)).collect())
    }

    #[test]
    fn empty_set_is_weakly_acyclic() {
        assert!(is_weakly_acyclic(&ConstraintSet::new()).acyclic);
    }

    #[test]
    fn full_tgds_are_weakly_acyclic() {
        let cs = ConstraintSet::from_deps(
            [tgd(vec![a("R", &["x", "y"])], vec![a("S", &["x", "y"])])],
            Provenance::Database,
        );
        let wa = is_weakly_acyclic(&cs);
        assert!(wa.acyclic);
        assert_eq!(wa.graph.edges.len(), 2);
        assert!(wa.graph.edges.iter().all(|e| !e.special));
    }

    #[test]
    fn existential_self_loop_is_not_weakly_acyclic() {
        let cs = ConstraintSet::from_deps(
            [tgd(vec![a("R", &["x"])], vec![a("R", &["y"])])],
            Provenance::Database,
        );
        let wa = is_weakly_acyclic(&cs);
        assert!(!wa.acyclic);
        assert_eq!(
            wa.witness,
            Some(PositionEdge {
                from: Position { symbol: "R".into(), index: 0 },
                to: Position { symbol: "R".into(), index: 0 },
                special: true,
            })
        );

        let cs = ConstraintSet::from_deps(
            [tgd(vec![a("R", &["x", "y"])], vec![a("R", &["y", "z"])])],
            Provenance::Database,
        );
        let wa = is_weakly_acyclic(&cs);
        assert!(!wa.acyclic);
        assert!(wa.witness.unwrap().special);
    }
}

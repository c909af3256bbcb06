//! Random small specifications for corpus building.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use viewlens::deps::{ConstraintSet, Egd, Provenance, Tgd, ViewDefinition, ViewSpec};
use viewlens::model::{Atom, Cq, Schema, SymbolDecl, SymbolKind, Term};
use viewlens::{is_weakly_acyclic, syntax};

fn vars(prefix: &str, n: usize) -> Vec<Term> {
    (1..=n).map(|i| Term::var(&format!("{prefix}{i}"))).collect()
}

/// A random spec over one or two database symbols of arity at most 3, with
/// projection views and at most two weakly acyclic database constraints.
pub fn spec(seed: u64) -> ViewSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let db: Vec<(String, usize)> = ["R", "S"][..rng.gen_range(1..=2)]
        .iter()
        .map(|s| (s.to_string(), rng.gen_range(1..=3)))
        .collect();
    let db_schema = Schema::new(db.iter().map(|(n, a)| SymbolDecl {
        name: n.as_str().into(),
        arity: *a,
        kind: SymbolKind::Database,
    }))
    .expect("distinct names");

    let mut defs = Vec::new();
    let mut view_decls = Vec::new();
    for i in 1..=rng.gen_range(1..=3) {
        let (sym, arity) = db.choose(&mut rng).expect("nonempty");
        let body = vars("x", *arity);
        let mut positions: Vec<usize> = (0..*arity).filter(|_| rng.gen_bool(0.6)).collect();
        if positions.is_empty() {
            positions.push(rng.gen_range(0..*arity));
        }
        let head: Vec<Term> = positions.iter().map(|&p| body[p].clone()).collect();
        let name = format!("V{i}");
        view_decls.push(SymbolDecl {
            name: name.as_str().into(),
            arity: head.len(),
            kind: SymbolKind::View,
        });
        defs.push(ViewDefinition {
            symbol: name.as_str().into(),
            query: Cq::new(head, vec![Atom::new(sym, body)]).expect("head drawn from body"),
        });
    }
    let views = Schema::new(view_decls).expect("distinct names");

    let mut cs = ConstraintSet::new();
    for _ in 0..rng.gen_range(0..=2) {
        let (sym, arity) = db.choose(&mut rng).expect("nonempty").clone();
        if arity >= 2 && rng.gen_bool(0.5) {
            let rhs = rng.gen_range(0..arity);
            let lhs: Vec<usize> = (0..arity).filter(|&p| p != rhs && rng.gen_bool(0.5)).collect();
            let lhs = if lhs.is_empty() { vec![(rhs + 1) % arity] } else { lhs };
            cs.push(Egd::functional(&sym, arity, &lhs, rhs), Provenance::Database);
        } else {
            let (to, to_arity) = db.choose(&mut rng).expect("nonempty").clone();
            let body = vars("x", arity);
            let head: Vec<Term> = (0..to_arity)
                .map(|i| match i < arity && rng.gen_bool(0.7) {
                    true => body[i].clone(),
                    false => Term::var(&format!("e{i}")),
                })
                .collect();
            let tgd = Tgd::infer(vec![Atom::new(&sym, body)], vec![Atom::new(&to, head)]).expect("safe by construction");
            let mut candidate = cs.clone();
            candidate.push(tgd, Provenance::Database);
            if is_weakly_acyclic(&candidate).acyclic {
                cs = candidate;
            }
        }
    }
    ViewSpec::new(db_schema, views, defs, cs).expect("well formed by construction")
}

pub fn spec_text(seed: u64) -> String {
    format!("# generated with seed {seed}\n{}", syntax::print_spec(&spec(seed)))
}

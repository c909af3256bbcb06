use super::*;
use crate::deps::{Dependency, Provenance};
use crate::model::{Atom, SymbolKind, Term};
use crate::updates::{apply, StepKind};

const SPLIT: &str = "
schema R/3.
view V1/2, V2/2.
def V1(x, y) :- R(x, y, z).
def V2(y, z) :- R(x, y, z).
# second position determines the third
egd R(x, y, z), R(x2, y, z2) -> z = z2.
";

#[test]
fn copy_view_spec() {
    let spec = parse_spec("schema R/1. view V/1. def V(x) :- R(x).").unwrap();
    assert_eq!(spec.db_schema().arity("R"), Some(1));
    assert_eq!(spec.view_schema().get("V").unwrap().kind, SymbolKind::View);
    assert_eq!(spec.defs().len(), 1);
    assert!(spec.constraints().is_empty());
}

#[test]
fn unsafe_definition_is_reported_at_the_variable() {
    let err = parse_spec("schema R/1. view V/1.\ndef V(x) :- R(y).").unwrap_err();
    assert_eq!(err.diagnostics.len(), 1);
    let d = &err.diagnostics[0];
    assert_eq!(d.kind, DiagnosticKind::UnsafeRule);
    assert_eq!((d.span.line, d.span.column, d.span.length), (2, 7, 1));
    // undeclared symbols are reported alongside
    let bare = parse_spec("def V(x) :- R(y).").unwrap_err();
    assert!(bare.has(DiagnosticKind::UnsafeRule));
    assert!(bare.has(DiagnosticKind::UnknownSymbol));
}

#[test]
fn embedded_tgd() {
    let spec = parse_spec("schema R/2. schema S/2.\ntgd R(x,y) -> exists z: S(y,z).").unwrap();
    let (dep, prov) = &spec.constraints().entries()[0];
    assert_eq!(*prov, Provenance::Database);
    let Dependency::Tgd(t) = dep else { panic!() };
    assert_eq!(t.existentials().len(), 1);
    assert_eq!(&*t.existentials()[0], "z");
    assert_eq!(t.head()[0], Atom::new("S", vec![Term::var("y"), Term::var("z")]));
}

#[test]
fn split_spec_parses_with_inferred_provenance() {
    let spec = parse_spec(SPLIT).unwrap();
    assert_eq!(spec.view_schema().len(), 2);
    assert_eq!(spec.constraints().entries()[0].1, Provenance::Database);
}

#[test]
fn facts() {
    let schema = Schema::database(&[("R", 2)]).unwrap();
    let inst = parse_facts("R(a,b).", &schema).unwrap();
    assert_eq!(inst.len(), 1);
    assert!(inst.contains(&Atom::fact("R", &["a", "b"])));
    let err = parse_facts("R(a).", &schema).unwrap_err();
    let d = &err.diagnostics[0];
    assert_eq!(d.kind, DiagnosticKind::ArityMismatch);
    assert_eq!((d.span.line, d.span.column), (1, 1));
    assert!(parse_facts("R(a, ?x).", &schema).unwrap_err().has(DiagnosticKind::NonGroundFact));
}

#[test]
fn two_step_update() {
    let vs = Schema::view(&[("V", 2)]).unwrap();
    let u = parse_update("update { insert V(a,b); delete V(x,b) where V(x,b); }", &vs).unwrap();
    assert_eq!(u.steps().len(), 2);
    assert_eq!(u.steps()[0].kind(), StepKind::Insert);
    assert_eq!(u.steps()[0].pattern(), &Atom::fact("V", &["a", "b"]));
    assert_eq!(u.steps()[1].kind(), StepKind::Delete);
    assert!(u.steps()[1].pattern().args.iter().all(Term::is_var));
}

#[test]
fn unbound_identifiers_in_updates_are_constants() {
    let vs = Schema::view(&[("V", 2)]).unwrap();
    let u = parse_update("update { delete V(x, \"b\") }", &vs).unwrap();
    let state = parse_facts("V(a,b). V(c,b). V(a,d).", &vs).unwrap();
    let after = apply(&u, &state).unwrap();
    assert_eq!(after.facts().iter().collect::<Vec<_>>(), vec![&Atom::fact("V", &["a", "d"])]);

    let guarded = parse_update("update guarded { insert V(a, b) where not V(a, _) }", &vs).unwrap();
    assert_eq!(guarded.name().map(|n| &**n), Some("guarded"));
    let crate::updates::Condition::Not(a) = &guarded.steps()[0].condition()[0] else { panic!() };
    assert_eq!(a.args[0], Term::constant("a"));
    assert!(a.args[1].is_var());
}

#[test]
fn update_diagnostics() {
    let vs = Schema::view(&[("V", 2)]).unwrap();
    let e = parse_update("update { insert V(?x, b) }", &vs).unwrap_err();
    assert_eq!(e.diagnostics[0].kind, DiagnosticKind::UnsafeUpdate);
    assert_eq!(e.diagnostics[0].span.column, 19);
    let e = parse_update("update { }", &vs).unwrap_err();
    assert_eq!(e.diagnostics[0].kind, DiagnosticKind::Invalid);
    let e = parse_update("update { insert W(a) }", &vs).unwrap_err();
    assert_eq!(e.diagnostics[0].kind, DiagnosticKind::UnknownSymbol);
}

#[test]
fn spec_diagnostics() {
    let cases: &[(&str, DiagnosticKind, (usize, usize))] = &[
        ("schema R/1 view V/1.", DiagnosticKind::Syntax, (1, 12)),
        ("schema R/1. schema R/2.", DiagnosticKind::DuplicateDeclaration, (1, 20)),
        ("schema R/1. view V/1.\ndef V(x) :- R(x).\ndef V(y) :- R(y).", DiagnosticKind::DuplicateDefinition, (3, 5)),
        ("schema R/1. view V/1.", DiagnosticKind::MissingDefinition, (1, 18)),
        ("schema R/1. view V/1. def V(x) :- R(x, y).", DiagnosticKind::ArityMismatch, (1, 35)),
        ("schema R/1. view V/1. def V(x) :- R(x).\ntgd R(x) -> V(x).", DiagnosticKind::MisplacedConstraint, (2, 13)),
        ("schema R/1. view V/1. def V(x) :- R(x).\n@view tgd R(x) -> R(x).", DiagnosticKind::MisplacedConstraint, (2, 11)),
        ("schema R/2. egd R(x, y) -> x = z.", DiagnosticKind::UnsafeRule, (1, 32)),
        ("schema R/2. tgd R(x, y) -> exists z: R(z, w).", DiagnosticKind::UnsafeRule, (1, 43)),
        ("schema R/1. R(a).", DiagnosticKind::Syntax, (1, 13)),
        ("schema R/1. tgd R(\"a) -> R(b).", DiagnosticKind::Syntax, (1, 19)),
    ];
    for (text, kind, (line, col)) in cases {
        let err = parse_spec(text).unwrap_err();
        let d = &err.diagnostics[0];
        assert_eq!(d.kind, *kind, "{text}: {err}");
        assert_eq!((d.span.line, d.span.column), (*line, *col), "{text}: {err}");
    }
}

#[test]
fn goals() {
    let schema = Schema::database(&[("R", 2), ("S", 2)]).unwrap();
    let g = parse_goal("tgd R(x, y) -> S(y, x).", &schema).unwrap();
    assert!(matches!(g, Dependency::Tgd(_)));
    let g = parse_goal("egd R(x, y), R(x, z) -> y = z.", &schema).unwrap();
    assert!(matches!(g, Dependency::Egd(_)));
    assert!(parse_goal("tgd R(x,y) -> S(x,y). tgd R(x,y) -> S(x,y).", &schema).is_err());
}

#[test]
fn empty_body_tgd() {
    let spec = parse_spec("schema R/1. tgd -> exists x: R(x).").unwrap();
    let Dependency::Tgd(t) = &spec.constraints().entries()[0].0 else { panic!() };
    assert!(t.body().is_empty());
}

#[test]
fn round_trips() {
    let spec = parse_spec(SPLIT).unwrap();
    assert_eq!(parse_spec(&print_spec(&spec)).unwrap(), spec);
    let copy = parse_spec("schema R/1. view V/1. def V(x) :- R(x).").unwrap();
    assert_eq!(parse_spec(&print_spec(&copy)).unwrap(), copy);
    let tgd = parse_spec("schema R/2. schema S/2. tgd R(x,y) -> exists z: S(y,z). tgd -> R(\"a b\", 7).").unwrap();
    assert_eq!(parse_spec(&print_spec(&tgd)).unwrap(), tgd);

    let schema = Schema::database(&[("R", 2)]).unwrap();
    let facts = parse_facts("R(a,b). R(\"x y\", 3). R(\"\", _).", &schema).unwrap();
    assert_eq!(parse_facts(&print_facts(&facts), &schema).unwrap(), facts);

    let vs = Schema::view(&[("V", 2)]).unwrap();
    for text in [
        "update { insert V(a,b); delete V(x,b) where V(x,b); }",
        "update t { replace V(x, \"a\") with V(x, c) where V(c, y), x != y, not V(y, ?z), y = b }",
        "update { insert V(a, b) where not V(a, _) }",
    ] {
        let u = parse_update(text, &vs).unwrap();
        let printed = print_update(&u);
        assert_eq!(parse_update(&printed, &vs).unwrap(), u, "{printed}");
    }
}

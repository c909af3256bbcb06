//! View complements and the constant-complement condition on translations.

use crate::deps::{ConstraintSet, Provenance, SpecError, ViewSpec};
use crate::determinacy::{is_invertible, Invertibility};
use crate::model::{GroundDelta, Instance, Schema};
use crate::options::Options;
use crate::updates::{Reason, TranslatabilityVerdict, Translator, UpdateError, UpdateProgram};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComplementError {
    #[error("view symbol `{0}` is defined by both specifications")]
    SharedViewSymbol(String),
    #[error("the two specifications have different database schemas")]
    DatabaseSchemaMismatch,
    #[error("the two specifications have different database constraints")]
    DatabaseConstraintMismatch,
    #[error("the combined view is not known to be lossless")]
    NotAComplement,
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Update(#[from] UpdateError),
}

/// The view `f ⊕ g` showing both views side by side.
pub fn combine(f: &ViewSpec, g: &ViewSpec) -> Result<ViewSpec, ComplementError> {
    if f.db_schema() != g.db_schema() {
        return Err(ComplementError::DatabaseSchemaMismatch);
    }
    let (fr, gr) = (f.db_constraints(), g.db_constraints());
    if fr.deps().ne(gr.deps()) {
        return Err(ComplementError::DatabaseConstraintMismatch);
    }
    if let Some(s) = g.view_schema().symbols().iter().find(|s| f.view_schema().contains(&s.name)) {
        return Err(ComplementError::SharedViewSymbol(s.name.to_string()));
    }
    let views = Schema::new(
        f.view_schema()
            .symbols()
            .iter()
            .chain(g.view_schema().symbols())
            .cloned(),
    )
    .expect("names checked disjoint");
    let mut cs = fr;
    cs.extend(&ConstraintSet::from_deps(f.view_constraints().deps().cloned(), Provenance::View));
    cs.extend(&ConstraintSet::from_deps(g.view_constraints().deps().cloned(), Provenance::View));
    let defs = f.defs().iter().chain(g.defs()).cloned().collect();
    Ok(ViewSpec::new(f.db_schema().clone(), views, defs, cs)?)
}

/// Whether `g` complements `f`: the combined view is invertible.
pub fn is_complement(f: &ViewSpec, g: &ViewSpec, opts: &Options) -> Result<Invertibility, ComplementError> {
    Ok(is_invertible(&combine(f, g)?, opts))
}

/// How a translation of `u` at `I` relates to the complement `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstantComplement {
    /// The translation leaves `g(I)` unchanged.
    Respected { delta: GroundDelta },
    /// The unique translation changes the complement.
    Violated {
        delta: GroundDelta,
        before: Instance,
        after: Instance,
    },
    /// No translation keeps the complement constant.
    NotTranslatable { reason: Reason, detail: String },
    Unknown(String),
}

impl ConstantComplement {
    pub fn holds(&self) -> Option<bool> {
        match self {
            ConstantComplement::Respected { .. } => Some(true),
            ConstantComplement::Violated { .. } | ConstantComplement::NotTranslatable { .. } => Some(false),
            ConstantComplement::Unknown(_) => None,
        }
    }
}

/// Checks that translating `u` at `I` leaves the complement `g` unchanged.
///
/// When `f` alone is invertible its translation is unique and is checked
/// directly against `g`. Otherwise the translation is the one obtained
/// through `f ⊕ g` with the `g` part held fixed, which exists exactly when a
/// complement-preserving translation does.
pub fn respects_constant_complement(
    f: &ViewSpec,
    g: &ViewSpec,
    u: &UpdateProgram,
    db: &Instance,
    opts: &Options,
) -> Result<ConstantComplement, ComplementError> {
    let combined = combine(f, g)?;
    if is_invertible(&combined, opts).invertible != crate::options::Tri::Yes {
        return Err(ComplementError::NotAComplement);
    }
    let before = g.view_of(db);
    let verdict = match Translator::new(f, opts) {
        Ok(tr) => tr.translatable_at(u, db)?,
        Err(UpdateError::NotInvertible(_) | UpdateError::NoRewriting(_)) => {
            Translator::new(&combined, opts)?.translatable_at(u, db)?
        }
        Err(e) => return Err(e.into()),
    };
    Ok(match verdict {
        TranslatabilityVerdict::Translatable(delta) => {
            let after = g.view_of(&delta.apply_to(db));
            if after.facts() == before.facts() {
                ConstantComplement::Respected { delta }
            } else {
                ConstantComplement::Violated { delta, before, after }
            }
        }
        TranslatabilityVerdict::NotTranslatable { reason, detail } => {
            ConstantComplement::NotTranslatable { reason, detail }
        }
        TranslatabilityVerdict::Unknown(why) => ConstantComplement::Unknown(why),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deps::{Egd, ViewDefinition};
    use crate::model::{name, Atom, Cq, Term};
    use crate::options::Tri;
    use crate::updates::{StepKind, UpdateStep};

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    fn r3() -> Atom {
        Atom::new("R", vec![v("x"), v("y"), v("z")])
    }

    fn proj(view: &str, head: [&str; 2], fd: bool) -> ViewSpec {
        let mut cs = ConstraintSet::new();
        if fd {
            cs.push(Egd::functional("R", 3, &[1], 2), Provenance::Database);
        }
        ViewSpec::new(
            Schema::database(&[("R", 3)]).unwrap(),
            Schema::view(&[(view, 2)]).unwrap(),
            vec![ViewDefinition {
                symbol: name(view),
                query: Cq::new(head.iter().map(|x| v(x)).collect(), vec![r3()]).unwrap(),
            }],
            cs,
        )
        .unwrap()
    }

    fn insert(sym: &str, a: &str, b: &str) -> UpdateProgram {
        UpdateProgram::new(
            None,
            vec![UpdateStep::new(1, StepKind::Insert, Atom::fact(sym, &[a, b]), None, vec![]).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn split_projections_complement_each_other() {
        let o = Options::default();
        let (f, g) = (proj("V1", ["x", "y"], true), proj("V2", ["y", "z"], true));
        assert_eq!(is_complement(&f, &g, &o).unwrap().invertible, Tri::Yes);
        let same = proj("W", ["x", "y"], false);
        assert_eq!(is_complement(&proj("V1", ["x", "y"], false), &same, &o).unwrap().invertible, Tri::No);
        assert!(matches!(combine(&f, &f), Err(ComplementError::SharedViewSymbol(_))));
    }

    #[test]
    fn constant_complement_outcomes() {
        let o = Options::default();
        let (f, g) = (proj("V1", ["x", "y"], true), proj("V2", ["y", "z"], true));
        let db = Instance::from_facts(f.db_schema().clone(), [Atom::fact("R", &["a", "b", "c"])]).unwrap();
        let reuse = respects_constant_complement(&f, &g, &insert("V1", "d", "b"), &db, &o).unwrap();
        assert_eq!(reuse.holds(), Some(true));
        let fresh = respects_constant_complement(&f, &g, &insert("V1", "d", "e"), &db, &o).unwrap();
        assert_eq!(fresh.holds(), Some(false));
    }
}

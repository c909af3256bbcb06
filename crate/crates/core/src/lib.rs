//! Decides invertibility of relational views defined by exact conjunctive
//! queries under embedded dependencies, synthesizes inverse rewritings, and
//! decides and computes translations of view updates onto the database.

pub mod acyclicity;
pub mod chase;
pub mod complement;
pub mod deps;
pub mod determinacy;
pub mod implication;
pub mod matcher;
pub mod model;
pub mod options;
pub mod oracle;
pub mod report;
pub mod syntax;
pub mod updates;

pub use acyclicity::{is_weakly_acyclic, PositionGraph, WeakAcyclicity};
pub use chase::{chase, ChaseOutcome, ChaseResult, DEFAULT_BUDGET};
pub use deps::{classify, exact_view_rules, ConstraintSet, Dependency, Egd, Provenance, Tgd, ViewDefinition, ViewSpec};
pub use model::{diff, disjoint_union, evaluate_cq, find_homomorphism, Atom, Cq, Fact, GroundDelta, Homomorphism, Instance, Schema, Term};
pub use implication::{implies, implies_with, Implication, ImplicationVerdict};
pub use options::{Options, Tri};
pub use oracle::enumerate_models;
pub use determinacy::{determines, is_invertible, synthesize_rewriting, verify_rewriting, DeterminacyVerdict, Rewriting};
pub use updates::{apply, translatable_at, translatable_everywhere, translate, Everywhere, TranslatabilityVerdict, Translator, UpdateProgram, UpdateStep};
pub use complement::{is_complement, respects_constant_complement, ConstantComplement};

//! Machine-readable reports for the command-line front end. Field order is
//! fixed by the struct definitions, so equal inputs give byte-equal JSON.

use std::fmt::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::complement::{combine, respects_constant_complement, ComplementError, ConstantComplement};
use crate::deps::{Dependency, ViewSpec};
use crate::determinacy::{determines, is_invertible, synthesize_rewriting, Certificate, DeterminacyVerdict, Invertibility};
use crate::implication::{implies_with, ImplicationVerdict, Method};
use crate::model::{GroundDelta, Instance};
use crate::options::{Options, Tri};
use crate::oracle::{candidate_facts, domain_with_fresh, search_determinacy_counterexample, DeterminacySearch, ModelEnumerator};
use crate::syntax::{print_fact, print_rewriting};
use crate::updates::{Everywhere, Reason, TranslatabilityVerdict, Translator, UpdateError, UpdateProgram};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(role: &str, path: &str, bytes: &[u8]) -> Self {
        InputDigest {
            role: role.to_string(),
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub operation: String,
    pub subject: Option<String>,
    pub result: String,
    pub detail: Option<String>,
}

impl Verdict {
    fn new(operation: &str, subject: Option<&str>, result: &str, detail: Option<String>) -> Self {
        Verdict {
            operation: operation.to_string(),
            subject: subject.map(str::to_string),
            result: result.to_string(),
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateReport {
    Rewriting {
        target: String,
        query: String,
    },
    ChaseWitness {
        target: String,
        steps: usize,
    },
    Counterexample {
        target: String,
        first: Vec<String>,
        second: Vec<String>,
        view: Vec<String>,
    },
    Countermodel {
        facts: Vec<String>,
    },
    Delta {
        insertions: Vec<String>,
        deletions: Vec<String>,
    },
    FailingState {
        database: Vec<String>,
        view: Vec<String>,
        reason: Reason,
    },
    ComplementChange {
        before: Vec<String>,
        after: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Timing {
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub options: Options,
    pub outcome: Tri,
    pub verdicts: Vec<Verdict>,
    pub certificates: Vec<CertificateReport>,
    /// Only filled on request; wall-clock time would break reproducibility.
    pub timing: Option<Timing>,
}

fn facts(inst: &Instance) -> Vec<String> {
    inst.iter().map(print_fact).collect()
}

fn delta(d: &GroundDelta) -> CertificateReport {
    CertificateReport::Delta {
        insertions: d.insertions.iter().map(print_fact).collect(),
        deletions: d.deletions.iter().map(print_fact).collect(),
    }
}

fn tri_word(t: Tri) -> &'static str {
    match t {
        Tri::Yes => "yes",
        Tri::No => "no",
        Tri::Unknown => "unknown",
    }
}

fn reason_word(r: Reason) -> &'static str {
    match r {
        Reason::InconsistentPostState => "inconsistent-post-state",
        Reason::NoPreimage => "no-preimage",
    }
}

impl Report {
    pub fn new(command: &str, opts: &Options) -> Self {
        Report {
            command: command.to_string(),
            inputs: Vec::new(),
            options: *opts,
            outcome: Tri::Unknown,
            verdicts: Vec::new(),
            certificates: Vec::new(),
            timing: None,
        }
    }

    pub fn with_inputs(mut self, inputs: Vec<InputDigest>) -> Self {
        self.inputs = inputs;
        self
    }

    /// 0 when the question was decided either way, 2 when it stayed open.
    pub fn exit_code(&self) -> i32 {
        match self.outcome {
            Tri::Unknown => 2,
            _ => 0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}: {}", self.command, tri_word(self.outcome));
        for v in &self.verdicts {
            let _ = write!(out, "  {}", v.operation);
            if let Some(s) = &v.subject {
                let _ = write!(out, " {s}");
            }
            let _ = write!(out, ": {}", v.result);
            if let Some(d) = &v.detail {
                let _ = write!(out, " ({d})");
            }
            out.push('\n');
        }
        let list = |xs: &[String]| format!("{{{}}}", xs.join(", "));
        for c in &self.certificates {
            let line = match c {
                CertificateReport::Rewriting { query, .. } => format!("rewriting {query}"),
                CertificateReport::ChaseWitness { target, steps } => {
                    format!("chase witness for {target}: {steps} steps")
                }
                CertificateReport::Counterexample {
                    target,
                    first,
                    second,
                    view,
                } => format!(
                    "counterexample for {target}: {} and {} share view {}",
                    list(first),
                    list(second),
                    list(view)
                ),
                CertificateReport::Countermodel { facts } => format!("countermodel {}", list(facts)),
                CertificateReport::Delta { insertions, deletions } => {
                    let mut parts: Vec<String> = insertions.iter().map(|f| format!("+{f}")).collect();
                    parts.extend(deletions.iter().map(|f| format!("-{f}")));
                    format!("translation {}", list(&parts))
                }
                CertificateReport::FailingState { database, view, reason } => format!(
                    "fails at database {} with view {} ({})",
                    list(database),
                    list(view),
                    reason_word(*reason)
                ),
                CertificateReport::ComplementChange { before, after } => {
                    format!("complement changes from {} to {}", list(before), list(after))
                }
            };
            let _ = writeln!(out, "  {line}");
        }
        if let Some(t) = &self.timing {
            let _ = writeln!(out, "  elapsed: {} ms", t.elapsed_ms);
        }
        out
    }

    fn push_determinacy(&mut self, target: &str, v: &DeterminacyVerdict) {
        match v {
            DeterminacyVerdict::Determined(cert) => {
                self.verdicts.push(Verdict::new("determines", Some(target), "determined", None));
                self.certificates.push(match cert {
                    Certificate::ChaseWitness { steps } => CertificateReport::ChaseWitness {
                        target: target.to_string(),
                        steps: *steps,
                    },
                    Certificate::Rewriting(rw) => CertificateReport::Rewriting {
                        target: target.to_string(),
                        query: print_rewriting(rw),
                    },
                });
            }
            DeterminacyVerdict::NotDetermined(cx) => {
                self.verdicts.push(Verdict::new("determines", Some(target), "not-determined", None));
                self.certificates.push(CertificateReport::Counterexample {
                    target: target.to_string(),
                    first: facts(&cx.first),
                    second: facts(&cx.second),
                    view: facts(&cx.view),
                });
            }
            DeterminacyVerdict::Unknown(why) => {
                self.verdicts
                    .push(Verdict::new("determines", Some(target), "unknown", Some(why.clone())));
            }
        }
    }

    fn push_invertibility(&mut self, inv: &Invertibility) {
        for (sym, v) in &inv.verdicts {
            self.push_determinacy(sym, v);
        }
        self.outcome = inv.invertible;
    }
}

pub fn check_invertibility(spec: &ViewSpec, opts: &Options) -> Report {
    let mut r = Report::new("check-invertibility", opts);
    r.push_invertibility(&is_invertible(spec, opts));
    r
}

/// One rewriting per database symbol; a missing one is explained by a
/// determinacy counterexample when there is one.
pub fn rewrite(spec: &ViewSpec, opts: &Options) -> Report {
    let mut r = Report::new("rewrite", opts);
    let mut outcome = Tri::Yes;
    for s in spec.db_schema().symbols() {
        let target: &str = &s.name;
        match synthesize_rewriting(spec, target, opts).expect("symbol from the schema") {
            Some(rw) => {
                r.verdicts.push(Verdict::new("rewrite", Some(target), "found", None));
                r.certificates.push(CertificateReport::Rewriting {
                    target: target.to_string(),
                    query: print_rewriting(&rw),
                });
            }
            None => match determines(spec, target, opts).expect("symbol from the schema") {
                DeterminacyVerdict::NotDetermined(cx) => {
                    outcome = outcome.and(Tri::No);
                    r.verdicts.push(Verdict::new(
                        "rewrite",
                        Some(target),
                        "none",
                        Some("the view does not determine it".into()),
                    ));
                    r.certificates.push(CertificateReport::Counterexample {
                        target: target.to_string(),
                        first: facts(&cx.first),
                        second: facts(&cx.second),
                        view: facts(&cx.view),
                    });
                }
                _ => {
                    outcome = outcome.and(Tri::Unknown);
                    r.verdicts.push(Verdict::new(
                        "rewrite",
                        Some(target),
                        "unknown",
                        Some(format!("no rewriting with at most {} atoms", opts.max_atoms)),
                    ));
                }
            },
        }
    }
    r.outcome = outcome;
    r
}

/// Whether `g` complements `f`, and optionally whether translating `u` at
/// `db` keeps `g` constant.
pub fn check_complement(
    f: &ViewSpec,
    g: &ViewSpec,
    update: Option<(&UpdateProgram, &Instance)>,
    opts: &Options,
) -> Result<Report, ComplementError> {
    let mut r = Report::new("check-complement", opts);
    let inv = is_invertible(&combine(f, g)?, opts);
    r.push_invertibility(&inv);
    r.verdicts
        .push(Verdict::new("is-complement", None, tri_word(inv.invertible), None));
    let Some((u, db)) = update else {
        return Ok(r);
    };
    if inv.invertible != Tri::Yes {
        return Err(ComplementError::NotAComplement);
    }
    let cc = respects_constant_complement(f, g, u, db, opts)?;
    let (result, detail) = match &cc {
        ConstantComplement::Respected { delta: d } => {
            r.certificates.push(delta(d));
            ("respected", None)
        }
        ConstantComplement::Violated { delta: d, before, after } => {
            r.certificates.push(delta(d));
            r.certificates.push(CertificateReport::ComplementChange {
                before: facts(before),
                after: facts(after),
            });
            ("violated", None)
        }
        ConstantComplement::NotTranslatable { reason, detail } => {
            ("not-translatable", Some(format!("{}: {detail}", reason_word(*reason))))
        }
        ConstantComplement::Unknown(why) => ("unknown", Some(why.clone())),
    };
    r.verdicts.push(Verdict::new("constant-complement", None, result, detail));
    r.outcome = match cc.holds() {
        Some(true) => Tri::Yes,
        Some(false) => Tri::No,
        None => Tri::Unknown,
    };
    Ok(r)
}

/// A translator, or a report explaining why invertibility could not be
/// settled. A view known not to be invertible is an error.
fn translator(command: &str, spec: &ViewSpec, opts: &Options) -> Result<Result<Translator, Report>, UpdateError> {
    match Translator::new(spec, opts) {
        Ok(t) => Ok(Ok(t)),
        Err(UpdateError::NotInvertible(Tri::Unknown)) => {
            let mut r = Report::new(command, opts);
            r.push_invertibility(&is_invertible(spec, opts));
            r.verdicts.push(Verdict::new(
                "invertibility",
                None,
                "unknown",
                Some("translation requires an invertible view".into()),
            ));
            Ok(Err(r))
        }
        Err(e) => Err(e),
    }
}

pub fn translate_at(command: &str, spec: &ViewSpec, u: &UpdateProgram, db: &Instance, opts: &Options) -> Result<Report, UpdateError> {
    let tr = match translator(command, spec, opts)? {
        Ok(t) => t,
        Err(r) => return Ok(r),
    };
    let mut r = Report::new(command, opts);
    let v = tr.translatable_at(u, db)?;
    r.outcome = v.tri();
    match v {
        TranslatabilityVerdict::Translatable(d) => {
            r.verdicts.push(Verdict::new("translatable-at", None, "translatable", None));
            r.certificates.push(delta(&d));
        }
        TranslatabilityVerdict::NotTranslatable { reason, detail } => {
            r.verdicts.push(Verdict::new(
                "translatable-at",
                None,
                "not-translatable",
                Some(format!("{}: {detail}", reason_word(reason))),
            ));
        }
        TranslatabilityVerdict::Unknown(why) => {
            r.verdicts.push(Verdict::new("translatable-at", None, "unknown", Some(why)));
        }
    }
    Ok(r)
}

pub fn translatable_everywhere(spec: &ViewSpec, u: &UpdateProgram, opts: &Options) -> Result<Report, UpdateError> {
    let command = "check-update";
    let tr = match translator(command, spec, opts)? {
        Ok(t) => t,
        Err(r) => return Ok(r),
    };
    let mut r = Report::new(command, opts);
    let v = tr.translatable_everywhere(u)?;
    r.outcome = v.tri();
    match v {
        Everywhere::Yes => r.verdicts.push(Verdict::new("translatable-everywhere", None, "yes", None)),
        Everywhere::No { database, view, reason } => {
            r.verdicts.push(Verdict::new("translatable-everywhere", None, "no", None));
            r.certificates.push(CertificateReport::FailingState {
                database: facts(&database),
                view: facts(&view),
                reason,
            });
        }
        Everywhere::Unknown(why) => {
            r.verdicts
                .push(Verdict::new("translatable-everywhere", None, "unknown", Some(why)))
        }
    }
    Ok(r)
}

/// Whether the constraints of `spec` imply `goal`.
pub fn implication(spec: &ViewSpec, goal: &Dependency, opts: &Options) -> Report {
    let mut r = Report::new("implies", opts);
    let out = implies_with(&spec.global_constraints(), goal, opts, true);
    let method = match out.method {
        Method::Chase => "chase",
        Method::Enumeration => "enumeration",
        Method::None => "none",
    };
    let detail = format!("method {method}, chase steps: {}", out.chase_steps);
    match out.verdict {
        ImplicationVerdict::Valid => {
            r.outcome = Tri::Yes;
            r.verdicts.push(Verdict::new("implies", None, "valid", Some(detail)));
        }
        ImplicationVerdict::Invalid(m) => {
            r.outcome = Tri::No;
            r.verdicts.push(Verdict::new("implies", None, "invalid", Some(detail)));
            r.certificates.push(CertificateReport::Countermodel { facts: facts(&m) });
        }
        ImplicationVerdict::Unknown(why) => {
            r.verdicts
                .push(Verdict::new("implies", None, "unknown", Some(format!("{why}; {detail}"))));
        }
    }
    r
}

/// Brute force over the constants of `spec` plus `k` fresh ones: counts the
/// consistent database instances and looks for pairs with the same view that
/// differ on a database symbol.
pub fn oracle(spec: &ViewSpec, k: usize, opts: &Options) -> Report {
    let mut r = Report::new("oracle", opts);
    let domain = domain_with_fresh(&spec.constants(), k);
    let sigma_v = spec.view_constraints();
    let mut models = ModelEnumerator::new(
        &spec.db_constraints(),
        Instance::empty(spec.db_schema().clone()),
        candidate_facts(spec.db_schema(), &domain),
    )
    .with_limit(opts.search_limit);
    let count = models
        .by_ref()
        .filter(|m| sigma_v.is_satisfied_by(&spec.view_of(m)))
        .count();
    let exhausted = models.is_exhausted();
    r.verdicts.push(Verdict::new(
        "consistent-instances",
        None,
        &count.to_string(),
        Some(format!(
            "domain {{{}}}{}",
            domain.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "),
            if exhausted { "" } else { ", search limit reached" }
        )),
    ));
    let mut outcome = Tri::Yes;
    for s in spec.db_schema().symbols() {
        match search_determinacy_counterexample(spec, &s.name, &domain, opts.search_limit) {
            DeterminacySearch::Counterexample(first, second) => {
                outcome = outcome.and(Tri::No);
                r.verdicts
                    .push(Verdict::new("injective-on-domain", Some(&s.name), "no", None));
                r.certificates.push(CertificateReport::Counterexample {
                    target: s.name.to_string(),
                    view: facts(&spec.view_of(&first)),
                    first: facts(&first),
                    second: facts(&second),
                });
            }
            DeterminacySearch::NotFound { exhaustive: true } => {
                r.verdicts
                    .push(Verdict::new("injective-on-domain", Some(&s.name), "yes", None));
            }
            DeterminacySearch::NotFound { exhaustive: false } => {
                outcome = outcome.and(Tri::Unknown);
                r.verdicts.push(Verdict::new(
                    "injective-on-domain",
                    Some(&s.name),
                    "unknown",
                    Some("search limit reached".into()),
                ));
            }
        }
    }
    r.outcome = outcome;
    r
}

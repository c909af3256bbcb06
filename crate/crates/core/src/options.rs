use serde::Serialize;

use crate::chase::DEFAULT_BUDGET;

pub const DEFAULT_DOMAIN_BOUND: usize = 3;
pub const DEFAULT_MAX_ATOMS: usize = 4;
pub const DEFAULT_SEARCH_LIMIT: usize = 200_000;

/// Resource bounds shared by the decision procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Options {
    /// Maximum number of chase steps per chase run.
    pub budget: usize,
    /// Number of fresh constants used by bounded countermodel searches.
    pub domain_bound: usize,
    /// Maximum number of body atoms of a synthesized rewriting.
    pub max_atoms: usize,
    /// Maximum number of candidate instances examined by one bounded search.
    pub search_limit: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            budget: DEFAULT_BUDGET,
            domain_bound: DEFAULT_DOMAIN_BOUND,
            max_atoms: DEFAULT_MAX_ATOMS,
            search_limit: DEFAULT_SEARCH_LIMIT,
        }
    }
}

impl Options {
    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_domain_bound(mut self, k: usize) -> Self {
        self.domain_bound = k;
        self
    }

    pub fn with_max_atoms(mut self, n: usize) -> Self {
        self.max_atoms = n;
        self
    }

    pub fn with_search_limit(mut self, n: usize) -> Self {
        self.search_limit = n;
        self
    }
}

/// Three-valued answer of a bounded decision procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    /// Conjunction: `No` dominates, then `Unknown`.
    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::No, _) | (_, Tri::No) => Tri::No,
            (Tri::Unknown, _) | (_, Tri::Unknown) => Tri::Unknown,
            _ => Tri::Yes,
        }
    }
}

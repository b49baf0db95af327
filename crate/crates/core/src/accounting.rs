//! Effective-pass accounting shared by the solvers and the benchmark harness.
//!
//! One effective pass is `n` sample visits. Per-sample methods pay one visit
//! per iteration; SCAS pays `n` for the full gradient plus `M_t` for the inner
//! loop of each outer iteration; batch ADMM counts one pass per outer
//! iteration regardless of how many gradient evaluations its inexact inner
//! solver made.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Batch,
    Stoc,
    Sa,
    Scas,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Batch, Method::Stoc, Method::Sa, Method::Scas];

    pub fn name(self) -> &'static str {
        match self {
            Method::Batch => "batch",
            Method::Stoc => "stoc",
            Method::Sa => "sa",
            Method::Scas => "scas",
        }
    }

    pub fn is_stochastic(self) -> bool {
        self != Method::Batch
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method '{s}' (valid methods: batch, stoc, sa, scas)"))
    }
}

/// Raw work counters a solver maintains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PassCounters {
    pub n: usize,
    /// Sample visits charged under the method's accounting rule.
    pub samples_visited: u64,
    pub outer_iterations: u64,
}

/// Effective passes over the data for `method` given its counters.
pub fn effective_pass_of(method: Method, counters: &PassCounters) -> f64 {
    match method {
        Method::Batch => counters.outer_iterations as f64,
        _ => counters.samples_visited as f64 / counters.n as f64,
    }
}

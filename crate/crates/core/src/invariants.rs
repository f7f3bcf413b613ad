//! Named invariant checks recorded during a run rather than trusted.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckStat {
    pub checks: usize,
    pub failures: usize,
    /// Largest observed excess (amount by which the inequality was exceeded).
    pub worst_excess: f64,
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckLog {
    pub stats: BTreeMap<String, CheckStat>,
}

impl CheckLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `lhs ≤ rhs + tol`.
    pub fn le(&mut self, name: &str, lhs: f64, rhs: f64, tol: f64, what: impl FnOnce() -> String) -> bool {
        self.excess(name, lhs - rhs, tol, what)
    }

    /// Records `excess ≤ tol`; NaN counts as failure.
    pub fn excess(&mut self, name: &str, excess: f64, tol: f64, what: impl FnOnce() -> String) -> bool {
        let stat = self.stats.entry(name.to_string()).or_default();
        stat.checks += 1;
        if excess > stat.worst_excess || excess.is_nan() {
            stat.worst_excess = excess;
        }
        let ok = excess <= tol;
        if !ok {
            stat.failures += 1;
            if stat.first_failure.is_none() {
                stat.first_failure = Some(format!("{} (excess {excess:e})", what()));
            }
        }
        ok
    }

    pub fn flag(&mut self, name: &str, ok: bool, what: impl FnOnce() -> String) -> bool {
        self.excess(name, if ok { 0.0 } else { 1.0 }, 0.5, what)
    }

    pub fn merge(&mut self, other: &CheckLog) {
        for (k, v) in &other.stats {
            let s = self.stats.entry(k.clone()).or_default();
            s.checks += v.checks;
            s.failures += v.failures;
            if v.worst_excess > s.worst_excess || v.worst_excess.is_nan() {
                s.worst_excess = v.worst_excess;
            }
            if s.first_failure.is_none() {
                s.first_failure = v.first_failure.clone();
            }
        }
    }

    pub fn all_ok(&self) -> bool {
        self.stats.values().all(|s| s.failures == 0)
    }

    pub fn failures(&self) -> Vec<(String, String)> {
        self.stats
            .iter()
            .filter(|(_, s)| s.failures > 0)
            .map(|(k, s)| (k.clone(), s.first_failure.clone().unwrap_or_default()))
            .collect()
    }

    /// Pass flag per invariant name.
    pub fn flags(&self) -> BTreeMap<String, bool> {
        self.stats.iter().map(|(k, s)| (k.clone(), s.failures == 0)).collect()
    }
}

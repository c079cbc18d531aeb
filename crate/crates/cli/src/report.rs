//! Result of `kmexp test`, as JSON and as an aligned text table.

use std::fmt::Write as _;

use kmexp_core::{BootstrapOutcome, RejectionSide, StatisticId};
use serde::Serialize;

use crate::data::DatasetIdentity;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
}

impl Decision {
    fn label(&self) -> &'static str {
        match self {
            Decision::Reject => "reject",
            Decision::FailToReject => "fail to reject",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestEntry {
    pub statistic: StatisticId,
    pub a: Option<f64>,
    pub rejection_side: RejectionSide,
    pub observed: f64,
    pub p_value: f64,
    pub critical_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_critical_value: Option<f64>,
    pub replications: usize,
    pub decision: Decision,
}

impl From<&BootstrapOutcome> for TestEntry {
    fn from(o: &BootstrapOutcome) -> Self {
        Self {
            statistic: o.statistic,
            a: o.statistic.tuning(),
            rejection_side: o.statistic.rejection_side(),
            observed: o.observed,
            p_value: o.p_value,
            critical_value: o.critical_value,
            lower_critical_value: o.lower_critical_value,
            replications: o.replications,
            decision: if o.rejects() {
                Decision::Reject
            } else {
                Decision::FailToReject
            },
        }
    }
}

/// Everything needed to reproduce the run. Timing is deliberately left out
/// so reruns produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub dataset: DatasetIdentity,
    pub n: usize,
    pub events: usize,
    pub rate_estimate: f64,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    pub results: Vec<TestEntry>,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are always serializable")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "data      {} (sha256 {})", self.dataset.path, &self.dataset.sha256[..12]);
        let _ = writeln!(
            out,
            "n = {}, events = {}, rate estimate = {:.6}",
            self.n, self.events, self.rate_estimate
        );
        let _ = writeln!(
            out,
            "B = {}, alpha = {}, seed = {}\n",
            self.replications, self.alpha, self.seed
        );
        let _ = writeln!(
            out,
            "{:<10}{:>14}{:>10}{:>14}  {}",
            "statistic", "observed", "p-value", "critical", "decision"
        );
        for e in &self.results {
            let _ = writeln!(
                out,
                "{:<10}{:>14.5}{:>10.4}{:>14.5}  {}",
                e.statistic.to_string(),
                e.observed,
                e.p_value,
                e.critical_value,
                e.decision.label()
            );
        }
        out
    }
}

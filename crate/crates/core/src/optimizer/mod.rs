//! Minimum-cost module configuration search.
//!
//! Candidates live in a [`ConfigForest`]: one root per non-empty combination of
//! source modules, expanded with the non-source modules whose inputs are
//! available. Per cycle the forest is refreshed for the situation, dynamic
//! constraints are applied, and the cheapest node meeting the coverage and
//! per-segment performance requirement is selected.

mod constraints;
mod forest;
mod oracle;

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

pub use constraints::{
    ConstraintError, ConstraintRule, DynamicConstraints, RuleCondition, RuleSet, WhitelistEntry,
};
pub use forest::{ConfigForest, ConfigNode};
pub use oracle::{brute_force_optimal, is_relation_valid, BruteForceError, BRUTE_FORCE_MAX_MODULES};

use crate::attention::{PolarRequirementMap, SEGMENTS};
use crate::registry::{ModuleDescriptor, ModuleId};
use crate::situation::Situation;

/// How the provided performance of several modules adds up per segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AggregationMode {
    /// Sources add up; each non-source adds at most the best source covering the segment.
    #[default]
    SourceCapped,
    /// Every covering member adds its full performance.
    PlainAdditive,
}

impl AggregationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregationMode::SourceCapped => "capped",
            AggregationMode::PlainAdditive => "plain",
        }
    }
}

/// Selected module set with its aggregated cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    /// Sorted by id.
    pub modules: Vec<ModuleId>,
    pub cost: f64,
}

impl Configuration {
    pub fn empty() -> Self {
        Self {
            modules: Vec::new(),
            cost: 0.0,
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.modules.iter().any(|m| m.as_str() == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.modules.iter().map(|m| m.as_str()).collect()
    }
}

/// No valid configuration meets the requirement; the caller must degrade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no valid configuration satisfies the coverage and performance requirement")]
pub struct Infeasible;

/// Provided performance per polar segment.
pub fn aggregate_performance(
    members: &[&ModuleDescriptor],
    situation: &Situation,
    mode: AggregationMode,
) -> Vec<f64> {
    let mut out = vec![0.0; SEGMENTS];
    for (seg, slot) in out.iter_mut().enumerate() {
        let covering = members.iter().filter(|m| m.coverage.covers_segment(seg));
        *slot = match mode {
            AggregationMode::PlainAdditive => covering.map(|m| m.performance_for(situation)).sum(),
            AggregationMode::SourceCapped => {
                let mut source_sum = 0.0;
                let mut source_best = 0.0f64;
                for m in covering.clone().filter(|m| m.is_source()) {
                    let p = m.performance_for(situation);
                    source_sum += p;
                    source_best = source_best.max(p);
                }
                let capped: f64 = covering
                    .filter(|m| !m.is_source())
                    .map(|m| m.performance_for(situation).min(source_best))
                    .sum();
                source_sum + capped
            }
        };
    }
    out
}

/// Furthest range reached per segment by any member; `None` where uncovered.
pub fn aggregate_coverage(members: &[&ModuleDescriptor]) -> Vec<Option<f64>> {
    let mut out: Vec<Option<f64>> = vec![None; SEGMENTS];
    for m in members {
        for (seg, slot) in out.iter_mut().enumerate() {
            if m.coverage.covers_segment(seg) {
                let r = m.coverage.range_m;
                *slot = Some(slot.map_or(r, |cur| cur.max(r)));
            }
        }
    }
    out
}

/// Sum of member costs, added in id order.
pub fn aggregate_cost(members: &[&ModuleDescriptor], relevant_region_count: usize) -> f64 {
    let mut sorted: Vec<&&ModuleDescriptor> = members.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    sorted
        .iter()
        .map(|m| m.cost_for(relevant_region_count))
        .fold(0.0, |acc, c| acc + c)
}

/// Every required segment lies inside some member field of view reaching its range.
pub fn coverage_satisfied(coverage: &[Option<f64>], req: &PolarRequirementMap) -> bool {
    req.active_segments()
        .all(|s| coverage[s].is_some_and(|range| range >= req.d_req(s)))
}

/// Provided performance meets the requirement in every required segment.
pub fn performance_satisfied(provided: &[f64], req: &PolarRequirementMap) -> bool {
    req.active_segments().all(|s| provided[s] >= req.p_req(s))
}

/// Orders candidates by cost, then module count, then id list.
pub(crate) fn compare_candidates(a_cost: f64, a: &[ModuleId], b_cost: f64, b: &[ModuleId]) -> Ordering {
    a_cost
        .total_cmp(&b_cost)
        .then(a.len().cmp(&b.len()))
        .then_with(|| a.cmp(b))
}

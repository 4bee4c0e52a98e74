//! Exhaustive search over the power set of the registry. Used as a
//! reference for the forest search; it shares only the aggregation rules.

use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use super::{
    aggregate_cost, aggregate_coverage, aggregate_performance, compare_candidates,
    coverage_satisfied, performance_satisfied, AggregationMode, Configuration, DynamicConstraints,
};
use crate::attention::PolarRequirementMap;
use crate::registry::{ModuleDescriptor, Registry};
use crate::situation::Situation;

pub const BRUTE_FORCE_MAX_MODULES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruteForceError {
    #[error("registry has {0} modules, exhaustive search is limited to 12")]
    TooLarge(usize),
    #[error("no subset satisfies the requirement")]
    Infeasible,
}

/// Relation validity of a module subset: at least one source, no two
/// variants of one category, and every member reachable by repeatedly adding
/// modules whose required categories are already present.
pub fn is_relation_valid(members: &[&ModuleDescriptor]) -> bool {
    if !members.iter().any(|m| m.is_source()) {
        return false;
    }
    for (i, a) in members.iter().enumerate() {
        if members[i + 1..].iter().any(|b| a.is_alternative_to(b)) {
            return false;
        }
    }
    let mut placed: Vec<&ModuleDescriptor> = members.iter().copied().filter(|m| m.is_source()).collect();
    let mut pending: Vec<&ModuleDescriptor> =
        members.iter().copied().filter(|m| !m.is_source()).collect();
    loop {
        let before = pending.len();
        let mut i = 0;
        while i < pending.len() {
            if pending[i].requirements_met(placed.iter().copied()) {
                placed.push(pending.remove(i));
            } else {
                i += 1;
            }
        }
        if pending.is_empty() {
            return true;
        }
        if pending.len() == before {
            return false;
        }
    }
}

pub fn brute_force_optimal(
    registry: &Registry,
    req: &PolarRequirementMap,
    situation: &Situation,
    constraints: &DynamicConstraints,
    aggregation: AggregationMode,
    relevant_region_count: usize,
) -> Result<Configuration, BruteForceError> {
    let all: Vec<&ModuleDescriptor> = registry.modules().collect();
    if all.len() > BRUTE_FORCE_MAX_MODULES {
        return Err(BruteForceError::TooLarge(all.len()));
    }
    if req.is_empty() {
        return Ok(Configuration::empty());
    }
    let mut best: Option<Configuration> = None;
    for mask in 1u32..(1u32 << all.len()) {
        let members: Vec<&ModuleDescriptor> = all
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, m)| *m)
            .collect();
        if !is_relation_valid(&members)
            || !members.iter().all(|m| m.is_valid_in(situation))
            || !constraints.satisfied_by(&members)
            || !coverage_satisfied(&aggregate_coverage(&members), req)
            || !performance_satisfied(&aggregate_performance(&members, situation, aggregation), req)
        {
            continue;
        }
        let mut ids: Vec<_> = members.iter().map(|m| m.id.clone()).collect();
        ids.sort();
        let cost = aggregate_cost(&members, relevant_region_count);
        let better = best.as_ref().is_none_or(|b| {
            compare_candidates(cost, &ids, b.cost, &b.modules) == Ordering::Less
        });
        if better {
            best = Some(Configuration { modules: ids, cost });
        }
    }
    best.ok_or(BruteForceError::Infeasible)
}

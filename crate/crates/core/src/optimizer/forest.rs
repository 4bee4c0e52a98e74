use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{
    aggregate_cost, aggregate_coverage, aggregate_performance, compare_candidates,
    coverage_satisfied, performance_satisfied, AggregationMode, Configuration, DynamicConstraints,
    Infeasible,
};
use crate::attention::PolarRequirementMap;
use crate::registry::{ModuleDescriptor, ModuleId, Registry};
use crate::situation::Situation;

/// One configuration candidate: the modules on the path from its root.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigNode {
    /// Sorted, duplicate-free.
    pub modules: Vec<ModuleId>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Furthest range per polar segment; `None` where no member looks.
    pub agg_coverage: Vec<Option<f64>>,
    /// Provided performance per polar segment for the current situation.
    pub agg_performance: Vec<f64>,
    pub agg_cost: f64,
    situation_valid: bool,
    constraint_valid: bool,
}

impl ConfigNode {
    pub fn valid(&self) -> bool {
        self.situation_valid && self.constraint_valid
    }

    pub fn check_coverage(&self, req: &PolarRequirementMap) -> bool {
        coverage_satisfied(&self.agg_coverage, req)
    }

    pub fn check_performance(&self, req: &PolarRequirementMap) -> bool {
        performance_satisfied(&self.agg_performance, req)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.modules.iter().any(|m| m.as_str() == id)
    }
}

/// Every relation-valid module combination containing at least one source.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigForest {
    nodes: Vec<ConfigNode>,
    roots: Vec<usize>,
    aggregation: AggregationMode,
}

fn descriptors<'a>(registry: &'a Registry, ids: &[ModuleId]) -> Vec<&'a ModuleDescriptor> {
    ids.iter()
        .map(|id| registry.get(id).expect("forest built from this registry"))
        .collect()
}

impl ConfigForest {
    /// Roots are all non-empty source combinations; each node is expanded by
    /// every non-source module whose inputs its members provide. Module sets
    /// reached twice are kept once.
    pub fn build(registry: &Registry, aggregation: AggregationMode) -> Self {
        let sources: Vec<&ModuleDescriptor> = registry.sources().collect();
        let mut root_sets: Vec<Vec<ModuleId>> = Vec::new();
        for mask in 1u64..(1u64 << sources.len()) {
            let picked: Vec<&ModuleDescriptor> = sources
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, m)| *m)
                .collect();
            if has_alternatives(&picked) {
                continue;
            }
            root_sets.push(picked.iter().map(|m| m.id.clone()).collect());
        }
        root_sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

        let mut forest = ConfigForest {
            nodes: Vec::new(),
            roots: Vec::new(),
            aggregation,
        };
        let mut seen: BTreeSet<Vec<ModuleId>> = BTreeSet::new();
        let mut queue = VecDeque::new();
        for set in root_sets {
            seen.insert(set.clone());
            let idx = forest.push(registry, set, None);
            forest.roots.push(idx);
            queue.push_back(idx);
        }
        while let Some(idx) = queue.pop_front() {
            let members = descriptors(registry, &forest.nodes[idx].modules);
            for candidate in registry.non_sources() {
                if members.iter().any(|m| m.id == candidate.id)
                    || members.iter().any(|m| m.is_alternative_to(candidate))
                    || !candidate.requirements_met(members.iter().copied())
                {
                    continue;
                }
                let mut set = forest.nodes[idx].modules.clone();
                set.push(candidate.id.clone());
                set.sort();
                if !seen.insert(set.clone()) {
                    continue;
                }
                let child = forest.push(registry, set, Some(idx));
                forest.nodes[idx].children.push(child);
                queue.push_back(child);
            }
        }
        forest
    }

    fn push(&mut self, registry: &Registry, modules: Vec<ModuleId>, parent: Option<usize>) -> usize {
        let members = descriptors(registry, &modules);
        let agg_coverage = aggregate_coverage(&members);
        let agg_cost = aggregate_cost(&members, 0);
        self.nodes.push(ConfigNode {
            modules,
            parent,
            children: Vec::new(),
            agg_coverage,
            agg_performance: alloc::vec![0.0; crate::attention::SEGMENTS],
            agg_cost,
            situation_valid: true,
            constraint_valid: true,
        });
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[ConfigNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn aggregation(&self) -> AggregationMode {
        self.aggregation
    }

    /// Recomputes situation gates, provided performance, and cost for every
    /// node, and clears constraint invalidation from the previous cycle.
    pub fn update_for_situation(
        &mut self,
        registry: &Registry,
        situation: &Situation,
        relevant_region_count: usize,
    ) {
        let mode = self.aggregation;
        for node in &mut self.nodes {
            let members = descriptors(registry, &node.modules);
            node.situation_valid = members.iter().all(|m| m.is_valid_in(situation));
            node.agg_performance = aggregate_performance(&members, situation, mode);
            node.agg_cost = aggregate_cost(&members, relevant_region_count);
            node.constraint_valid = true;
        }
    }

    /// Invalidates nodes violating the whitelist or blacklist.
    pub fn apply_constraints(&mut self, registry: &Registry, constraints: &DynamicConstraints) {
        if constraints.is_empty() {
            return;
        }
        for node in &mut self.nodes {
            let members = descriptors(registry, &node.modules);
            if !constraints.satisfied_by(&members) {
                node.constraint_valid = false;
            }
        }
    }

    /// Cheapest valid node meeting coverage and per-segment performance.
    /// An empty requirement selects the empty configuration.
    pub fn select_optimal(&self, req: &PolarRequirementMap) -> Result<Configuration, Infeasible> {
        if req.is_empty() {
            return Ok(Configuration::empty());
        }
        let mut best: Option<&ConfigNode> = None;
        for node in &self.nodes {
            if !node.valid() || !node.check_coverage(req) || !node.check_performance(req) {
                continue;
            }
            let better = best.is_none_or(|b| {
                compare_candidates(node.agg_cost, &node.modules, b.agg_cost, &b.modules)
                    == Ordering::Less
            });
            if better {
                best = Some(node);
            }
        }
        best.map(|n| Configuration {
            modules: n.modules.clone(),
            cost: n.agg_cost,
        })
        .ok_or(Infeasible)
    }
}

fn has_alternatives(members: &[&ModuleDescriptor]) -> bool {
    members
        .iter()
        .enumerate()
        .any(|(i, a)| members[i + 1..].iter().any(|b| a.is_alternative_to(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{
        CostModel, Coverage, ModuleType, PerformanceTable, RelationSet, LIDAR_OD, PLAUSIB,
        RADAR_OD, TRACKING_A, TRACKING_B,
    };
    use crate::world::{SubSituation, ZoneTag};
    use alloc::string::String;

    fn source(id: &str, cost: f64) -> ModuleDescriptor {
        ModuleDescriptor {
            id: id.into(),
            category: "od".into(),
            variant: None,
            module_type: ModuleType::Source,
            coverage: Coverage::full(),
            performance: PerformanceTable::new(1.0, 1.0, 1.0),
            cost: CostModel::constant(cost),
            relations: RelationSet::default(),
        }
    }

    fn forest() -> ConfigForest {
        ConfigForest::build(&Registry::reference(), AggregationMode::SourceCapped)
    }

    #[test]
    fn reference_catalog_yields_fifteen_nodes() {
        let f = forest();
        assert_eq!(f.nodes().len(), 15);
        assert_eq!(f.roots().len(), 3);
        let sets: BTreeSet<Vec<String>> = f
            .nodes()
            .iter()
            .map(|n| n.modules.iter().map(|m| m.0.clone()).collect())
            .collect();
        assert_eq!(sets.len(), 15);
        assert!(f.nodes().iter().all(|n| !(n.contains(TRACKING_A) && n.contains(TRACKING_B))));
        assert!(f
            .nodes()
            .iter()
            .filter(|n| n.contains(PLAUSIB))
            .all(|n| n.contains(TRACKING_A) || n.contains(TRACKING_B)));
        for (i, n) in f.nodes().iter().enumerate() {
            if let Some(p) = n.parent {
                assert!(f.nodes()[p].modules.iter().all(|m| n.modules.contains(m)));
                assert!(f.nodes()[p].children.contains(&i));
            }
        }
    }

    #[test]
    fn small_registries() {
        let mut r = Registry::new();
        r.register_module(source("A", 1.0)).unwrap();
        assert_eq!(ConfigForest::build(&r, AggregationMode::SourceCapped).nodes().len(), 1);
        r.register_module(source("B", 1.0)).unwrap();
        r.register_module(source("C", 1.0)).unwrap();
        let f = ConfigForest::build(&r, AggregationMode::SourceCapped);
        assert_eq!(f.roots().len(), 7);
        assert_eq!(f.nodes().len(), 7);
    }

    fn select(situation: Situation, p_req: f64) -> Result<Configuration, Infeasible> {
        let r = Registry::reference();
        let mut f = ConfigForest::build(&r, AggregationMode::SourceCapped);
        f.update_for_situation(&r, &situation, 0);
        f.apply_constraints(&r, &super::super::RuleSet::default().constraints_for(&situation));
        f.select_optimal(&PolarRequirementMap::uniform(p_req, 40.0))
    }

    #[test]
    fn reference_selections() {
        let c = select(Situation::new(ZoneTag::Highway), 2.0).unwrap();
        assert_eq!(c.ids(), [RADAR_OD, TRACKING_A]);
        assert!((c.cost - 0.43).abs() < 1e-12);

        let c = select(Situation::new(ZoneTag::Highway).with(SubSituation::FollowDrive), 2.0).unwrap();
        assert_eq!(c.ids(), [RADAR_OD, TRACKING_B]);
        assert!((c.cost - 0.38).abs() < 1e-12);

        let c = select(Situation::new(ZoneTag::Urban), 2.0).unwrap();
        assert_eq!(c.ids(), [LIDAR_OD, TRACKING_A]);

        let c = select(Situation::new(ZoneTag::Urban), 3.0).unwrap();
        assert_eq!(c.ids(), [LIDAR_OD, PLAUSIB, TRACKING_A]);
        assert!((c.cost - 1.15).abs() < 1e-12);

        let c = select(
            Situation::new(ZoneTag::Urban).with(SubSituation::ComplexIntersection),
            3.0,
        )
        .unwrap();
        assert_eq!(c.ids(), [LIDAR_OD, PLAUSIB, RADAR_OD, TRACKING_A]);
        assert!((c.cost - 1.48).abs() < 1e-12);

        assert_eq!(select(Situation::new(ZoneTag::Urban), 4.0), Err(Infeasible));
        assert_eq!(select(Situation::new(ZoneTag::Urban), 3.5).unwrap().modules.len(), 4);
    }

    #[test]
    fn empty_requirement_selects_nothing() {
        let r = Registry::reference();
        let f = ConfigForest::build(&r, AggregationMode::SourceCapped);
        assert_eq!(f.select_optimal(&PolarRequirementMap::empty()), Ok(Configuration::empty()));
    }

    #[test]
    fn validity_follows_situation_without_memory() {
        let r = Registry::reference();
        let mut f = ConfigForest::build(&r, AggregationMode::SourceCapped);
        let b_nodes = |f: &ConfigForest| {
            f.nodes()
                .iter()
                .filter(|n| n.contains(TRACKING_B))
                .map(|n| n.valid())
                .collect::<Vec<_>>()
        };
        f.update_for_situation(&r, &Situation::new(ZoneTag::Highway).with(SubSituation::FollowDrive), 0);
        assert!(b_nodes(&f).iter().all(|v| *v));
        f.update_for_situation(&r, &Situation::new(ZoneTag::Urban), 0);
        assert!(b_nodes(&f).iter().all(|v| !*v));
        f.update_for_situation(&r, &Situation::new(ZoneTag::Urban).with(SubSituation::FollowDrive), 0);
        assert!(b_nodes(&f).iter().all(|v| *v));
    }

    #[test]
    fn constraints_invalidate_until_next_update() {
        let r = Registry::reference();
        let mut f = ConfigForest::build(&r, AggregationMode::SourceCapped);
        // every node is valid here, so only the constraints decide
        let s = Situation::new(ZoneTag::Urban).with(SubSituation::FollowDrive);
        f.update_for_situation(&r, &s, 0);
        let c = DynamicConstraints::none().forbid(RADAR_OD).unwrap();
        f.apply_constraints(&r, &c);
        assert!(f
            .nodes()
            .iter()
            .all(|n| n.valid() != n.contains(RADAR_OD)));
        let two_od = DynamicConstraints::none().require_category(crate::registry::OBJECT_DETECTION, 2);
        f.update_for_situation(&r, &s, 0);
        f.apply_constraints(&r, &two_od);
        assert!(f
            .nodes()
            .iter()
            .all(|n| n.valid() == (n.contains(RADAR_OD) && n.contains(LIDAR_OD))));
        let before: Vec<bool> = f.nodes().iter().map(|n| n.valid()).collect();
        f.apply_constraints(&r, &DynamicConstraints::none());
        let after: Vec<bool> = f.nodes().iter().map(|n| n.valid()).collect();
        assert_eq!(before, after);
    }
}

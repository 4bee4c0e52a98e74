use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use thiserror::Error;

use crate::registry::{CategoryRequirement, ModuleDescriptor, ModuleId, OBJECT_DETECTION};
use crate::situation::Situation;
use crate::world::{SubSituation, ZoneTag};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum WhitelistEntry {
    Category(CategoryRequirement),
    Module(ModuleId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("module `{0}` is both required and forbidden")]
    Overlap(ModuleId),
}

/// Situation-dependent requirements applied during the search.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DynamicConstraints {
    whitelist: Vec<WhitelistEntry>,
    blacklist: BTreeSet<ModuleId>,
}

impl DynamicConstraints {
    pub fn new(
        whitelist: Vec<WhitelistEntry>,
        blacklist: BTreeSet<ModuleId>,
    ) -> Result<Self, ConstraintError> {
        for entry in &whitelist {
            if let WhitelistEntry::Module(id) = entry {
                if blacklist.contains(id) {
                    return Err(ConstraintError::Overlap(id.clone()));
                }
            }
        }
        Ok(Self {
            whitelist,
            blacklist,
        })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.whitelist.is_empty() && self.blacklist.is_empty()
    }

    pub fn whitelist(&self) -> &[WhitelistEntry] {
        &self.whitelist
    }

    pub fn blacklist(&self) -> &BTreeSet<ModuleId> {
        &self.blacklist
    }

    pub fn require_category(mut self, category: &str, min_count: usize) -> Self {
        self.whitelist.push(WhitelistEntry::Category(CategoryRequirement {
            category: category.into(),
            min_count,
        }));
        self
    }

    pub fn forbid(self, id: &str) -> Result<Self, ConstraintError> {
        let mut blacklist = self.blacklist;
        blacklist.insert(id.into());
        Self::new(self.whitelist, blacklist)
    }

    pub fn satisfied_by(&self, members: &[&ModuleDescriptor]) -> bool {
        if members.iter().any(|m| self.blacklist.contains(&m.id)) {
            return false;
        }
        self.whitelist.iter().all(|entry| match entry {
            WhitelistEntry::Module(id) => members.iter().any(|m| &m.id == id),
            WhitelistEntry::Category(req) => {
                members.iter().filter(|m| m.category == req.category).count() >= req.min_count
            }
        })
    }
}

/// Condition a rule fires on; unset fields match anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RuleCondition {
    pub location: Option<ZoneTag>,
    pub sub: Option<SubSituation>,
}

impl RuleCondition {
    pub fn matches(&self, situation: &Situation) -> bool {
        self.location.is_none_or(|l| l == situation.location)
            && self.sub.is_none_or(|s| situation.has(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintRule {
    pub when: RuleCondition,
    pub require_category: Option<CategoryRequirement>,
    pub require_modules: Vec<ModuleId>,
    pub forbid_modules: Vec<ModuleId>,
}

/// Rules mapping situations to dynamic constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<ConstraintRule>,
}

impl Default for RuleSet {
    /// A complex intersection demands a second object detector.
    fn default() -> Self {
        Self {
            rules: alloc::vec![ConstraintRule {
                when: RuleCondition {
                    location: None,
                    sub: Some(SubSituation::ComplexIntersection),
                },
                require_category: Some(CategoryRequirement {
                    category: OBJECT_DETECTION.into(),
                    min_count: 2,
                }),
                ..ConstraintRule::default()
            }],
        }
    }
}

impl RuleSet {
    /// Rejects rule sets where any module could be required and forbidden at once.
    pub fn new(rules: Vec<ConstraintRule>) -> Result<Self, ConstraintError> {
        let forbidden: BTreeSet<&ModuleId> =
            rules.iter().flat_map(|r| r.forbid_modules.iter()).collect();
        for r in &rules {
            for id in &r.require_modules {
                if forbidden.contains(id) {
                    return Err(ConstraintError::Overlap(id.clone()));
                }
            }
        }
        Ok(Self { rules })
    }

    pub fn empty() -> Self {
        Self { rules: Vec::new() }
    }

    pub fn rules(&self) -> &[ConstraintRule] {
        &self.rules
    }

    pub fn constraints_for(&self, situation: &Situation) -> DynamicConstraints {
        let mut whitelist = Vec::new();
        let mut blacklist = BTreeSet::new();
        for rule in self.rules.iter().filter(|r| r.when.matches(situation)) {
            if let Some(req) = &rule.require_category {
                whitelist.push(WhitelistEntry::Category(req.clone()));
            }
            whitelist.extend(rule.require_modules.iter().cloned().map(WhitelistEntry::Module));
            blacklist.extend(rule.forbid_modules.iter().cloned());
        }
        DynamicConstraints::new(whitelist, blacklist).expect("rule set validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{Registry, LIDAR_OD, RADAR_OD, TRACKING_A};

    #[test]
    fn overlap_is_rejected() {
        let wl = alloc::vec![WhitelistEntry::Module(RADAR_OD.into())];
        let bl = BTreeSet::from([ModuleId::from(RADAR_OD)]);
        assert!(DynamicConstraints::new(wl, bl).is_err());
        let rules = alloc::vec![
            ConstraintRule {
                require_modules: alloc::vec![LIDAR_OD.into()],
                ..Default::default()
            },
            ConstraintRule {
                forbid_modules: alloc::vec![LIDAR_OD.into()],
                ..Default::default()
            },
        ];
        assert!(RuleSet::new(rules).is_err());
    }

    #[test]
    fn default_rule_fires_on_complex_intersection() {
        let rs = RuleSet::default();
        assert!(rs.constraints_for(&Situation::new(ZoneTag::Urban)).is_empty());
        let c = rs.constraints_for(
            &Situation::new(ZoneTag::Urban).with(SubSituation::ComplexIntersection),
        );
        let r = Registry::reference();
        let get = |id: &str| r.get(&id.into()).unwrap();
        assert!(!c.satisfied_by(&[get(LIDAR_OD), get(TRACKING_A)]));
        assert!(c.satisfied_by(&[get(LIDAR_OD), get(RADAR_OD)]));
    }
}
